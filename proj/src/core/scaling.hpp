/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include "core/subgroups.hpp"
#include "core/weight_quant.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace syq {

// Scaling coefficients stay strictly positive; updates that would cross zero
// clamp here instead.
inline constexpr double kMinScale = 1e-8;

struct ScaleState {
    ScaleVector alpha;
    std::vector<double> grad_alpha;
    int64_t step = 0;
};

// alpha0[g] = mean |W| over subgroup g.
ScaleVector init_scales(std::span<const double> weights, const SubgroupIndex &groups);

// Mean absolute value of the whole layer (the one-coefficient baseline).
double layerwise_scale(std::span<const double> weights);

// Gradient of the loss w.r.t. each scaling coefficient with the quantized
// codes held fixed: grad_alpha[g] = sum_{j in g} grad_scaled_w[j] * q[j].
// literal_form instead sums the straight-through weight gradients
// alpha[g] * grad_scaled_w[j] over the subgroup; it exists for
// experimentation only and is not a valid gradient of the forward map.
std::vector<double> scale_gradient(std::span<const double> grad_scaled_w,
                                   const MaskedQuant &q, const SubgroupIndex &groups,
                                   const ScaleVector &alpha_for_literal = {},
                                   bool literal_form = false);

// Plain SGD step with the positivity clamp; increments step.
void update_scales(ScaleState &state, double learning_rate);

} // namespace syq
