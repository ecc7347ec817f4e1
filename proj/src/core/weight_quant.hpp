/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include "core/subgroups.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace syq {

enum class QuantMode : uint8_t { Binary = 0, Ternary = 1 };

// Piecewise-constant weight quantization result: q = sign(W) masked by
// |W| >= eta. q entries are in {-1, 0, +1}; mask[i] == 0 iff q[i] == 0.
// Shape is owned by the caller; storage is the flat row-major view of the
// source weights.
struct MaskedQuant {
    std::vector<int8_t> q;
    std::vector<uint8_t> mask;
    double eta = 0.0;
};

// Finite ordered value set; distinct and sorted ascending.
struct Codebook {
    std::vector<double> values;
};

// Binary mode: 0. Ternary mode: 0.05 * max|W|.
double compute_threshold(std::span<const double> weights, QuantMode mode);

// q = sign(W) with sign(0) := +1, zeroed wherever |W| < eta.
MaskedQuant quantize_weights(std::span<const double> weights, double eta);

// True when every positive entry has an equal-magnitude negative partner and
// vice versa; zeros are ignored.
bool is_symmetric(const Codebook &cb);

// Straight-through weight gradient: grad_W[j] = alpha[group(j)] * grad_q[j].
// With all alpha == 1 this is the plain pass-through estimator.
std::vector<double> ste_weight_grad(std::span<const double> grad_q,
                                    const ScaleVector &alpha,
                                    const SubgroupIndex &groups);

} // namespace syq
