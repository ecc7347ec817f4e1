/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "core/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace syq {

ScaleVector init_scales(std::span<const double> weights, const SubgroupIndex &groups) {
    if (groups.group_of.size() != weights.size())
        throw std::invalid_argument("init_scales: subgroup index covers " +
                                    std::to_string(groups.group_of.size()) +
                                    " coordinates, layer has " + std::to_string(weights.size()));
    if (groups.group_count == 0 || groups.group_size == 0)
        throw std::invalid_argument("init_scales: empty subgroup");

    ScaleVector sv;
    sv.alpha.assign(groups.group_count, 0.0);
    for (size_t j = 0; j < weights.size(); ++j) {
        if (!std::isfinite(weights[j]))
            throw std::invalid_argument("init_scales: non-finite weight");
        sv.alpha[groups.group_of[j]] += std::fabs(weights[j]);
    }
    for (double &a : sv.alpha) {
        a /= static_cast<double>(groups.group_size);
        a = std::max(a, kMinScale);
    }
    return sv;
}

double layerwise_scale(std::span<const double> weights) {
    if (weights.empty()) throw std::invalid_argument("layerwise_scale: empty weight set");
    double sum = 0.0;
    for (double v : weights) sum += std::fabs(v);
    return sum / static_cast<double>(weights.size());
}

std::vector<double> scale_gradient(std::span<const double> grad_scaled_w,
                                   const MaskedQuant &q, const SubgroupIndex &groups,
                                   const ScaleVector &alpha_for_literal,
                                   bool literal_form) {
    if (grad_scaled_w.size() != q.q.size() || grad_scaled_w.size() != groups.group_of.size())
        throw std::invalid_argument("scale_gradient: mismatched sizes");
    std::vector<double> grad_alpha(groups.group_count, 0.0);
    if (!literal_form) {
        for (size_t j = 0; j < grad_scaled_w.size(); ++j)
            grad_alpha[groups.group_of[j]] += grad_scaled_w[j] * static_cast<double>(q.q[j]);
    } else {
        if (alpha_for_literal.alpha.size() != groups.group_count)
            throw std::invalid_argument("scale_gradient: literal form needs current scales");
        for (size_t j = 0; j < grad_scaled_w.size(); ++j) {
            const uint32_t g = groups.group_of[j];
            grad_alpha[g] += alpha_for_literal.alpha[g] * grad_scaled_w[j];
        }
    }
    return grad_alpha;
}

void update_scales(ScaleState &state, double learning_rate) {
    if (learning_rate <= 0.0)
        throw std::invalid_argument("update_scales: learning rate must be positive");
    if (state.grad_alpha.size() != state.alpha.alpha.size())
        throw std::invalid_argument("update_scales: gradient length mismatch");
    for (size_t g = 0; g < state.alpha.alpha.size(); ++g)
        state.alpha.alpha[g] =
            std::max(state.alpha.alpha[g] - learning_rate * state.grad_alpha[g], kMinScale);
    ++state.step;
}

} // namespace syq
