/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "core/weight_quant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace syq {

double compute_threshold(std::span<const double> weights, QuantMode mode) {
    if (weights.empty())
        throw std::invalid_argument("compute_threshold: empty weight set");
    if (mode == QuantMode::Binary) return 0.0;
    double maxabs = 0.0;
    for (double v : weights) {
        if (!std::isfinite(v))
            throw std::invalid_argument("compute_threshold: non-finite weight");
        maxabs = std::max(maxabs, std::fabs(v));
    }
    return 0.05 * maxabs;
}

MaskedQuant quantize_weights(std::span<const double> weights, double eta) {
    if (eta < 0.0) throw std::invalid_argument("quantize_weights: negative threshold");
    MaskedQuant out;
    out.eta = eta;
    out.q.resize(weights.size());
    out.mask.resize(weights.size());
    for (size_t j = 0; j < weights.size(); ++j) {
        const double v = weights[j];
        if (std::isnan(v)) throw std::invalid_argument("quantize_weights: NaN weight");
        // Boundary |W| == eta keeps the weight; sign(0) := +1 (reachable only
        // when eta == 0).
        const bool keep = std::fabs(v) >= eta;
        out.mask[j] = keep ? 1 : 0;
        out.q[j] = keep ? (v < 0.0 ? int8_t{-1} : int8_t{1}) : int8_t{0};
    }
    return out;
}

bool is_symmetric(const Codebook &cb) {
    std::vector<double> pos, neg;
    for (double v : cb.values) {
        if (v > 0.0) pos.push_back(v);
        else if (v < 0.0) neg.push_back(-v);
    }
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
    pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
    neg.erase(std::unique(neg.begin(), neg.end()), neg.end());
    return pos == neg;
}

std::vector<double> ste_weight_grad(std::span<const double> grad_q,
                                    const ScaleVector &alpha,
                                    const SubgroupIndex &groups) {
    if (groups.group_of.size() != grad_q.size())
        throw std::invalid_argument("ste_weight_grad: subgroup index covers " +
                                    std::to_string(groups.group_of.size()) +
                                    " coordinates, gradient has " +
                                    std::to_string(grad_q.size()));
    std::vector<double> grad_w(grad_q.size());
    for (size_t j = 0; j < grad_q.size(); ++j) {
        const uint32_t g = groups.group_of[j];
        if (g >= alpha.alpha.size())
            throw std::invalid_argument("ste_weight_grad: coordinate " + std::to_string(j) +
                                        " maps to subgroup " + std::to_string(g) +
                                        " with no scale");
        grad_w[j] = alpha.alpha[g] * grad_q[j];
    }
    return grad_w;
}

} // namespace syq
