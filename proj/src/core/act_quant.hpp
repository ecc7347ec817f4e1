/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include <cmath>
#include <stdexcept>

namespace syq {

// Uniform unsigned fixed-point activation quantizer: k total bits, f
// fractional bits, upper bound M = 2^(k-f) - 2^(-f). The codebook is
// {0, 2^-f, 2*2^-f, ..., M} with exactly 2^k levels.
struct ActQuantConfig {
    int k = 8;
    int f = 8;

    double upper_bound() const { return std::ldexp(1.0, k - f) - std::ldexp(1.0, -f); }

    void validate() const {
        if (k < 1 || k > 16) throw std::invalid_argument("act quant: k outside [1, 16]");
        if (f < 0 || f > k) throw std::invalid_argument("act quant: f outside [0, k]");
    }
};

// G(x) = 2^-f * floor(2^f * x + 1/2) after clamping x to [0, M]. Idempotent
// and monotone; |G(x) - x| <= 2^-(f+1) on [0, M].
inline double quantize_activation(double x, const ActQuantConfig &cfg) {
    const double m = cfg.upper_bound();
    if (x < 0.0) x = 0.0;
    else if (x > m) x = m;
    return std::ldexp(std::floor(std::ldexp(x, cfg.f) + 0.5), -cfg.f);
}

// Pass-through estimator with the gradient zeroed outside the clamp range:
// grad_x = grad_G where 0 <= x <= M, else 0.
inline double act_ste_backward(double grad_g, double x, const ActQuantConfig &cfg) {
    return (x >= 0.0 && x <= cfg.upper_bound()) ? grad_g : 0.0;
}

} // namespace syq
