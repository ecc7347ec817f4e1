/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

// Independent reference implementations used to check the library. These
// deliberately share no code with the implementation they verify.

#include "core/rng.hpp"
#include "core/tensor.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace syq::test {

// Naive six-loop cross-correlation; per-output accumulation over (c, kh, kw)
// with explicit zero padding.
inline Tensor4 naive_conv2d(const Tensor4 &input, const Tensor4 &weights, int stride,
                            int pad) {
    const int B = input.n, C = input.c, N = weights.n, K = weights.h;
    const int OH = (input.h + 2 * pad - K) / stride + 1;
    const int OW = (input.w + 2 * pad - K) / stride + 1;
    Tensor4 out(B, N, OH, OW);
    for (int b = 0; b < B; ++b)
        for (int n = 0; n < N; ++n)
            for (int oh = 0; oh < OH; ++oh)
                for (int ow = 0; ow < OW; ++ow) {
                    double acc = 0.0;
                    for (int c = 0; c < C; ++c)
                        for (int kh = 0; kh < K; ++kh)
                            for (int kw = 0; kw < K; ++kw) {
                                const int ih = oh * stride + kh - pad;
                                const int iw = ow * stride + kw - pad;
                                const double x = (ih >= 0 && ih < input.h && iw >= 0 &&
                                                  iw < input.w)
                                                     ? input.at(b, c, ih, iw)
                                                     : 0.0;
                                acc += weights.at(n, c, kh, kw) * x;
                            }
                    out.at(b, n, oh, ow) = acc;
                }
    return out;
}

// Dense triple-loop matrix product.
inline Mat naive_matmul(const Mat &a, const Mat &b) {
    Mat out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            for (int k = 0; k < a.cols; ++k) acc += a.at(i, k) * b.at(k, j);
            out.at(i, j) = acc;
        }
    return out;
}

// Central finite difference of a scalar function with respect to one buffer.
// Checks each analytic gradient entry at tolerance rel_tol; returns the worst
// relative error.
inline double finite_diff_check(std::vector<double> &params,
                                const std::function<double()> &loss_fn,
                                const std::vector<double> &analytic, double step = 1e-5) {
    double worst = 0.0;
    for (size_t i = 0; i < params.size(); ++i) {
        const double keep = params[i];
        params[i] = keep + step;
        const double up = loss_fn();
        params[i] = keep - step;
        const double down = loss_fn();
        params[i] = keep;
        const double numeric = (up - down) / (2.0 * step);
        const double scale = std::max({std::fabs(numeric), std::fabs(analytic[i]), 1e-8});
        worst = std::max(worst, std::fabs(numeric - analytic[i]) / scale);
    }
    return worst;
}

inline void fill_uniform(std::vector<double> &v, Rng &rng, double lo, double hi) {
    for (double &x : v) x = rng.uniform(lo, hi);
}

} // namespace syq::test
