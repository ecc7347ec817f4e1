/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include "core/tensor.hpp"

#include <utility>
#include <vector>

namespace syq {

// Hand-written forward/backward for the fixed layer set. All computation is
// in 64-bit reals with a fixed per-output accumulation order (innermost index
// fastest), so results are bit-reproducible and independent of thread count.

// Batch-norm epsilon shared by the training and inference paths.
inline constexpr double kBnEps = 1e-5;

struct Conv2dCache {
    Tensor4 input;
    Tensor4 weights;
    int stride = 1;
    int pad = 0;
    int out_h = 0, out_w = 0;
};

// Cross-correlation (no kernel flip). input (B,I,F,F), weights (N,I,K,K).
// Output spatial size floor((F + 2*pad - K)/stride) + 1. Per-output
// accumulation order: (c, kh, kw) ascending.
Tensor4 conv2d_forward(const Tensor4 &input, const Tensor4 &weights, int stride,
                       int pad, Conv2dCache *cache = nullptr);

// Gradients of a scalar loss w.r.t. input and weights of the matching
// forward call. Throws std::invalid_argument when grad_out does not match
// the cached forward output.
std::pair<Tensor4, Tensor4> conv2d_backward(const Tensor4 &grad_out,
                                            const Conv2dCache &cache);

struct FcCache {
    Mat input;
    Mat weights;
};

// out = weights * input with weights (H x L) and input (L x batch).
Mat fc_forward(const Mat &input, const Mat &weights, FcCache *cache = nullptr);
std::pair<Mat, Mat> fc_backward(const Mat &grad_out, const FcCache &cache);

struct BatchNormParams {
    std::vector<double> gamma, beta;
    std::vector<double> running_mean, running_var;

    explicit BatchNormParams(int channels = 0)
        : gamma(channels, 1.0), beta(channels, 0.0), running_mean(channels, 0.0),
          running_var(channels, 1.0) {}
    int channels() const { return static_cast<int>(gamma.size()); }
};

struct BatchNormCache {
    Tensor4 xhat;
    std::vector<double> inv_std;
    int count_per_channel = 0;
};

// Per-channel batch normalization over (batch, height, width). Training mode
// uses biased batch statistics and updates the running estimates in place
// (running <- (1-momentum)*running + momentum*batch); it requires batch >= 2.
// Inference mode normalizes with the running estimates.
Tensor4 batchnorm_forward(const Tensor4 &x, BatchNormParams &params, bool training,
                          double eps, double momentum, BatchNormCache *cache = nullptr);

struct BatchNormGrads {
    Tensor4 grad_input;
    std::vector<double> grad_gamma, grad_beta;
};

BatchNormGrads batchnorm_backward(const Tensor4 &grad_out, const Tensor4 &x,
                                  const BatchNormParams &params,
                                  const BatchNormCache &cache);

// Mean cross-entropy over the batch. logits is (classes x batch); targets are
// class indices, one per column. grad_logits is d(loss)/d(logits); each
// column sums to zero.
std::pair<double, Mat> softmax_cross_entropy(const Mat &logits,
                                             const std::vector<int32_t> &targets);

} // namespace syq
