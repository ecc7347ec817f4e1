/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "core/nn_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace syq {

namespace {

int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

} // namespace

Tensor4 conv2d_forward(const Tensor4 &input, const Tensor4 &weights, int stride,
                       int pad, Conv2dCache *cache) {
    if (stride <= 0) throw std::invalid_argument("conv2d: stride must be positive");
    if (pad < 0) throw std::invalid_argument("conv2d: pad must be non-negative");
    if (input.c != weights.c)
        throw std::invalid_argument("conv2d: input channels != weight channels (input " +
                                    input.shape_str() + ", weights " + weights.shape_str() + ")");
    const int K = weights.h;
    if (weights.w != K)
        throw std::invalid_argument("conv2d: non-square kernel in weights " + weights.shape_str());
    if (input.h + 2 * pad < K || input.w + 2 * pad < K)
        throw std::invalid_argument("conv2d: kernel larger than padded input (input " +
                                    input.shape_str() + ", weights " + weights.shape_str() + ")");

    const int B = input.n, C = input.c, N = weights.n;
    const int OH = conv_out_dim(input.h, K, stride, pad);
    const int OW = conv_out_dim(input.w, K, stride, pad);
    Tensor4 out(B, N, OH, OW);

    // Accumulates into the output over (c, kh, kw); each output element sees
    // the same floating-point sequence as a naive per-output loop.
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < B; ++b) {
        for (int n = 0; n < N; ++n) {
            double *out_bn = &out.data[out.index(b, n, 0, 0)];
            for (int c = 0; c < C; ++c) {
                const double *in_bc = &input.data[input.index(b, c, 0, 0)];
                for (int kh = 0; kh < K; ++kh) {
                    for (int kw = 0; kw < K; ++kw) {
                        const double wv = weights.at(n, c, kh, kw);
                        if (wv == 0.0) continue;
                        for (int oh = 0; oh < OH; ++oh) {
                            const int ih = oh * stride + kh - pad;
                            if (ih < 0 || ih >= input.h) continue;
                            double *orow = out_bn + static_cast<int64_t>(oh) * OW;
                            const double *irow = in_bc + static_cast<int64_t>(ih) * input.w;
                            for (int ow = 0; ow < OW; ++ow) {
                                const int iw = ow * stride + kw - pad;
                                if (iw < 0 || iw >= input.w) continue;
                                orow[ow] += wv * irow[iw];
                            }
                        }
                    }
                }
            }
        }
    }

    if (cache) {
        cache->input = input;
        cache->weights = weights;
        cache->stride = stride;
        cache->pad = pad;
        cache->out_h = OH;
        cache->out_w = OW;
    }
    return out;
}

std::pair<Tensor4, Tensor4> conv2d_backward(const Tensor4 &grad_out,
                                            const Conv2dCache &cache) {
    const Tensor4 &input = cache.input;
    const Tensor4 &weights = cache.weights;
    if (grad_out.n != input.n || grad_out.c != weights.n || grad_out.h != cache.out_h ||
        grad_out.w != cache.out_w)
        throw std::invalid_argument("conv2d_backward: grad_out " + grad_out.shape_str() +
                                    " does not match cached forward output " +
                                    std::to_string(input.n) + "x" + std::to_string(weights.n) +
                                    "x" + std::to_string(cache.out_h) + "x" +
                                    std::to_string(cache.out_w));

    const int B = input.n, C = input.c, N = weights.n, K = weights.h;
    const int OH = cache.out_h, OW = cache.out_w;
    const int stride = cache.stride, pad = cache.pad;

    Tensor4 grad_input(input.n, input.c, input.h, input.w);
    Tensor4 grad_weights(weights.n, weights.c, weights.h, weights.w);

#pragma omp parallel for schedule(static)
    for (int b = 0; b < B; ++b) {
        for (int n = 0; n < N; ++n) {
            const double *go = &grad_out.data[grad_out.index(b, n, 0, 0)];
            for (int c = 0; c < C; ++c) {
                double *gi = &grad_input.data[grad_input.index(b, c, 0, 0)];
                for (int kh = 0; kh < K; ++kh) {
                    for (int kw = 0; kw < K; ++kw) {
                        const double wv = weights.at(n, c, kh, kw);
                        for (int oh = 0; oh < OH; ++oh) {
                            const int ih = oh * stride + kh - pad;
                            if (ih < 0 || ih >= input.h) continue;
                            const double *grow = go + static_cast<int64_t>(oh) * OW;
                            double *girow = gi + static_cast<int64_t>(ih) * input.w;
                            for (int ow = 0; ow < OW; ++ow) {
                                const int iw = ow * stride + kw - pad;
                                if (iw < 0 || iw >= input.w) continue;
                                girow[iw] += wv * grow[ow];
                            }
                        }
                    }
                }
            }
        }
    }

#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
        for (int b = 0; b < B; ++b) {
            const double *go = &grad_out.data[grad_out.index(b, n, 0, 0)];
            for (int c = 0; c < C; ++c) {
                const double *in_bc = &input.data[input.index(b, c, 0, 0)];
                for (int kh = 0; kh < K; ++kh) {
                    for (int kw = 0; kw < K; ++kw) {
                        double acc = 0.0;
                        for (int oh = 0; oh < OH; ++oh) {
                            const int ih = oh * stride + kh - pad;
                            if (ih < 0 || ih >= input.h) continue;
                            const double *grow = go + static_cast<int64_t>(oh) * OW;
                            const double *irow = in_bc + static_cast<int64_t>(ih) * input.w;
                            for (int ow = 0; ow < OW; ++ow) {
                                const int iw = ow * stride + kw - pad;
                                if (iw < 0 || iw >= input.w) continue;
                                acc += grow[ow] * irow[iw];
                            }
                        }
                        grad_weights.at(n, c, kh, kw) += acc;
                    }
                }
            }
        }
    }

    return {std::move(grad_input), std::move(grad_weights)};
}

Mat fc_forward(const Mat &input, const Mat &weights, FcCache *cache) {
    if (weights.cols != input.rows)
        throw std::invalid_argument("fc: weights " + weights.shape_str() +
                                    " incompatible with input " + input.shape_str());
    const int H = weights.rows, L = weights.cols, B = input.cols;
    Mat out(H, B);
#pragma omp parallel for schedule(static)
    for (int h = 0; h < H; ++h) {
        double *orow = &out.data[static_cast<int64_t>(h) * B];
        const double *wrow = &weights.data[static_cast<int64_t>(h) * L];
        for (int l = 0; l < L; ++l) {
            const double wv = wrow[l];
            if (wv == 0.0) continue;
            const double *irow = &input.data[static_cast<int64_t>(l) * B];
            for (int b = 0; b < B; ++b) orow[b] += wv * irow[b];
        }
    }
    if (cache) {
        cache->input = input;
        cache->weights = weights;
    }
    return out;
}

std::pair<Mat, Mat> fc_backward(const Mat &grad_out, const FcCache &cache) {
    const Mat &input = cache.input;
    const Mat &weights = cache.weights;
    if (grad_out.rows != weights.rows || grad_out.cols != input.cols)
        throw std::invalid_argument("fc_backward: grad_out " + grad_out.shape_str() +
                                    " does not match cached forward output " +
                                    std::to_string(weights.rows) + "x" +
                                    std::to_string(input.cols));

    const int H = weights.rows, L = weights.cols, B = input.cols;
    Mat grad_input(L, B);
    Mat grad_weights(H, L);

#pragma omp parallel for schedule(static)
    for (int l = 0; l < L; ++l) {
        double *girow = &grad_input.data[static_cast<int64_t>(l) * B];
        for (int h = 0; h < H; ++h) {
            const double wv = weights.at(h, l);
            const double *grow = &grad_out.data[static_cast<int64_t>(h) * B];
            for (int b = 0; b < B; ++b) girow[b] += wv * grow[b];
        }
    }

#pragma omp parallel for schedule(static)
    for (int h = 0; h < H; ++h) {
        double *gwrow = &grad_weights.data[static_cast<int64_t>(h) * L];
        const double *grow = &grad_out.data[static_cast<int64_t>(h) * B];
        for (int l = 0; l < L; ++l) {
            const double *irow = &input.data[static_cast<int64_t>(l) * B];
            double acc = 0.0;
            for (int b = 0; b < B; ++b) acc += grow[b] * irow[b];
            gwrow[l] = acc;
        }
    }

    return {std::move(grad_input), std::move(grad_weights)};
}

Tensor4 batchnorm_forward(const Tensor4 &x, BatchNormParams &params, bool training,
                          double eps, double momentum, BatchNormCache *cache) {
    if (eps <= 0.0) throw std::invalid_argument("batchnorm: eps must be positive");
    if (x.c != params.channels())
        throw std::invalid_argument("batchnorm: input " + x.shape_str() + " has " +
                                    std::to_string(x.c) + " channels, params have " +
                                    std::to_string(params.channels()));
    if (training && x.n < 2)
        throw std::invalid_argument("batchnorm: training mode requires batch >= 2");

    const int B = x.n, C = x.c;
    const int64_t plane = static_cast<int64_t>(x.h) * x.w;
    const int64_t m = static_cast<int64_t>(B) * plane;

    Tensor4 out(x.n, x.c, x.h, x.w);
    if (cache) {
        cache->xhat = Tensor4(x.n, x.c, x.h, x.w);
        cache->inv_std.assign(C, 0.0);
        cache->count_per_channel = static_cast<int>(m);
    }

#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        double mean, inv;
        if (training) {
            double sum = 0.0;
            for (int b = 0; b < B; ++b) {
                const double *p = &x.data[x.index(b, c, 0, 0)];
                for (int64_t i = 0; i < plane; ++i) sum += p[i];
            }
            mean = sum / static_cast<double>(m);
            double sq = 0.0;
            for (int b = 0; b < B; ++b) {
                const double *p = &x.data[x.index(b, c, 0, 0)];
                for (int64_t i = 0; i < plane; ++i) {
                    const double d = p[i] - mean;
                    sq += d * d;
                }
            }
            const double var = sq / static_cast<double>(m);
            inv = 1.0 / std::sqrt(var + eps);
            params.running_mean[c] = (1.0 - momentum) * params.running_mean[c] + momentum * mean;
            params.running_var[c] = (1.0 - momentum) * params.running_var[c] + momentum * var;
        } else {
            mean = params.running_mean[c];
            inv = 1.0 / std::sqrt(params.running_var[c] + eps);
        }

        const double g = params.gamma[c], be = params.beta[c];
        for (int b = 0; b < B; ++b) {
            const double *p = &x.data[x.index(b, c, 0, 0)];
            double *q = &out.data[out.index(b, c, 0, 0)];
            double *xh = cache ? &cache->xhat.data[cache->xhat.index(b, c, 0, 0)] : nullptr;
            for (int64_t i = 0; i < plane; ++i) {
                const double v = (p[i] - mean) * inv;
                if (xh) xh[i] = v;
                q[i] = g * v + be;
            }
        }
        if (cache) cache->inv_std[c] = inv;
    }

    return out;
}

BatchNormGrads batchnorm_backward(const Tensor4 &grad_out, const Tensor4 &x,
                                  const BatchNormParams &params,
                                  const BatchNormCache &cache) {
    if (!grad_out.same_shape(x))
        throw std::invalid_argument("batchnorm_backward: grad_out " + grad_out.shape_str() +
                                    " does not match input " + x.shape_str());
    const int B = x.n, C = x.c;
    const int64_t plane = static_cast<int64_t>(x.h) * x.w;
    const double m = static_cast<double>(cache.count_per_channel);

    BatchNormGrads grads;
    grads.grad_input = Tensor4(x.n, x.c, x.h, x.w);
    grads.grad_gamma.assign(C, 0.0);
    grads.grad_beta.assign(C, 0.0);

#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        const double g = params.gamma[c];
        const double inv = cache.inv_std[c];

        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int b = 0; b < B; ++b) {
            const double *dy = &grad_out.data[grad_out.index(b, c, 0, 0)];
            const double *xh = &cache.xhat.data[cache.xhat.index(b, c, 0, 0)];
            for (int64_t i = 0; i < plane; ++i) {
                sum_dy += dy[i];
                sum_dy_xhat += dy[i] * xh[i];
            }
        }
        grads.grad_beta[c] = sum_dy;
        grads.grad_gamma[c] = sum_dy_xhat;

        const double k1 = g * inv;
        for (int b = 0; b < B; ++b) {
            const double *dy = &grad_out.data[grad_out.index(b, c, 0, 0)];
            const double *xh = &cache.xhat.data[cache.xhat.index(b, c, 0, 0)];
            double *dx = &grads.grad_input.data[grads.grad_input.index(b, c, 0, 0)];
            for (int64_t i = 0; i < plane; ++i)
                dx[i] = k1 * (dy[i] - sum_dy / m - xh[i] * sum_dy_xhat / m);
        }
    }

    return grads;
}

std::pair<double, Mat> softmax_cross_entropy(const Mat &logits,
                                             const std::vector<int32_t> &targets) {
    const int C = logits.rows, B = logits.cols;
    if (static_cast<int>(targets.size()) != B)
        throw std::invalid_argument("softmax_cross_entropy: " + std::to_string(targets.size()) +
                                    " targets for batch of " + std::to_string(B));
    for (int32_t t : targets)
        if (t < 0 || t >= C)
            throw std::invalid_argument("softmax_cross_entropy: target " + std::to_string(t) +
                                        " outside [0, " + std::to_string(C) + ")");

    Mat grad(C, B);
    std::vector<double> per_sample(B, 0.0);

#pragma omp parallel for schedule(static)
    for (int b = 0; b < B; ++b) {
        double maxv = logits.at(0, b);
        for (int c = 1; c < C; ++c) maxv = std::max(maxv, logits.at(c, b));
        double denom = 0.0;
        for (int c = 0; c < C; ++c) denom += std::exp(logits.at(c, b) - maxv);
        const double logz = maxv + std::log(denom);
        per_sample[b] = logz - logits.at(targets[b], b);
        const double invb = 1.0 / static_cast<double>(B);
        for (int c = 0; c < C; ++c) {
            const double p = std::exp(logits.at(c, b) - logz);
            grad.at(c, b) = (p - (c == targets[b] ? 1.0 : 0.0)) * invb;
        }
    }

    double loss = 0.0;
    for (int b = 0; b < B; ++b) loss += per_sample[b];
    loss /= static_cast<double>(B);
    return {loss, std::move(grad)};
}

} // namespace syq
