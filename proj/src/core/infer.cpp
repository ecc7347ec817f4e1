/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "core/infer.hpp"

#include "core/act_quant.hpp"
#include "core/common.hpp"
#include "core/nn_ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace syq {

namespace {

std::vector<double> decode_f32_stream(const QLayer &l) {
    const uint64_t count = l.weight_count();
    if (l.codes.size() != count * 4)
        throw FormatError("model: full-precision layer carries " +
                          std::to_string(l.codes.size()) + " bytes, expected " +
                          std::to_string(count * 4));
    std::vector<double> w(count);
    for (uint64_t j = 0; j < count; ++j) {
        float v;
        std::memcpy(&v, l.codes.data() + j * 4, 4);
        w[j] = v;
    }
    return w;
}

// Execution plan: every layer unpacked once into f64 working form.
struct PlanLayer {
    const QLayer *spec = nullptr;
    QLayerView view;                 // quantized conv/fc
    std::vector<double> weights;     // full-precision conv/fc
    std::vector<double> bn_gamma, bn_beta, bn_mean, bn_inv_std;
};

struct ExecPlan {
    std::vector<PlanLayer> layers;
};

ExecPlan build_plan(const QuantizedModel &model) {
    ExecPlan plan;
    for (const QLayer &l : model.layers) {
        PlanLayer p;
        p.spec = &l;
        if (l.kind == QLayerKind::BatchNorm) {
            const uint32_t c = l.dim_n();
            if (l.scales.size() != 4ull * c)
                throw FormatError("model: batch-norm layer carries " +
                                  std::to_string(l.scales.size()) + " scales, expected " +
                                  std::to_string(4 * c));
            p.bn_gamma.assign(l.scales.begin(), l.scales.begin() + c);
            p.bn_beta.assign(l.scales.begin() + c, l.scales.begin() + 2 * c);
            p.bn_mean.assign(l.scales.begin() + 2 * c, l.scales.begin() + 3 * c);
            p.bn_inv_std.resize(c);
            for (uint32_t i = 0; i < c; ++i)
                p.bn_inv_std[i] = 1.0 / std::sqrt(double(l.scales[3 * c + i]) + kBnEps);
        } else if (l.quantized) {
            p.view = make_layer_view(l);
        } else {
            p.weights = decode_f32_stream(l);
        }
        plan.layers.push_back(std::move(p));
    }
    return plan;
}

void apply_act(std::vector<double> &x, uint8_t k, uint8_t f) {
    if (k == 0) return;
    const ActQuantConfig cfg{k, f};
    for (double &v : x) v = quantize_activation(v, cfg);
}

// Dense double-precision convolution for full-precision layers; same
// accumulation order as the training path.
std::vector<double> dense_conv(const QLayer &l, std::span<const double> weights,
                               std::span<const double> input, int &out_dim) {
    const int K = static_cast<int>(l.dim_k());
    const int I = static_cast<int>(l.dim_i());
    const int N = static_cast<int>(l.dim_n());
    const int F = static_cast<int>(l.dim_f());
    const int stride = l.conv_stride();
    const int pad = K / 2;
    const int O = (F + 2 * pad - K) / stride + 1;
    out_dim = O;

    std::vector<double> out(static_cast<size_t>(N) * O * O, 0.0);
    for (int n = 0; n < N; ++n) {
        for (int c = 0; c < I; ++c) {
            const double *in_c = input.data() + static_cast<int64_t>(c) * F * F;
            const double *w_nc = weights.data() + (static_cast<int64_t>(n) * I + c) * K * K;
            for (int kh = 0; kh < K; ++kh) {
                for (int kw = 0; kw < K; ++kw) {
                    const double wv = w_nc[kh * K + kw];
                    for (int oh = 0; oh < O; ++oh) {
                        const int ih = oh * stride + kh - pad;
                        if (ih < 0 || ih >= F) continue;
                        for (int ow = 0; ow < O; ++ow) {
                            const int iw = ow * stride + kw - pad;
                            if (iw < 0 || iw >= F) continue;
                            out[(static_cast<int64_t>(n) * O + oh) * O + ow] +=
                                wv * in_c[ih * F + iw];
                        }
                    }
                }
            }
        }
    }
    return out;
}

std::vector<double> forward_with_plan(const ExecPlan &plan, std::span<const double> image) {
    std::vector<double> cur(image.begin(), image.end());

    for (const PlanLayer &p : plan.layers) {
        const QLayer &l = *p.spec;
        switch (l.kind) {
        case QLayerKind::ConvS1:
        case QLayerKind::ConvS2: {
            const int K = static_cast<int>(l.dim_k());
            const int I = static_cast<int>(l.dim_i());
            const int N = static_cast<int>(l.dim_n());
            const int F = static_cast<int>(l.dim_f());
            if (cur.size() != static_cast<size_t>(I) * F * F)
                throw FormatError("model: conv input size mismatch (" +
                                  std::to_string(cur.size()) + " values for " +
                                  std::to_string(I) + "x" + std::to_string(F) + "x" +
                                  std::to_string(F) + ")");
            if (!l.quantized) {
                int out_dim = 0;
                cur = dense_conv(l, p.weights, cur, out_dim);
                break;
            }
            const int stride = l.conv_stride();
            const int pad = K / 2;
            const int O = (F + 2 * pad - K) / stride + 1;
            std::vector<double> out(static_cast<size_t>(N) * O * O);
            std::vector<double> patch(static_cast<size_t>(K) * K * I);
            for (int oh = 0; oh < O; ++oh) {
                for (int ow = 0; ow < O; ++ow) {
                    // Patch layout (i, k1, k2); padding contributes zeros.
                    for (int c = 0; c < I; ++c) {
                        const double *in_c = cur.data() + static_cast<int64_t>(c) * F * F;
                        double *dst = patch.data() + static_cast<int64_t>(c) * K * K;
                        for (int kh = 0; kh < K; ++kh) {
                            const int ih = oh * stride + kh - pad;
                            for (int kw = 0; kw < K; ++kw) {
                                const int iw = ow * stride + kw - pad;
                                dst[kh * K + kw] =
                                    (ih >= 0 && ih < F && iw >= 0 && iw < F)
                                        ? in_c[ih * F + iw]
                                        : 0.0;
                            }
                        }
                    }
                    const std::vector<double> vals = subdot_infer(p.view, patch);
                    for (int n = 0; n < N; ++n)
                        out[(static_cast<int64_t>(n) * O + oh) * O + ow] = vals[n];
                }
            }
            cur = std::move(out);
            break;
        }
        case QLayerKind::FC: {
            const uint32_t L = l.dim_l(), H = l.dim_h();
            if (cur.size() != L)
                throw FormatError("model: fc input size mismatch (" +
                                  std::to_string(cur.size()) + " values for L=" +
                                  std::to_string(L) + ")");
            std::vector<double> out(H, 0.0);
            if (l.quantized) {
                out = subdot_infer(p.view, cur);
            } else {
                for (uint32_t h = 0; h < H; ++h) {
                    const double *w = p.weights.data() + static_cast<int64_t>(h) * L;
                    double acc = 0.0;
                    for (uint32_t j = 0; j < L; ++j) acc += w[j] * cur[j];
                    out[h] = acc;
                }
            }
            cur = std::move(out);
            break;
        }
        case QLayerKind::BatchNorm: {
            const uint32_t C = l.dim_n();
            if (cur.size() % C != 0)
                throw FormatError("model: batch-norm input not divisible by channel count");
            const size_t plane = cur.size() / C;
            for (uint32_t c = 0; c < C; ++c) {
                double *x = cur.data() + static_cast<size_t>(c) * plane;
                const double g = p.bn_gamma[c], b = p.bn_beta[c];
                const double mu = p.bn_mean[c], inv = p.bn_inv_std[c];
                for (size_t i = 0; i < plane; ++i) x[i] = g * (x[i] - mu) * inv + b;
            }
            break;
        }
        }
        apply_act(cur, l.act_k, l.act_f);
    }
    return cur;
}

double sample_loss(std::span<const double> logits, int32_t target) {
    double maxv = logits[0];
    for (double v : logits) maxv = std::max(maxv, v);
    double denom = 0.0;
    for (double v : logits) denom += std::exp(v - maxv);
    return maxv + std::log(denom) - logits[target];
}

int argmax(std::span<const double> v) {
    int best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = static_cast<int>(i);
    return best;
}

} // namespace

QLayerView make_layer_view(const QLayer &layer) {
    if (!layer.quantized)
        throw std::invalid_argument("make_layer_view: layer is not quantized");
    QLayerView view;
    view.layer = &layer;
    view.codes = unpack_codes(layer.codes, layer.weight_count());
    view.alpha.assign(layer.scales.begin(), layer.scales.end());

    if (layer.kind == QLayerKind::FC) {
        if (layer.granularity != Granularity::LayerWise)
            throw FormatError("model: FC layers support only layer-wise scaling");
        if (view.alpha.size() != 1)
            throw FormatError("model: FC layer carries " + std::to_string(view.alpha.size()) +
                              " scales, expected 1");
        view.tap_group.assign(layer.dim_l(), 0);
        return view;
    }

    const int K = static_cast<int>(layer.dim_k());
    const int I = static_cast<int>(layer.dim_i());
    uint32_t groups = 1;
    if (layer.granularity == Granularity::PixelWise) groups = static_cast<uint32_t>(K) * K;
    else if (layer.granularity == Granularity::RowWise) groups = static_cast<uint32_t>(K);
    if (view.alpha.size() != groups)
        throw FormatError("model: conv layer carries " + std::to_string(view.alpha.size()) +
                          " scales, expected " + std::to_string(groups));

    view.tap_group.resize(static_cast<size_t>(K) * K * I);
    for (int c = 0; c < I; ++c)
        for (int k1 = 0; k1 < K; ++k1)
            for (int k2 = 0; k2 < K; ++k2) {
                uint32_t g = 0;
                if (layer.granularity == Granularity::PixelWise)
                    g = static_cast<uint32_t>(k1 * K + k2);
                else if (layer.granularity == Granularity::RowWise)
                    g = static_cast<uint32_t>(k1);
                view.tap_group[(static_cast<size_t>(c) * K + k1) * K + k2] = g;
            }
    return view;
}

std::vector<double> subdot_infer(const QLayerView &view, std::span<const double> patch) {
    const QLayer &l = *view.layer;
    const size_t taps = view.tap_group.size();
    if (patch.size() != taps)
        throw std::invalid_argument("subdot_infer: patch has " + std::to_string(patch.size()) +
                                    " values, layer expects " + std::to_string(taps));

    const size_t outputs = (l.kind == QLayerKind::FC) ? l.dim_h() : l.dim_n();
    const size_t groups = view.alpha.size();
    std::vector<double> out(outputs);
    std::vector<double> acc(groups);

    for (size_t o = 0; o < outputs; ++o) {
        std::fill(acc.begin(), acc.end(), 0.0);
        const int8_t *codes = view.codes.data() + o * taps;
        for (size_t j = 0; j < taps; ++j) {
            const int8_t q = codes[j];
            if (q == 1) acc[view.tap_group[j]] += patch[j];
            else if (q == -1) acc[view.tap_group[j]] -= patch[j];
        }
        double v = 0.0;
        for (size_t g = 0; g < groups; ++g) v += view.alpha[g] * acc[g];
        out[o] = v;
    }
    return out;
}

std::vector<double> model_forward(const QuantizedModel &model, std::span<const double> image) {
    return forward_with_plan(build_plan(model), image);
}

int model_predict(const QuantizedModel &model, std::span<const double> image) {
    const std::vector<double> logits = model_forward(model, image);
    return argmax(logits);
}

EvalResult evaluate_model(const QuantizedModel &model, const Dataset &data) {
    if (data.count() == 0) throw std::invalid_argument("evaluate_model: empty dataset");
    const ExecPlan plan = build_plan(model);
    const int count = data.count();
    const int64_t per = data.images.size() / count;

    std::vector<double> losses(count);
    std::vector<uint8_t> correct(count);
#pragma omp parallel for schedule(static)
    for (int s = 0; s < count; ++s) {
        const std::span<const double> image(&data.images.data[per * s],
                                            static_cast<size_t>(per));
        const std::vector<double> logits = forward_with_plan(plan, image);
        losses[s] = sample_loss(logits, data.labels[s]);
        correct[s] = argmax(logits) == data.labels[s] ? 1 : 0;
    }

    EvalResult res;
    int64_t hits = 0;
    double loss = 0.0;
    for (int s = 0; s < count; ++s) {
        hits += correct[s];
        loss += losses[s];
    }
    res.top1 = static_cast<double>(hits) / count;
    res.loss = loss / count;
    return res;
}

std::vector<int> model_predict_batch(const QuantizedModel &model, const Dataset &data) {
    const ExecPlan plan = build_plan(model);
    const int count = data.count();
    const int64_t per = count ? data.images.size() / count : 0;
    std::vector<int> preds(count);
#pragma omp parallel for schedule(static)
    for (int s = 0; s < count; ++s) {
        const std::span<const double> image(&data.images.data[per * s],
                                            static_cast<size_t>(per));
        preds[s] = argmax(forward_with_plan(plan, image));
    }
    return preds;
}

} // namespace syq
