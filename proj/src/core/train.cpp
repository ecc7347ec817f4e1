/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "core/train.hpp"

#include "core/act_quant.hpp"
#include "core/common.hpp"
#include "core/weight_quant.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace syq {

namespace {

constexpr double kBnMomentum = 0.1;
constexpr char kCheckpointMagic[4] = {'S', 'Y', 'Q', 'C'};
constexpr uint16_t kCheckpointVersion = 1;

void he_normal_init(std::vector<double> &w, int fan_in, Rng &rng) {
    const double stddev = std::sqrt(2.0 / fan_in);
    for (double &v : w) v = rng.normal(0.0, stddev);
}

// Scaled quantized weights w_hat = alpha (.) Q for the current latent W.
std::vector<double> materialize_quantized(const LayerState &ls,
                                          std::span<const double> w, QuantMode mode,
                                          MaskedQuant *mq_out) {
    const double eta = compute_threshold(w, mode);
    MaskedQuant mq = quantize_weights(w, eta);
    std::vector<double> w_hat(w.size());
    for (size_t j = 0; j < w.size(); ++j)
        w_hat[j] = ls.scale.alpha.alpha[ls.groups.group_of[j]] *
                   static_cast<double>(mq.q[j]);
    if (mq_out) *mq_out = std::move(mq);
    return w_hat;
}

Mat flatten_to_mat(const Tensor4 &t) {
    const int B = t.n;
    const int64_t per = t.size() / (B ? B : 1);
    Mat m(static_cast<int>(per), B);
    for (int b = 0; b < B; ++b)
        for (int64_t j = 0; j < per; ++j)
            m.at(static_cast<int>(j), b) = t.data[b * per + j];
    return m;
}

Tensor4 unflatten_grad(const Mat &g, int n, int c, int h, int w) {
    Tensor4 t(n, c, h, w);
    const int64_t per = t.size() / n;
    for (int b = 0; b < n; ++b)
        for (int64_t j = 0; j < per; ++j)
            t.data[b * per + j] = g.at(static_cast<int>(j), b);
    return t;
}

void apply_act_site(std::vector<double> &data, const ActQuantConfig &cfg,
                    std::vector<uint8_t> &mask_out, const std::vector<uint8_t> *frozen_mask) {
    const double m = cfg.upper_bound();
    mask_out.resize(data.size());
    if (frozen_mask) {
        if (frozen_mask->size() != data.size())
            throw std::invalid_argument("forward: frozen activation mask size mismatch");
        mask_out = *frozen_mask;
        for (size_t j = 0; j < data.size(); ++j)
            data[j] = mask_out[j] ? data[j] : 0.0;
        return;
    }
    for (size_t j = 0; j < data.size(); ++j) {
        const double x = data[j];
        mask_out[j] = (x >= 0.0 && x <= m) ? 1 : 0;
        data[j] = quantize_activation(x, cfg);
    }
}

void sgd_step(std::vector<double> &w, std::vector<double> &vel,
              std::span<const double> grad, double lr, double momentum, double wd) {
    for (size_t j = 0; j < w.size(); ++j) {
        vel[j] = momentum * vel[j] + grad[j] + wd * w[j];
        w[j] -= lr * vel[j];
    }
}

std::vector<float> narrow_f32(std::span<const double> v) {
    std::vector<float> out(v.size());
    for (size_t j = 0; j < v.size(); ++j) out[j] = static_cast<float>(v[j]);
    return out;
}

std::vector<uint8_t> f32_bytes(std::span<const double> v) {
    std::vector<uint8_t> out(v.size() * 4);
    for (size_t j = 0; j < v.size(); ++j) {
        const float f = static_cast<float>(v[j]);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        for (int i = 0; i < 4; ++i)
            out[j * 4 + i] = static_cast<uint8_t>((bits >> (8 * i)) & 0xff);
    }
    return out;
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

TrainState init_train_state(const ModelConfig &cfg, const std::string &config_json) {
    TrainState st;
    st.config = cfg;
    st.config_json = config_json;
    st.lr = cfg.lr;
    st.rng.reseed(cfg.seed);

    for (const LayerSpec &spec : cfg.layers) {
        LayerState ls;
        switch (spec.op) {
        case LayerSpec::Op::Conv: {
            ls.w4 = Tensor4(spec.shape.N, spec.shape.I, spec.shape.K, spec.shape.K);
            he_normal_init(ls.w4.data, spec.shape.K * spec.shape.K * spec.shape.I, st.rng);
            ls.vel4 = Tensor4(spec.shape.N, spec.shape.I, spec.shape.K, spec.shape.K);
            if (spec.quantized) {
                ls.groups = build_subgroups(spec.shape, LayerKind::Conv, spec.granularity);
                ls.scale.alpha = init_scales(ls.w4.data, ls.groups);
                ls.scale.grad_alpha.assign(ls.scale.alpha.alpha.size(), 0.0);
                ls.scale_vel.assign(ls.scale.alpha.alpha.size(), 0.0);
            }
            break;
        }
        case LayerSpec::Op::FC: {
            ls.w2 = Mat(spec.shape.H, spec.shape.L);
            he_normal_init(ls.w2.data, spec.shape.L, st.rng);
            ls.vel2 = Mat(spec.shape.H, spec.shape.L);
            if (spec.quantized) {
                ls.groups = build_subgroups(spec.shape, LayerKind::FC, spec.granularity);
                ls.scale.alpha = init_scales(ls.w2.data, ls.groups);
                ls.scale.grad_alpha.assign(1, 0.0);
                ls.scale_vel.assign(1, 0.0);
            }
            break;
        }
        case LayerSpec::Op::BatchNorm: {
            ls.bn = BatchNormParams(spec.shape.N);
            ls.bn_gamma_vel.assign(spec.shape.N, 0.0);
            ls.bn_beta_vel.assign(spec.shape.N, 0.0);
            break;
        }
        }
        st.layers.push_back(std::move(ls));
    }
    return st;
}

Mat net_forward(const Tensor4 &batch, TrainState &state, bool training,
                ForwardCache *cache, const ForwardCache *frozen_acts) {
    const size_t L = state.config.layers.size();
    if (frozen_acts && frozen_acts->layers.size() != L)
        throw std::invalid_argument("forward: frozen cache does not match the network");

    ForwardCache local;
    ForwardCache &fc = cache ? *cache : local;
    fc.layers.assign(L, {});
    fc.batch = batch.n;

    Tensor4 cur4 = batch;
    Mat cur2;
    bool in_mat = false;

    for (size_t li = 0; li < L; ++li) {
        const LayerSpec &spec = state.config.layers[li];
        LayerState &ls = state.layers[li];
        LayerFwdCache &lc = fc.layers[li];

        switch (spec.op) {
        case LayerSpec::Op::Conv: {
            if (in_mat) throw std::invalid_argument("forward: conv after fc is unsupported");
            Tensor4 weights = ls.w4;
            if (spec.quantized) {
                const std::vector<double> w_hat =
                    materialize_quantized(ls, ls.w4.data, spec.mode, &lc.mq);
                weights.data = w_hat;
            }
            cur4 = conv2d_forward(cur4, weights, spec.stride, spec.pad, &lc.conv);
            break;
        }
        case LayerSpec::Op::FC: {
            if (!in_mat) {
                lc.flattened_input = true;
                lc.pre_n = cur4.n;
                lc.pre_c = cur4.c;
                lc.pre_h = cur4.h;
                lc.pre_w = cur4.w;
                cur2 = flatten_to_mat(cur4);
                in_mat = true;
            }
            Mat weights = ls.w2;
            if (spec.quantized) {
                const std::vector<double> w_hat =
                    materialize_quantized(ls, ls.w2.data, spec.mode, &lc.mq);
                weights.data = w_hat;
            }
            cur2 = fc_forward(cur2, weights, &lc.fc);
            break;
        }
        case LayerSpec::Op::BatchNorm: {
            if (in_mat) throw std::invalid_argument("forward: batch norm after fc is unsupported");
            lc.bn_input = cur4;
            cur4 = batchnorm_forward(cur4, ls.bn, training, kBnEps, kBnMomentum, &lc.bn);
            break;
        }
        }

        if (spec.act_bits > 0) {
            const ActQuantConfig acfg = spec.act_config();
            acfg.validate();
            const std::vector<uint8_t> *frozen =
                frozen_acts ? &frozen_acts->layers[li].act_mask : nullptr;
            apply_act_site(in_mat ? cur2.data : cur4.data, acfg, lc.act_mask, frozen);
        }
    }

    if (!in_mat) throw std::invalid_argument("forward: network must end in an FC layer");
    fc.logits = cur2;
    return cur2;
}

NetGradients net_backward_from_grad(const ForwardCache &cache, const Mat &grad_logits,
                                    const TrainState &state) {
    const size_t L = state.config.layers.size();
    if (cache.layers.size() != L)
        throw std::invalid_argument("backward: cache does not match the network");

    NetGradients grads;
    grads.layers.assign(L, {});

    Mat g2 = grad_logits;
    Tensor4 g4;
    bool in_mat = true;

    for (size_t li = L; li-- > 0;) {
        const LayerSpec &spec = state.config.layers[li];
        const LayerState &ls = state.layers[li];
        const LayerFwdCache &lc = cache.layers[li];
        LayerGrads &lg = grads.layers[li];

        if (spec.act_bits > 0) {
            std::vector<double> &g = in_mat ? g2.data : g4.data;
            if (g.size() != lc.act_mask.size())
                throw std::invalid_argument("backward: cache mismatch at activation site");
            for (size_t j = 0; j < g.size(); ++j)
                if (!lc.act_mask[j]) g[j] = 0.0;
        }

        switch (spec.op) {
        case LayerSpec::Op::FC: {
            auto [gin, gw] = fc_backward(g2, lc.fc);
            if (spec.quantized) {
                lg.g_alpha = scale_gradient(gw.data, lc.mq, ls.groups, ls.scale.alpha,
                                            state.config.literal_scale_grad);
                const std::vector<double> gw_latent =
                    ste_weight_grad(gw.data, ls.scale.alpha, ls.groups);
                lg.gw2 = Mat(gw.rows, gw.cols);
                lg.gw2.data = gw_latent;
            } else {
                lg.gw2 = std::move(gw);
            }
            g2 = std::move(gin);
            if (lc.flattened_input) {
                g4 = unflatten_grad(g2, lc.pre_n, lc.pre_c, lc.pre_h, lc.pre_w);
                in_mat = false;
            }
            break;
        }
        case LayerSpec::Op::BatchNorm: {
            BatchNormGrads bg = batchnorm_backward(g4, lc.bn_input, ls.bn, lc.bn);
            lg.g_gamma = std::move(bg.grad_gamma);
            lg.g_beta = std::move(bg.grad_beta);
            g4 = std::move(bg.grad_input);
            break;
        }
        case LayerSpec::Op::Conv: {
            auto [gin, gw] = conv2d_backward(g4, lc.conv);
            if (spec.quantized) {
                lg.g_alpha = scale_gradient(gw.data, lc.mq, ls.groups, ls.scale.alpha,
                                            state.config.literal_scale_grad);
                const std::vector<double> gw_latent =
                    ste_weight_grad(gw.data, ls.scale.alpha, ls.groups);
                lg.gw4 = Tensor4(gw.n, gw.c, gw.h, gw.w);
                lg.gw4.data = gw_latent;
            } else {
                lg.gw4 = std::move(gw);
            }
            g4 = std::move(gin);
            break;
        }
        }
    }
    return grads;
}

NetGradients net_backward(const ForwardCache &cache, const std::vector<int32_t> &targets,
                          const TrainState &state) {
    auto [loss, grad_logits] = softmax_cross_entropy(cache.logits, targets);
    NetGradients grads = net_backward_from_grad(cache, grad_logits, state);
    grads.loss = loss;
    return grads;
}

StepResult train_step(TrainState &state, const Tensor4 &images,
                      const std::vector<int32_t> &labels) {
    if (images.n == 0) throw std::invalid_argument("train_step: empty batch");

    ForwardCache cache;
    const Mat logits = net_forward(images, state, true, &cache);
    NetGradients grads = net_backward(cache, labels, state);
    if (!std::isfinite(grads.loss))
        throw DivergenceError("training diverged: non-finite loss at step " +
                                  std::to_string(state.step),
                              state.step);

    const double lr = state.lr, mu = state.config.momentum, wd = state.config.weight_decay;
    for (size_t li = 0; li < state.layers.size(); ++li) {
        const LayerSpec &spec = state.config.layers[li];
        LayerState &ls = state.layers[li];
        LayerGrads &lg = grads.layers[li];
        switch (spec.op) {
        case LayerSpec::Op::Conv:
            sgd_step(ls.w4.data, ls.vel4.data, lg.gw4.data, lr, mu, wd);
            break;
        case LayerSpec::Op::FC:
            sgd_step(ls.w2.data, ls.vel2.data, lg.gw2.data, lr, mu, wd);
            break;
        case LayerSpec::Op::BatchNorm:
            sgd_step(ls.bn.gamma, ls.bn_gamma_vel, lg.g_gamma, lr, mu, 0.0);
            sgd_step(ls.bn.beta, ls.bn_beta_vel, lg.g_beta, lr, mu, 0.0);
            break;
        }
        if (spec.quantized) {
            for (size_t g = 0; g < ls.scale_vel.size(); ++g)
                ls.scale_vel[g] = mu * ls.scale_vel[g] + lg.g_alpha[g];
            ls.scale.grad_alpha = ls.scale_vel;
            update_scales(ls.scale, lr);
        }
    }

    ++state.step;
    if (state.step % state.config.lr_step == 0) state.lr *= state.config.lr_decay;

    // batch top-1 from the forward logits
    int hits = 0;
    for (int b = 0; b < logits.cols; ++b) {
        int best = 0;
        for (int c = 1; c < logits.rows; ++c)
            if (logits.at(c, b) > logits.at(best, b)) best = c;
        if (best == labels[b]) ++hits;
    }

    StepResult res;
    res.loss = grads.loss;
    res.top1 = static_cast<double>(hits) / logits.cols;
    return res;
}

QuantizedModel export_quantized_model(const TrainState &state) {
    QuantizedModel model;
    for (size_t li = 0; li < state.config.layers.size(); ++li) {
        const LayerSpec &spec = state.config.layers[li];
        const LayerState &ls = state.layers[li];
        QLayer l;
        l.act_k = static_cast<uint8_t>(spec.act_bits);
        l.act_f = static_cast<uint8_t>(spec.act_frac_bits);
        switch (spec.op) {
        case LayerSpec::Op::Conv: {
            l.kind = spec.stride == 2 ? QLayerKind::ConvS2 : QLayerKind::ConvS1;
            l.dims[0] = static_cast<uint32_t>(spec.shape.K);
            l.dims[1] = static_cast<uint32_t>(spec.shape.I);
            l.dims[2] = static_cast<uint32_t>(spec.shape.N);
            l.dims[3] = static_cast<uint32_t>(spec.shape.F);
            l.quantized = spec.quantized;
            l.granularity = spec.granularity;
            l.mode = spec.mode;
            if (spec.quantized) {
                const double eta = compute_threshold(ls.w4.data, spec.mode);
                const MaskedQuant mq = quantize_weights(ls.w4.data, eta);
                l.codes = pack_codes(mq.q);
                l.scales = narrow_f32(ls.scale.alpha.alpha);
            } else {
                l.codes = f32_bytes(ls.w4.data);
            }
            break;
        }
        case LayerSpec::Op::FC: {
            l.kind = QLayerKind::FC;
            l.dims[4] = static_cast<uint32_t>(spec.shape.L);
            l.dims[5] = static_cast<uint32_t>(spec.shape.H);
            l.quantized = spec.quantized;
            l.granularity = spec.granularity;
            l.mode = spec.mode;
            if (spec.quantized) {
                const double eta = compute_threshold(ls.w2.data, spec.mode);
                const MaskedQuant mq = quantize_weights(ls.w2.data, eta);
                l.codes = pack_codes(mq.q);
                l.scales = narrow_f32(ls.scale.alpha.alpha);
            } else {
                l.codes = f32_bytes(ls.w2.data);
            }
            break;
        }
        case LayerSpec::Op::BatchNorm: {
            l.kind = QLayerKind::BatchNorm;
            l.dims[2] = static_cast<uint32_t>(spec.shape.N);
            std::vector<double> packed;
            packed.insert(packed.end(), ls.bn.gamma.begin(), ls.bn.gamma.end());
            packed.insert(packed.end(), ls.bn.beta.begin(), ls.bn.beta.end());
            packed.insert(packed.end(), ls.bn.running_mean.begin(), ls.bn.running_mean.end());
            packed.insert(packed.end(), ls.bn.running_var.begin(), ls.bn.running_var.end());
            l.scales = narrow_f32(packed);
            break;
        }
        }
        model.layers.push_back(std::move(l));
    }
    return model;
}

EvalResult evaluate_state(const TrainState &state, const Dataset &data) {
    return evaluate_model(export_quantized_model(state), data);
}

FitResult fit(TrainState &state, const Dataset &train_data, const Dataset &val_data,
              const std::string &run_dir) {
    const Dataset train = dataset_prefix(train_data, state.config.train_limit);
    const Dataset val = dataset_prefix(val_data, state.config.val_limit);
    if (train.count() == 0) throw std::invalid_argument("fit: empty training set");
    if (val.count() == 0) throw std::invalid_argument("fit: empty validation set");

    std::ofstream log;
    if (!run_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(fs::path(run_dir) / "checkpoints");
        std::ofstream cfg(fs::path(run_dir) / "config.json", std::ios::trunc);
        cfg << state.config_json;
        log.open(fs::path(run_dir) / "train.log", std::ios::trunc);
    }

    const int n = train.count();
    const int64_t per = train.images.size() / n;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    FitResult result;
    for (int epoch = 0; epoch < state.config.epochs; ++epoch) {
        state.epoch = epoch;
        state.rng.shuffle(order);
        for (int b0 = 0; b0 < n; b0 += state.config.batch) {
            const int bs = std::min(state.config.batch, n - b0);
            if (bs < 2) break;   // batch norm needs at least two samples
            Tensor4 images(bs, train.images.c, train.images.h, train.images.w);
            std::vector<int32_t> labels(bs);
            for (int b = 0; b < bs; ++b) {
                const int src = order[b0 + b];
                std::copy_n(&train.images.data[per * src], per, &images.data[per * b]);
                labels[b] = train.labels[src];
            }
            const StepResult sr = train_step(state, images, labels);
            if (log.is_open() && state.step % state.config.log_every == 0)
                log << state.step << '\t' << state.epoch << '\t' << format_double(state.lr)
                    << '\t' << format_double(sr.loss) << '\t' << format_double(sr.top1)
                    << '\n';
        }
        const EvalResult ev = evaluate_state(state, val);
        result.final_top1 = ev.top1;
        result.best_top1 = std::max(result.best_top1, ev.top1);
        if (log.is_open())
            log << "# epoch " << epoch << " val_top1 " << format_double(ev.top1)
                << " val_loss " << format_double(ev.loss) << '\n';
    }
    result.steps = state.step;

    if (!run_dir.empty()) {
        namespace fs = std::filesystem;
        save_checkpoint(state, (fs::path(run_dir) / "checkpoints" / "final.syqc").string());
        std::ofstream metrics(fs::path(run_dir) / "metrics.json", std::ios::trunc);
        metrics << "{\"final_top1\":" << format_double(result.final_top1)
                << ",\"best_top1\":" << format_double(result.best_top1)
                << ",\"steps\":" << result.steps << "}\n";
    }
    return result;
}

namespace {

void put_bytes(std::vector<uint8_t> &out, const void *p, size_t n) {
    const uint8_t *b = static_cast<const uint8_t *>(p);
    out.insert(out.end(), b, b + n);
}

void put_u64_le(std::vector<uint8_t> &out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f64_vec(std::vector<uint8_t> &out, std::span<const double> v) {
    for (double x : v) {
        uint64_t bits;
        std::memcpy(&bits, &x, 8);
        put_u64_le(out, bits);
    }
}

class CkptReader {
public:
    CkptReader(std::vector<uint8_t> data, std::string path)
        : data_(std::move(data)), path_(std::move(path)) {}

    const uint8_t *take(size_t n) {
        if (off_ + n > data_.size())
            throw FormatError(path_ + ": truncated at byte offset " + std::to_string(off_));
        const uint8_t *p = data_.data() + off_;
        off_ += n;
        return p;
    }
    uint16_t u16() {
        const uint8_t *p = take(2);
        return static_cast<uint16_t>(p[0] | (p[1] << 8));
    }
    uint32_t u32() {
        const uint8_t *p = take(4);
        return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) |
               (uint32_t(p[3]) << 24);
    }
    uint64_t u64() {
        uint64_t v = 0;
        const uint8_t *p = take(8);
        for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
        return v;
    }
    double f64() {
        const uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    void f64_vec(std::vector<double> &out) {
        for (double &x : out) x = f64();
    }
    void expect_end() const {
        if (off_ != data_.size())
            throw FormatError(path_ + ": trailing bytes at offset " + std::to_string(off_));
    }

private:
    std::vector<uint8_t> data_;
    uint64_t off_ = 0;
    std::string path_;
};

} // namespace

void save_checkpoint(const TrainState &state, const std::string &path) {
    std::vector<uint8_t> buf;
    put_bytes(buf, kCheckpointMagic, 4);
    buf.push_back(kCheckpointVersion & 0xff);
    buf.push_back(kCheckpointVersion >> 8);
    const uint32_t jlen = static_cast<uint32_t>(state.config_json.size());
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<uint8_t>((jlen >> (8 * i)) & 0xff));
    put_bytes(buf, state.config_json.data(), state.config_json.size());

    uint64_t bits;
    std::memcpy(&bits, &state.lr, 8);
    put_u64_le(buf, bits);
    put_u64_le(buf, static_cast<uint64_t>(state.step));
    put_u64_le(buf, static_cast<uint64_t>(static_cast<int64_t>(state.epoch)));
    for (uint64_t s : state.rng.state()) put_u64_le(buf, s);

    for (size_t li = 0; li < state.config.layers.size(); ++li) {
        const LayerSpec &spec = state.config.layers[li];
        const LayerState &ls = state.layers[li];
        switch (spec.op) {
        case LayerSpec::Op::Conv:
            put_f64_vec(buf, ls.w4.data);
            put_f64_vec(buf, ls.vel4.data);
            break;
        case LayerSpec::Op::FC:
            put_f64_vec(buf, ls.w2.data);
            put_f64_vec(buf, ls.vel2.data);
            break;
        case LayerSpec::Op::BatchNorm:
            put_f64_vec(buf, ls.bn.gamma);
            put_f64_vec(buf, ls.bn.beta);
            put_f64_vec(buf, ls.bn.running_mean);
            put_f64_vec(buf, ls.bn.running_var);
            put_f64_vec(buf, ls.bn_gamma_vel);
            put_f64_vec(buf, ls.bn_beta_vel);
            break;
        }
        if (spec.quantized) {
            put_f64_vec(buf, ls.scale.alpha.alpha);
            put_f64_vec(buf, ls.scale_vel);
            put_u64_le(buf, static_cast<uint64_t>(ls.scale.step));
        }
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out.write(reinterpret_cast<const char *>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

TrainState load_checkpoint(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open");
    std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
    CkptReader r(std::move(data), path);

    const uint8_t *magic = r.take(4);
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw FormatError(path + ": bad magic at byte offset 0 (not a SYQC checkpoint)");
    const uint16_t version = r.u16();
    if (version != kCheckpointVersion)
        throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));

    const uint32_t jlen = r.u32();
    const uint8_t *jbytes = r.take(jlen);
    const std::string config_json(reinterpret_cast<const char *>(jbytes), jlen);

    TrainState st = init_train_state(parse_run_config(config_json), config_json);
    st.lr = r.f64();
    st.step = static_cast<int64_t>(r.u64());
    st.epoch = static_cast<int>(static_cast<int64_t>(r.u64()));
    std::array<uint64_t, 4> rng_state;
    for (uint64_t &s : rng_state) s = r.u64();
    st.rng.set_state(rng_state);

    for (size_t li = 0; li < st.config.layers.size(); ++li) {
        const LayerSpec &spec = st.config.layers[li];
        LayerState &ls = st.layers[li];
        switch (spec.op) {
        case LayerSpec::Op::Conv:
            r.f64_vec(ls.w4.data);
            r.f64_vec(ls.vel4.data);
            break;
        case LayerSpec::Op::FC:
            r.f64_vec(ls.w2.data);
            r.f64_vec(ls.vel2.data);
            break;
        case LayerSpec::Op::BatchNorm:
            r.f64_vec(ls.bn.gamma);
            r.f64_vec(ls.bn.beta);
            r.f64_vec(ls.bn.running_mean);
            r.f64_vec(ls.bn.running_var);
            r.f64_vec(ls.bn_gamma_vel);
            r.f64_vec(ls.bn_beta_vel);
            break;
        }
        if (spec.quantized) {
            r.f64_vec(ls.scale.alpha.alpha);
            r.f64_vec(ls.scale_vel);
            ls.scale.step = static_cast<int64_t>(r.u64());
        }
    }
    r.expect_end();
    return st;
}

} // namespace syq
