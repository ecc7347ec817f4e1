/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "core/model.hpp"

#include <json.hpp>

#include <set>
#include <stdexcept>

namespace syq {

namespace {

using nlohmann::json;

Granularity parse_granularity(const std::string &s, const char *field) {
    if (s == "pixel") return Granularity::PixelWise;
    if (s == "row") return Granularity::RowWise;
    if (s == "layer") return Granularity::LayerWise;
    throw std::invalid_argument(std::string(field) + ": expected pixel, row or layer, got '" +
                                s + "'");
}

template <typename T>
T get_or(const json &j, const char *key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception &) {
        throw std::invalid_argument(std::string(key) + ": wrong type");
    }
}

void require_range(const char *field, double v, double lo, double hi) {
    if (v < lo || v > hi)
        throw std::invalid_argument(std::string(field) + ": value " + std::to_string(v) +
                                    " outside [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "]");
}

} // namespace

ModelConfig parse_run_config(const std::string &json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception &e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");

    static const std::set<std::string> known = {
        "seed",       "epochs",       "batch",      "lr",          "lr_decay",
        "lr_step",    "momentum",     "weight_decay", "log_every", "train_limit",
        "val_limit",  "literal_scale_grad", "wbits", "abits",      "fbits",
        "granularity", "classes",     "input_channels", "input_size"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw std::invalid_argument("config: unknown field '" + it.key() + "'");

    ModelConfig cfg;
    cfg.seed = get_or<uint64_t>(j, "seed", cfg.seed);
    cfg.epochs = get_or<int>(j, "epochs", cfg.epochs);
    cfg.batch = get_or<int>(j, "batch", cfg.batch);
    cfg.lr = get_or<double>(j, "lr", cfg.lr);
    cfg.lr_decay = get_or<double>(j, "lr_decay", cfg.lr_decay);
    cfg.lr_step = get_or<int>(j, "lr_step", cfg.lr_step);
    cfg.momentum = get_or<double>(j, "momentum", cfg.momentum);
    cfg.weight_decay = get_or<double>(j, "weight_decay", cfg.weight_decay);
    cfg.log_every = get_or<int>(j, "log_every", cfg.log_every);
    cfg.train_limit = get_or<int>(j, "train_limit", cfg.train_limit);
    cfg.val_limit = get_or<int>(j, "val_limit", cfg.val_limit);
    cfg.literal_scale_grad = get_or<bool>(j, "literal_scale_grad", cfg.literal_scale_grad);
    cfg.wbits = get_or<int>(j, "wbits", cfg.wbits);
    cfg.abits = get_or<int>(j, "abits", cfg.abits);
    cfg.fbits = get_or<int>(j, "fbits", get_or<int>(j, "abits", cfg.abits));
    cfg.classes = get_or<int>(j, "classes", cfg.classes);
    cfg.input_channels = get_or<int>(j, "input_channels", cfg.input_channels);
    cfg.input_size = get_or<int>(j, "input_size", cfg.input_size);
    if (j.contains("granularity"))
        cfg.conv_granularity =
            parse_granularity(j.at("granularity").get<std::string>(), "granularity");

    if (cfg.epochs < 1) throw std::invalid_argument("epochs: must be >= 1");
    if (cfg.batch < 2) throw std::invalid_argument("batch: must be >= 2");
    if (cfg.lr <= 0.0) throw std::invalid_argument("lr: must be positive");
    require_range("lr_decay", cfg.lr_decay, 1e-6, 1.0);
    if (cfg.lr_step < 1) throw std::invalid_argument("lr_step: must be >= 1");
    require_range("momentum", cfg.momentum, 0.0, 0.999);
    if (cfg.weight_decay < 0.0) throw std::invalid_argument("weight_decay: must be >= 0");
    if (cfg.log_every < 1) throw std::invalid_argument("log_every: must be >= 1");
    if (cfg.wbits != 1 && cfg.wbits != 2)
        throw std::invalid_argument("wbits: must be 1 (binary) or 2 (ternary)");
    if (cfg.abits < 2 || cfg.abits > 8)
        throw std::invalid_argument("abits: must be in [2, 8]");
    if (cfg.fbits < 0 || cfg.fbits > cfg.abits)
        throw std::invalid_argument("fbits: must be in [0, abits]");
    if (cfg.classes < 2 || cfg.classes > 1000)
        throw std::invalid_argument("classes: must be in [2, 1000]");
    if (cfg.input_channels < 1) throw std::invalid_argument("input_channels: must be >= 1");
    if (cfg.input_size < 8 || cfg.input_size % 4 != 0)
        throw std::invalid_argument("input_size: must be >= 8 and divisible by 4");

    build_reference_layers(cfg);
    return cfg;
}

void build_reference_layers(ModelConfig &cfg) {
    cfg.layers.clear();
    const int s0 = cfg.input_size;
    const int s1 = s0 / 2;          // after the stride-2 conv (pad 1, K 3)
    const int s2 = s0 / 4;
    const int k = cfg.abits, f = cfg.fbits;
    const QuantMode mode = cfg.quant_mode();

    auto conv = [&](int in_maps, int out_maps, int in_dim, int stride, bool quantized) {
        LayerSpec l;
        l.op = LayerSpec::Op::Conv;
        l.shape.K = 3;
        l.shape.I = in_maps;
        l.shape.N = out_maps;
        l.shape.F = in_dim;
        l.stride = stride;
        l.pad = 1;
        l.quantized = quantized;
        l.mode = mode;
        l.granularity = quantized ? cfg.conv_granularity : Granularity::LayerWise;
        return l;
    };
    auto bn = [&](int channels) {
        LayerSpec l;
        l.op = LayerSpec::Op::BatchNorm;
        l.shape.N = channels;
        l.act_bits = k;
        l.act_frac_bits = f;
        return l;
    };

    cfg.layers.push_back(conv(cfg.input_channels, 16, s0, 1, false));
    cfg.layers.push_back(bn(16));
    cfg.layers.push_back(conv(16, 32, s0, 2, true));
    cfg.layers.push_back(bn(32));
    cfg.layers.push_back(conv(32, 64, s1, 2, true));
    cfg.layers.push_back(bn(64));

    LayerSpec fc1;
    fc1.op = LayerSpec::Op::FC;
    fc1.shape.L = 64 * s2 * s2;
    fc1.shape.H = 128;
    fc1.quantized = true;
    fc1.mode = mode;
    fc1.granularity = Granularity::LayerWise;
    fc1.act_bits = k;
    fc1.act_frac_bits = f;
    cfg.layers.push_back(fc1);

    LayerSpec fc2;
    fc2.op = LayerSpec::Op::FC;
    fc2.shape.L = 128;
    fc2.shape.H = cfg.classes;
    fc2.quantized = false;
    cfg.layers.push_back(fc2);
}

} // namespace syq
