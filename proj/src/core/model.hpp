/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include "core/act_quant.hpp"
#include "core/subgroups.hpp"
#include "core/weight_quant.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace syq {

// One step of the executed layer sequence. Conv and FC layers own weights;
// BatchNorm owns per-channel affine parameters and running statistics. Any
// layer may be followed by an activation quantizer (act_bits > 0).
struct LayerSpec {
    enum class Op : uint8_t { Conv = 0, FC = 1, BatchNorm = 2 };

    Op op = Op::Conv;
    LayerShape shape;               // Conv: K/I/N/F; FC: L/H; BatchNorm: N = channels
    int stride = 1;
    int pad = 0;
    bool quantized = false;
    QuantMode mode = QuantMode::Ternary;
    Granularity granularity = Granularity::LayerWise;
    int act_bits = 0;               // 0: no activation after this layer
    int act_frac_bits = 0;

    ActQuantConfig act_config() const { return ActQuantConfig{act_bits, act_frac_bits}; }
};

// Full run configuration: architecture plus training hyperparameters. Every
// field has a default; parse_run_config applies them and rejects unknown or
// out-of-range settings.
struct ModelConfig {
    std::vector<LayerSpec> layers;

    int classes = 10;
    int input_channels = 1;
    int input_size = 28;

    uint64_t seed = 7;
    int epochs = 5;
    int batch = 64;
    double lr = 0.02;
    double lr_decay = 0.2;
    int lr_step = 2000;             // steps between learning-rate decays
    double momentum = 0.9;
    double weight_decay = 5e-6;
    int log_every = 100;
    int train_limit = 0;            // cap on training samples; 0 = all
    int val_limit = 0;
    bool literal_scale_grad = false;

    int wbits = 2;                  // 1: binary, 2: ternary
    int abits = 8;
    int fbits = 8;
    Granularity conv_granularity = Granularity::PixelWise;

    QuantMode quant_mode() const {
        return wbits == 1 ? QuantMode::Binary : QuantMode::Ternary;
    }
};

// Parses the JSON run configuration (defaults applied, unknown keys
// rejected) and instantiates the reference architecture for the configured
// input size and class count. Throws std::invalid_argument naming the field
// on any invalid setting.
ModelConfig parse_run_config(const std::string &json_text);

// Reference desk-scale network:
//   conv 3x3x16 (full precision) - BN - conv 3x3x32 /2 (quantized) - BN -
//   conv 3x3x64 /2 (quantized) - BN - FC 128 (quantized, layer-wise) -
//   FC classes (full precision), with the fixed-point activation quantizer
//   after every BN and after the first FC.
void build_reference_layers(ModelConfig &cfg);

} // namespace syq
