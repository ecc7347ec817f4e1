/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include "core/dataset.hpp"
#include "core/infer.hpp"
#include "core/model.hpp"
#include "core/model_file.hpp"
#include "core/nn_ops.hpp"
#include "core/rng.hpp"
#include "core/scaling.hpp"

#include <string>
#include <vector>

namespace syq {

// Trainable state of one layer. Conv layers keep weights in w4, FC layers in
// w2; batch-norm layers keep their affine parameters and running statistics.
// Quantized layers additionally carry the subgroup index and scale state.
struct LayerState {
    Tensor4 w4, vel4;
    Mat w2, vel2;
    BatchNormParams bn;
    std::vector<double> bn_gamma_vel, bn_beta_vel;
    SubgroupIndex groups;
    ScaleState scale;
    std::vector<double> scale_vel;
};

struct TrainState {
    ModelConfig config;
    std::string config_json;            // verbatim run configuration
    std::vector<LayerState> layers;
    double lr = 0.0;
    int64_t step = 0;
    int epoch = 0;
    Rng rng;
};

TrainState init_train_state(const ModelConfig &cfg, const std::string &config_json);

struct LayerFwdCache {
    Conv2dCache conv;
    FcCache fc;
    BatchNormCache bn;
    Tensor4 bn_input;
    MaskedQuant mq;                     // quantized layers: codes of the step
    std::vector<uint8_t> act_mask;      // activation sites: 1 iff 0 <= x <= M
    bool flattened_input = false;       // FC layer that consumed the conv stack
    int pre_n = 0, pre_c = 0, pre_h = 0, pre_w = 0;
};

struct ForwardCache {
    std::vector<LayerFwdCache> layers;
    Mat logits;
    int batch = 0;
};

// Quantized forward pass. Quantized layers compute with w_hat = alpha (.) Q
// per subgroup and activations pass through the fixed-point quantizer;
// full-precision layers bypass both. When frozen_acts is given, every
// activation site applies that cache's pass-through mask instead of the
// quantizer (the surrogate the straight-through backward differentiates,
// used by the gradient checks).
Mat net_forward(const Tensor4 &batch, TrainState &state, bool training,
                ForwardCache *cache, const ForwardCache *frozen_acts = nullptr);

struct LayerGrads {
    Tensor4 gw4;
    Mat gw2;
    std::vector<double> g_gamma, g_beta;
    std::vector<double> g_alpha;
};

struct NetGradients {
    std::vector<LayerGrads> layers;
    double loss = 0.0;
};

NetGradients net_backward(const ForwardCache &cache, const std::vector<int32_t> &targets,
                          const TrainState &state);

// Backward from an explicit upstream logits gradient (loss handling skipped).
NetGradients net_backward_from_grad(const ForwardCache &cache, const Mat &grad_logits,
                                    const TrainState &state);

struct StepResult {
    double loss = 0.0;
    double top1 = 0.0;
};

// One SGD-with-momentum step over the batch, including the scale updates and
// the step-decay learning-rate schedule. Throws DivergenceError when the
// loss turns non-finite.
StepResult train_step(TrainState &state, const Tensor4 &images,
                      const std::vector<int32_t> &labels);

// Snapshot of the current state in deployment form: recomputed codes, scales
// and batch-norm parameters narrowed to f32 exactly as the SYQ1 writer
// stores them.
QuantizedModel export_quantized_model(const TrainState &state);

// Evaluation runs on the quantized inference path (the exported form), so
// in-memory results match a written-and-reloaded model exactly.
EvalResult evaluate_state(const TrainState &state, const Dataset &data);

struct FitResult {
    double final_top1 = 0.0;
    double best_top1 = 0.0;
    int64_t steps = 0;
};

// Full training loop. When run_dir is non-empty, writes config.json (the
// verbatim configuration), train.log (tab-separated: step, epoch, lr, batch
// loss, batch top-1), checkpoints/final.syqc and metrics.json.
FitResult fit(TrainState &state, const Dataset &train_data, const Dataset &val_data,
              const std::string &run_dir);

// Versioned binary checkpoint; round-trips TrainState bit-exactly.
void save_checkpoint(const TrainState &state, const std::string &path);
TrainState load_checkpoint(const std::string &path);

// Deterministic shortest round-trip formatting for doubles (logs, metrics).
std::string format_double(double v);

} // namespace syq
