/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include "core/dataset.hpp"
#include "core/model_file.hpp"
#include "core/tensor.hpp"

#include <span>
#include <vector>

namespace syq {

// Unpacked execution form of a quantized conv/FC layer: ternary codes as
// int8, scales widened to f64, plus the subgroup id of each kernel tap.
struct QLayerView {
    const QLayer *layer = nullptr;
    std::vector<int8_t> codes;          // row-major (n, i, k1, k2) or (h, l)
    std::vector<double> alpha;
    std::vector<uint32_t> tap_group;    // subgroup id per patch element
};

QLayerView make_layer_view(const QLayer &layer);

// Decomposed dot product for one input patch. The patch is the receptive
// field laid out (i, k1, k2) for conv layers (length K*K*I) or the input
// vector for FC layers (length L). Per output map, one sub-accumulation per
// subgroup uses only add/subtract/skip; each partial sum is then scaled by
// its subgroup coefficient. Returns one value per output map.
std::vector<double> subdot_infer(const QLayerView &view, std::span<const double> patch);

struct EvalResult {
    double top1 = 0.0;
    double loss = 0.0;
};

// Runs the full exported network on one sample (channels x h x w, row-major)
// and returns logits.
std::vector<double> model_forward(const QuantizedModel &model, std::span<const double> image);

int model_predict(const QuantizedModel &model, std::span<const double> image);

EvalResult evaluate_model(const QuantizedModel &model, const Dataset &data);

std::vector<int> model_predict_batch(const QuantizedModel &model, const Dataset &data);

} // namespace syq
