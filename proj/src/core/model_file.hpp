/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include "core/model.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace syq {

// SYQ1 container layout (little-endian):
//   magic "SYQ1", version u16, layer count u16;
//   per layer: kind u8, quantized u8, granularity u8, mode u8,
//              dims 6*u32 (K I N F L H; unused = 0), act k u8, act f u8,
//              scale count u32, scales f32[], code length u32, code bytes.
// Quantized layers pack 2 bits per weight in row-major order
// (00 -> 0, 01 -> +1, 11 -> -1, 10 reserved), zero-padded to a byte.
// Full-precision layers carry their weights as f32 in the code stream.
// Batch-norm layers carry [gamma | beta | mean | var] in the scale stream.
// Layer kinds: 0 conv stride 1, 1 conv stride 2 (both pad K/2), 2 fully
// connected, 3 batch norm.

enum class QLayerKind : uint8_t { ConvS1 = 0, ConvS2 = 1, FC = 2, BatchNorm = 3 };

struct QLayer {
    QLayerKind kind = QLayerKind::ConvS1;
    bool quantized = false;
    Granularity granularity = Granularity::LayerWise;
    QuantMode mode = QuantMode::Ternary;
    uint32_t dims[6] = {0, 0, 0, 0, 0, 0};   // K I N F L H
    uint8_t act_k = 0, act_f = 0;
    std::vector<float> scales;
    std::vector<uint8_t> codes;

    uint32_t dim_k() const { return dims[0]; }
    uint32_t dim_i() const { return dims[1]; }
    uint32_t dim_n() const { return dims[2]; }
    uint32_t dim_f() const { return dims[3]; }
    uint32_t dim_l() const { return dims[4]; }
    uint32_t dim_h() const { return dims[5]; }

    uint64_t weight_count() const {
        if (kind == QLayerKind::FC) return static_cast<uint64_t>(dim_l()) * dim_h();
        return static_cast<uint64_t>(dim_k()) * dim_k() * dim_i() * dim_n();
    }
    int conv_stride() const { return kind == QLayerKind::ConvS2 ? 2 : 1; }
};

struct QuantizedModel {
    uint16_t version = 1;
    std::vector<QLayer> layers;
};

// 2-bit code packing. pack throws on values outside {-1, 0, +1}; unpack
// throws FormatError on the reserved code 10.
std::vector<uint8_t> pack_codes(std::span<const int8_t> q);
std::vector<int8_t> unpack_codes(std::span<const uint8_t> bytes, uint64_t count);

void write_syq1(const QuantizedModel &model, const std::string &path);
QuantizedModel read_syq1(const std::string &path);

// Serialized byte size of one layer record.
uint64_t qlayer_record_size(const QLayer &layer);

} // namespace syq
