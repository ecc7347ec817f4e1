/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include "core/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace syq {

// Analytic scaling-coefficient and operation counts for one conv layer under
// the different scaling schemes. Counts are MAC-equivalent totals, not timed
// measurements. With P = K^2*I*N*F^2 and Z = K^2*I*N:
//   layer (1, P), row (K, P), pixel (K^2, P), asymmetric (2, P+Z),
//   grouping (K^2*N/4, P), channel (N, P).
enum class CostMethod : uint8_t {
    Layer = 0,
    Row = 1,
    Pixel = 2,
    Asymmetric = 3,
    Grouping = 4,
    Channel = 5,
};

struct CostReport {
    CostMethod method = CostMethod::Layer;
    uint64_t scalars = 0;
    uint64_t ops = 0;
};

const char *cost_method_name(CostMethod m);
bool parse_cost_method(const std::string &s, CostMethod *out);

// Throws std::invalid_argument for grouping when N is not divisible by 4
// (the per-4-filter grouping is undefined there).
CostReport complexity_report(const LayerShape &shape, CostMethod method);

std::vector<CostReport> complexity_report_all(const LayerShape &shape);

// Multiply/add counts of one decomposed output dot product with pixel-wise
// scaling: L_v = K^2*I low-precision taps plus K^2 full-precision scale
// multiplies; the decomposition adds no additions.
struct SubOpCounts {
    uint64_t lv = 0;
    uint64_t mul = 0;   // L_v + K^2
    uint64_t add = 0;   // L_v - 1
};

SubOpCounts sub_op_counts(const LayerShape &shape);

} // namespace syq
