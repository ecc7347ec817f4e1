/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "core/cost_model.hpp"

#include <stdexcept>

namespace syq {

const char *cost_method_name(CostMethod m) {
    switch (m) {
    case CostMethod::Layer: return "layer";
    case CostMethod::Row: return "row";
    case CostMethod::Pixel: return "pixel";
    case CostMethod::Asymmetric: return "asymmetric";
    case CostMethod::Grouping: return "grouping";
    case CostMethod::Channel: return "channel";
    }
    return "?";
}

bool parse_cost_method(const std::string &s, CostMethod *out) {
    for (CostMethod m : {CostMethod::Layer, CostMethod::Row, CostMethod::Pixel,
                         CostMethod::Asymmetric, CostMethod::Grouping, CostMethod::Channel}) {
        if (s == cost_method_name(m)) {
            *out = m;
            return true;
        }
    }
    return false;
}

CostReport complexity_report(const LayerShape &shape, CostMethod method) {
    shape.validate();
    const uint64_t k = static_cast<uint64_t>(shape.K);
    const uint64_t n = static_cast<uint64_t>(shape.N);
    const uint64_t p = shape.op_count();
    const uint64_t z = shape.weight_count();

    CostReport r;
    r.method = method;
    r.ops = p;
    switch (method) {
    case CostMethod::Layer: r.scalars = 1; break;
    case CostMethod::Row: r.scalars = k; break;
    case CostMethod::Pixel: r.scalars = k * k; break;
    case CostMethod::Asymmetric:
        r.scalars = 2;
        r.ops = p + z;
        break;
    case CostMethod::Grouping:
        if (n % 4 != 0)
            throw std::invalid_argument(
                "complexity_report: grouping is undefined for N = " + std::to_string(n) +
                " (requires N divisible by 4)");
        r.scalars = k * k * n / 4;
        break;
    case CostMethod::Channel: r.scalars = n; break;
    }
    return r;
}

std::vector<CostReport> complexity_report_all(const LayerShape &shape) {
    std::vector<CostReport> rows;
    for (CostMethod m : {CostMethod::Layer, CostMethod::Row, CostMethod::Pixel,
                         CostMethod::Asymmetric, CostMethod::Grouping, CostMethod::Channel})
        rows.push_back(complexity_report(shape, m));
    return rows;
}

SubOpCounts sub_op_counts(const LayerShape &shape) {
    shape.validate();
    SubOpCounts c;
    c.lv = static_cast<uint64_t>(shape.K) * shape.K * shape.I;
    c.mul = c.lv + static_cast<uint64_t>(shape.K) * shape.K;
    c.add = c.lv - 1;
    return c;
}

} // namespace syq
