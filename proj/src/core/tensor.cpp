/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "core/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace syq {

Tensor4::Tensor4(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_) {
    if (n < 0 || c < 0 || h < 0 || w < 0)
        throw std::invalid_argument("Tensor4: negative dimension in " + shape_str());
    data.assign(static_cast<size_t>(size()), 0.0);
}

std::string Tensor4::shape_str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) +
           "x" + std::to_string(w);
}

Mat::Mat(int r, int c) : rows(r), cols(c) {
    if (r < 0 || c < 0)
        throw std::invalid_argument("Mat: negative dimension in " + shape_str());
    data.assign(static_cast<size_t>(size()), 0.0);
}

std::string Mat::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

void LayerShape::validate() const {
    if (K <= 0 || I <= 0 || N <= 0 || F <= 0 || L <= 0 || H <= 0)
        throw std::invalid_argument("LayerShape: all dimensions must be positive");
}

void check_finite(const Tensor4 &t, const char *what) {
    for (double v : t.data)
        if (!std::isfinite(v))
            throw std::invalid_argument(std::string(what) + ": non-finite value");
}

void check_finite(const Mat &m, const char *what) {
    for (double v : m.data)
        if (!std::isfinite(v))
            throw std::invalid_argument(std::string(what) + ": non-finite value");
}

} // namespace syq
