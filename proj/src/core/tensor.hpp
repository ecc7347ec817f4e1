/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace syq {

// Dense 4-d tensor, row-major double storage. Convolution data uses
// (batch, channels, height, width); convolution weights use
// (out_maps, in_maps, kh, kw).
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> data;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_);

    int64_t size() const { return static_cast<int64_t>(n) * c * h * w; }

    int64_t index(int i, int j, int k, int l) const {
        return ((static_cast<int64_t>(i) * c + j) * h + k) * w + l;
    }
    double &at(int i, int j, int k, int l) { return data[index(i, j, k, l)]; }
    double at(int i, int j, int k, int l) const { return data[index(i, j, k, l)]; }

    std::string shape_str() const;
    bool same_shape(const Tensor4 &o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
};

// Row-major matrix. FC activations are stored (features x batch), FC weights
// (out_features x in_features).
struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(int r, int c);

    int64_t size() const { return static_cast<int64_t>(rows) * cols; }
    double &at(int r, int c) { return data[static_cast<int64_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<int64_t>(r) * cols + c]; }

    std::string shape_str() const;
};

// Per-layer dimension bundle used by the quantizer, the subgroup index and
// the complexity model. K: kernel size, I: input feature maps, N: output
// feature maps, F: input feature-map spatial dimension, L: FC input width,
// H: FC hidden nodes. Unused members stay at 1.
struct LayerShape {
    int K = 1, I = 1, N = 1, F = 1, L = 1, H = 1;

    uint64_t weight_count() const {                     // Z
        return static_cast<uint64_t>(K) * K * I * N;
    }
    uint64_t op_count() const {                         // P
        return weight_count() * static_cast<uint64_t>(F) * F;
    }

    void validate() const;
};

// Throws std::invalid_argument when any tensor entry is non-finite.
void check_finite(const Tensor4 &t, const char *what);
void check_finite(const Mat &m, const char *what);

} // namespace syq
