/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "core/subgroups.hpp"

#include <stdexcept>
#include <string>

namespace syq {

const char *granularity_name(Granularity g) {
    switch (g) {
    case Granularity::PixelWise: return "pixel";
    case Granularity::RowWise: return "row";
    case Granularity::LayerWise: return "layer";
    }
    return "?";
}

SubgroupIndex build_subgroups(const LayerShape &shape, LayerKind kind, Granularity g) {
    shape.validate();
    SubgroupIndex idx;

    if (kind == LayerKind::FC) {
        if (g != Granularity::LayerWise)
            throw std::invalid_argument(std::string("build_subgroups: FC layers support only "
                                                    "layer-wise scaling, got ") +
                                        granularity_name(g));
        const uint64_t z = static_cast<uint64_t>(shape.L) * shape.H;
        idx.group_of.assign(z, 0);
        idx.group_count = 1;
        idx.group_size = static_cast<uint32_t>(z);
        return idx;
    }

    const int K = shape.K, I = shape.I, N = shape.N;
    const uint64_t z = shape.weight_count();
    idx.group_of.resize(z);
    switch (g) {
    case Granularity::PixelWise:
        idx.group_count = static_cast<uint32_t>(K) * K;
        idx.group_size = static_cast<uint32_t>(I) * N;
        break;
    case Granularity::RowWise:
        idx.group_count = static_cast<uint32_t>(K);
        idx.group_size = static_cast<uint32_t>(I) * N * K;
        break;
    case Granularity::LayerWise:
        idx.group_count = 1;
        idx.group_size = static_cast<uint32_t>(z);
        break;
    }

    uint64_t j = 0;
    for (int n = 0; n < N; ++n) {
        for (int i = 0; i < I; ++i) {
            for (int k1 = 0; k1 < K; ++k1) {
                for (int k2 = 0; k2 < K; ++k2, ++j) {
                    uint32_t gidx = 0;
                    if (g == Granularity::PixelWise)
                        gidx = static_cast<uint32_t>(k1 * K + k2);
                    else if (g == Granularity::RowWise)
                        gidx = static_cast<uint32_t>(k1);
                    idx.group_of[j] = gidx;
                }
            }
        }
    }
    return idx;
}

namespace {

// Column index of conv coordinate (n, i, k1, k2) within its subgroup row.
// Pixel rows run over (i, n); row-wise rows run over (k2, i, n).
int64_t subgroup_column(Granularity g, int n, int i, int k1, int k2, int N, int I, int K) {
    switch (g) {
    case Granularity::PixelWise:
        return static_cast<int64_t>(i) * N + n;
    case Granularity::RowWise:
        return (static_cast<int64_t>(k2) * I + i) * N + n;
    case Granularity::LayerWise:
        return ((static_cast<int64_t>(n) * I + i) * K + k1) * K + k2;
    }
    return 0;
}

int64_t subgroup_row(Granularity g, int k1, int k2, int K) {
    switch (g) {
    case Granularity::PixelWise: return static_cast<int64_t>(k1) * K + k2;
    case Granularity::RowWise: return k1;
    case Granularity::LayerWise: return 0;
    }
    return 0;
}

} // namespace

Mat reshape_to_matrix(const Tensor4 &weights, Granularity g) {
    const int N = weights.n, I = weights.c, K = weights.h;
    if (weights.w != K)
        throw std::invalid_argument("reshape_to_matrix: non-square kernel in " +
                                    weights.shape_str());
    int rows, cols;
    switch (g) {
    case Granularity::PixelWise: rows = K * K; cols = I * N; break;
    case Granularity::RowWise: rows = K; cols = I * N * K; break;
    case Granularity::LayerWise: rows = 1; cols = K * K * I * N; break;
    default: throw std::invalid_argument("reshape_to_matrix: bad granularity");
    }

    Mat m(rows, cols);
    for (int n = 0; n < N; ++n)
        for (int i = 0; i < I; ++i)
            for (int k1 = 0; k1 < K; ++k1)
                for (int k2 = 0; k2 < K; ++k2)
                    m.at(static_cast<int>(subgroup_row(g, k1, k2, K)),
                         static_cast<int>(subgroup_column(g, n, i, k1, k2, N, I, K))) =
                        weights.at(n, i, k1, k2);
    return m;
}

Tensor4 reshape_from_matrix(const Mat &m, int N, int I, int K, Granularity g) {
    Tensor4 t(N, I, K, K);
    for (int n = 0; n < N; ++n)
        for (int i = 0; i < I; ++i)
            for (int k1 = 0; k1 < K; ++k1)
                for (int k2 = 0; k2 < K; ++k2)
                    t.at(n, i, k1, k2) =
                        m.at(static_cast<int>(subgroup_row(g, k1, k2, K)),
                             static_cast<int>(subgroup_column(g, n, i, k1, k2, N, I, K)));
    return t;
}

Mat apply_diagonal_scale(const Mat &q, const ScaleVector &alpha) {
    if (static_cast<int>(alpha.alpha.size()) != q.rows)
        throw std::invalid_argument("apply_diagonal_scale: " +
                                    std::to_string(alpha.alpha.size()) + " scales for " +
                                    std::to_string(q.rows) + " rows");
    Mat out(q.rows, q.cols);
    for (int r = 0; r < q.rows; ++r) {
        const double a = alpha.alpha[r];
        for (int c = 0; c < q.cols; ++c) out.at(r, c) = a * q.at(r, c);
    }
    return out;
}

} // namespace syq
