/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include "core/tensor.hpp"

#include <cstdint>
#include <vector>

namespace syq {

// Weight subgroup granularity for a quantized layer. Pixel-wise groups the
// K*K spatially equivalent kernel positions (K^2 groups of I*N weights each),
// row-wise groups kernel rows (K groups of I*N*K), layer-wise is one group.
enum class Granularity : uint8_t { PixelWise = 0, RowWise = 1, LayerWise = 2 };

enum class LayerKind : uint8_t { Conv = 0, FC = 1 };

// Partition of the flat weight coordinates of one layer into subgroups that
// share a scaling coefficient.
struct SubgroupIndex {
    std::vector<uint32_t> group_of;   // flat coordinate -> subgroup id
    uint32_t group_count = 0;
    uint32_t group_size = 0;          // identical for all subgroups
};

// One positive scaling coefficient per subgroup.
struct ScaleVector {
    std::vector<double> alpha;
};

const char *granularity_name(Granularity g);

// Conv weights are indexed (n, i, k1, k2) row-major; coordinate (k1, k2)
// determines the subgroup. FC layers accept only LayerWise.
SubgroupIndex build_subgroups(const LayerShape &shape, LayerKind kind, Granularity g);

// Reshapes (N, I, K, K) conv weights so that row g of the result collects
// subgroup g: PixelWise -> K^2 x (I*N), RowWise -> K x (I*N*K),
// LayerWise -> 1 x Z. reshape_from_matrix is the exact inverse.
Mat reshape_to_matrix(const Tensor4 &weights, Granularity g);
Tensor4 reshape_from_matrix(const Mat &m, int N, int I, int K, Granularity g);

// Row i of the result is alpha[i] times row i of q; equivalent to the dense
// product diag(alpha) * q without materializing the diagonal matrix.
Mat apply_diagonal_scale(const Mat &q, const ScaleVector &alpha);

} // namespace syq
