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

struct Dataset {
    Tensor4 images;                 // (count, channels, h, w), values in [0, 1]
    std::vector<int32_t> labels;
    int classes = 0;

    int count() const { return images.n; }
};

// Reads the big-endian IDX image/label pair (magic 0x00000803 / 0x00000801).
// Pixels are scaled to [0, 1]. Throws FormatError naming the byte offset on
// bad magic or truncation.
Dataset load_idx_dataset(const std::string &images_path, const std::string &labels_path);

// Seeded 16x16 single-channel task: one Gaussian intensity blob per class at
// a class-specific position plus light pixel noise. Linearly separable at
// full precision; bit-reproducible for a fixed seed.
Dataset generate_synthetic(uint64_t seed, int classes, int count);

// In-order prefix of a dataset; limit <= 0 keeps everything.
Dataset dataset_prefix(const Dataset &d, int limit);

} // namespace syq
