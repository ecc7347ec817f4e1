/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "core/dataset.hpp"

#include "core/common.hpp"
#include "core/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace syq {

namespace {

constexpr uint32_t kImageMagic = 0x00000803;
constexpr uint32_t kLabelMagic = 0x00000801;

uint32_t read_be32(std::ifstream &in, const std::string &path, uint64_t &offset) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char *>(buf), 4);
    if (in.gcount() != 4)
        throw FormatError(path + ": truncated at byte offset " + std::to_string(offset));
    offset += 4;
    return (uint32_t(buf[0]) << 24) | (uint32_t(buf[1]) << 16) | (uint32_t(buf[2]) << 8) |
           uint32_t(buf[3]);
}

} // namespace

Dataset load_idx_dataset(const std::string &images_path, const std::string &labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw FormatError(images_path + ": cannot open");
    uint64_t img_off = 0;
    const uint32_t img_magic = read_be32(img, images_path, img_off);
    if (img_magic != kImageMagic) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%s: bad image magic 0x%08x at byte offset 0, expected 0x%08x",
                      images_path.c_str(), img_magic, kImageMagic);
        throw FormatError(buf);
    }
    const uint32_t count = read_be32(img, images_path, img_off);
    const uint32_t rows = read_be32(img, images_path, img_off);
    const uint32_t cols = read_be32(img, images_path, img_off);
    if (count > 1u << 24 || rows == 0 || cols == 0 || rows > 4096 || cols > 4096)
        throw FormatError(images_path + ": implausible header dimensions");

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw FormatError(labels_path + ": cannot open");
    uint64_t lab_off = 0;
    const uint32_t lab_magic = read_be32(lab, labels_path, lab_off);
    if (lab_magic != kLabelMagic) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%s: bad label magic 0x%08x at byte offset 0, expected 0x%08x",
                      labels_path.c_str(), lab_magic, kLabelMagic);
        throw FormatError(buf);
    }
    const uint32_t lab_count = read_be32(lab, labels_path, lab_off);
    if (lab_count != count)
        throw FormatError(labels_path + ": " + std::to_string(lab_count) + " labels for " +
                          std::to_string(count) + " images");

    Dataset d;
    d.images = Tensor4(static_cast<int>(count), 1, static_cast<int>(rows),
                       static_cast<int>(cols));
    d.labels.resize(count);

    const uint64_t pixels = static_cast<uint64_t>(rows) * cols;
    std::vector<unsigned char> rowbuf(pixels);
    for (uint32_t s = 0; s < count; ++s) {
        img.read(reinterpret_cast<char *>(rowbuf.data()), static_cast<std::streamsize>(pixels));
        if (img.gcount() != static_cast<std::streamsize>(pixels))
            throw FormatError(images_path + ": truncated at byte offset " +
                              std::to_string(img_off));
        double *dst = &d.images.data[d.images.index(static_cast<int>(s), 0, 0, 0)];
        for (uint64_t p = 0; p < pixels; ++p) dst[p] = rowbuf[p] / 255.0;
        img_off += pixels;
    }

    std::vector<unsigned char> labbuf(count);
    lab.read(reinterpret_cast<char *>(labbuf.data()), static_cast<std::streamsize>(count));
    if (lab.gcount() != static_cast<std::streamsize>(count))
        throw FormatError(labels_path + ": truncated at byte offset " + std::to_string(lab_off));

    int maxlab = 0;
    for (uint32_t s = 0; s < count; ++s) {
        d.labels[s] = labbuf[s];
        maxlab = std::max(maxlab, static_cast<int>(labbuf[s]));
    }
    d.classes = maxlab + 1;
    return d;
}

Dataset generate_synthetic(uint64_t seed, int classes, int count) {
    if (classes < 2 || classes > 16)
        throw std::invalid_argument("generate_synthetic: classes must be in [2, 16]");
    if (count <= 0) throw std::invalid_argument("generate_synthetic: count must be positive");

    constexpr int kSide = 16;
    Rng rng(seed);

    // Class centers on a 4x4 cell grid; every class gets its own cell.
    std::vector<std::pair<double, double>> centers(classes);
    for (int c = 0; c < classes; ++c) {
        const int gx = c % 4, gy = c / 4;
        centers[c] = {gx * 4.0 + 2.0, gy * 4.0 + 2.0};
    }

    Dataset d;
    d.images = Tensor4(count, 1, kSide, kSide);
    d.labels.resize(count);
    d.classes = classes;

    const double sigma = 1.6;
    for (int s = 0; s < count; ++s) {
        const int label = static_cast<int>(rng.below(static_cast<uint64_t>(classes)));
        d.labels[s] = label;
        const double cx = centers[label].first + rng.normal(0.0, 0.35);
        const double cy = centers[label].second + rng.normal(0.0, 0.35);
        double *img = &d.images.data[d.images.index(s, 0, 0, 0)];
        for (int y = 0; y < kSide; ++y) {
            for (int x = 0; x < kSide; ++x) {
                const double dx = x - cx, dy = y - cy;
                double v = 0.9 * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                v += rng.normal(0.0, 0.03);
                img[y * kSide + x] = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return d;
}

Dataset dataset_prefix(const Dataset &d, int limit) {
    if (limit <= 0 || limit >= d.count()) return d;
    Dataset out;
    out.images = Tensor4(limit, d.images.c, d.images.h, d.images.w);
    const int64_t per = d.images.size() / d.images.n;
    std::copy_n(d.images.data.begin(), per * limit, out.images.data.begin());
    out.labels.assign(d.labels.begin(), d.labels.begin() + limit);
    out.classes = d.classes;
    return out;
}

} // namespace syq
