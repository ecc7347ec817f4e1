/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "core/model_file.hpp"

#include "core/common.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace syq {

namespace {

constexpr char kMagic[4] = {'S', 'Y', 'Q', '1'};

void put_u16(std::vector<uint8_t> &out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t> &out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<uint8_t> &out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

class Reader {
public:
    Reader(const uint8_t *data, size_t size, std::string path)
        : data_(data), size_(size), path_(std::move(path)) {}

    uint64_t offset() const { return off_; }

    uint8_t u8() { return take(1)[0]; }
    uint16_t u16() {
        const uint8_t *p = take(2);
        return static_cast<uint16_t>(p[0] | (p[1] << 8));
    }
    uint32_t u32() {
        const uint8_t *p = take(4);
        return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) |
               (uint32_t(p[3]) << 24);
    }
    float f32() {
        const uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    const uint8_t *take(size_t n) {
        if (off_ + n > size_)
            throw FormatError(path_ + ": truncated at byte offset " + std::to_string(off_));
        const uint8_t *p = data_ + off_;
        off_ += n;
        return p;
    }
    void expect_end() const {
        if (off_ != size_)
            throw FormatError(path_ + ": " + std::to_string(size_ - off_) +
                              " trailing bytes at offset " + std::to_string(off_));
    }

private:
    const uint8_t *data_;
    size_t size_;
    uint64_t off_ = 0;
    std::string path_;
};

} // namespace

std::vector<uint8_t> pack_codes(std::span<const int8_t> q) {
    std::vector<uint8_t> out((q.size() + 3) / 4, 0);
    for (size_t j = 0; j < q.size(); ++j) {
        uint8_t code;
        switch (q[j]) {
        case 0: code = 0x0; break;
        case 1: code = 0x1; break;
        case -1: code = 0x3; break;
        default:
            throw std::logic_error("pack_codes: value " + std::to_string(q[j]) +
                                   " outside {-1, 0, +1}");
        }
        out[j / 4] |= static_cast<uint8_t>(code << ((j % 4) * 2));
    }
    return out;
}

std::vector<int8_t> unpack_codes(std::span<const uint8_t> bytes, uint64_t count) {
    if (bytes.size() * 4 < count)
        throw FormatError("unpack_codes: " + std::to_string(bytes.size()) + " bytes hold fewer "
                          "than " + std::to_string(count) + " codes");
    std::vector<int8_t> out(count);
    for (uint64_t j = 0; j < count; ++j) {
        const uint8_t code = (bytes[j / 4] >> ((j % 4) * 2)) & 0x3;
        switch (code) {
        case 0x0: out[j] = 0; break;
        case 0x1: out[j] = 1; break;
        case 0x3: out[j] = -1; break;
        default:
            throw FormatError("unpack_codes: reserved code 10 at weight " + std::to_string(j));
        }
    }
    return out;
}

uint64_t qlayer_record_size(const QLayer &layer) {
    return 4 + 24 + 2 + 4 + 4ull * layer.scales.size() + 4 + layer.codes.size();
}

void write_syq1(const QuantizedModel &model, const std::string &path) {
    if (model.layers.size() > 0xffff)
        throw std::invalid_argument("write_syq1: too many layers");

    std::vector<uint8_t> buf;
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put_u16(buf, model.version);
    put_u16(buf, static_cast<uint16_t>(model.layers.size()));

    for (const QLayer &l : model.layers) {
        buf.push_back(static_cast<uint8_t>(l.kind));
        buf.push_back(l.quantized ? 1 : 0);
        buf.push_back(static_cast<uint8_t>(l.granularity));
        buf.push_back(static_cast<uint8_t>(l.mode));
        for (uint32_t d : l.dims) put_u32(buf, d);
        buf.push_back(l.act_k);
        buf.push_back(l.act_f);
        put_u32(buf, static_cast<uint32_t>(l.scales.size()));
        for (float s : l.scales) put_f32(buf, s);
        put_u32(buf, static_cast<uint32_t>(l.codes.size()));
        buf.insert(buf.end(), l.codes.begin(), l.codes.end());
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_syq1: cannot open " + path);
    out.write(reinterpret_cast<const char *>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("write_syq1: write failed for " + path);
}

QuantizedModel read_syq1(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open");
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
    Reader r(buf.data(), buf.size(), path);

    const uint8_t *magic = r.take(4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError(path + ": bad magic at byte offset 0 (not a SYQ1 model)");

    QuantizedModel model;
    model.version = r.u16();
    if (model.version != 1)
        throw FormatError(path + ": unsupported format version " +
                          std::to_string(model.version));
    const uint16_t count = r.u16();

    for (uint16_t i = 0; i < count; ++i) {
        QLayer l;
        const uint8_t kind = r.u8();
        if (kind > 3)
            throw FormatError(path + ": unknown layer kind " + std::to_string(kind) +
                              " at byte offset " + std::to_string(r.offset() - 1));
        l.kind = static_cast<QLayerKind>(kind);
        l.quantized = r.u8() != 0;
        const uint8_t gran = r.u8();
        if (gran > 2)
            throw FormatError(path + ": unknown granularity " + std::to_string(gran));
        l.granularity = static_cast<Granularity>(gran);
        const uint8_t mode = r.u8();
        if (mode > 1) throw FormatError(path + ": unknown quant mode " + std::to_string(mode));
        l.mode = static_cast<QuantMode>(mode);
        for (uint32_t &d : l.dims) d = r.u32();
        l.act_k = r.u8();
        l.act_f = r.u8();

        const uint32_t nscales = r.u32();
        l.scales.resize(nscales);
        for (uint32_t s = 0; s < nscales; ++s) l.scales[s] = r.f32();

        const uint32_t codelen = r.u32();
        const uint8_t *codes = r.take(codelen);
        l.codes.assign(codes, codes + codelen);

        model.layers.push_back(std::move(l));
    }
    r.expect_end();
    return model;
}

} // namespace syq
