/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace syq {

// Malformed input data or model/checkpoint files.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string &msg) : std::runtime_error(msg) {}
};

// Training loss became non-finite. step identifies where.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string &msg, int64_t step)
        : std::runtime_error(msg), step_(step) {}
    int64_t step() const { return step_; }

private:
    int64_t step_;
};

} // namespace syq
