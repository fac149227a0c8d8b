// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "asap/matrix_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "asap/errors.hpp"

namespace asap {

namespace {

// Refuse headers that would need more than 2^32 floats.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    }
    out.write(b.data(), b.size());
}

void put_f32(std::ostream& out, float f) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) {
        b[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
    }
    out.write(b.data(), b.size());
}

template <std::size_t N>
std::array<unsigned char, N> take(std::istream& in, std::uint64_t& offset, const char* what) {
    std::array<unsigned char, N> b{};
    in.read(reinterpret_cast<char*>(b.data()), N);
    if (in.gcount() != static_cast<std::streamsize>(N)) {
        throw FormatError(std::string("truncated matrix file while reading ") + what,
                          offset + static_cast<std::uint64_t>(in.gcount()));
    }
    offset += N;
    return b;
}

std::uint64_t get_u64(std::istream& in, std::uint64_t& offset, const char* what) {
    const auto b = take<8>(in, offset, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) {
        v = (v << 8) | b[i];
    }
    return v;
}

}  // namespace

void write_matrix(std::ostream& out, const Matrix& m) {
    out.write(kMatrixMagic.data(), static_cast<std::streamsize>(kMatrixMagic.size()));
    put_u64(out, m.rows());
    put_u64(out, m.cols());
    for (double v : m.data()) {
        put_f32(out, static_cast<float>(v));
    }
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    write_matrix(out, m);
    if (!out) {
        throw Error("failed writing " + path.string());
    }
}

Matrix read_matrix(std::istream& in) {
    std::uint64_t offset = 0;
    const auto magic = take<8>(in, offset, "magic");
    if (std::memcmp(magic.data(), kMatrixMagic.data(), magic.size()) != 0) {
        throw FormatError("bad magic, expected ASAPMAT1", 0);
    }
    const std::uint64_t rows = get_u64(in, offset, "row count");
    const std::uint64_t cols = get_u64(in, offset, "column count");
    if ((cols != 0 && rows > kMaxElements / cols) || rows * cols > kMaxElements) {
        throw FormatError("matrix dimensions too large", 8);
    }
    std::vector<double> data;
    data.reserve(rows * cols);
    for (std::uint64_t i = 0; i < rows * cols; ++i) {
        const std::uint64_t at = offset;
        const auto b = take<4>(in, offset, "matrix data");
        const std::uint32_t bits = std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
                                   (std::uint32_t{b[3]} << 24);
        const float f = std::bit_cast<float>(bits);
        if (std::isnan(f) || f == std::numeric_limits<float>::infinity()) {
            throw FormatError("non-finite matrix entry", at);
        }
        data.push_back(static_cast<double>(f));
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError("trailing bytes after matrix data", offset);
    }
    return Matrix(rows, cols, std::move(data));
}

Matrix read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string(), 0);
    }
    return read_matrix(in);
}

}  // namespace asap
