// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "asap/graymap.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>

#include "asap/errors.hpp"

namespace asap {

void write_graymap(std::ostream& out, std::size_t rows, std::size_t cols, std::span<const int> pixels) {
    if (pixels.size() != rows * cols) {
        throw ShapeError("graymap pixel count does not match dimensions");
    }
    out << "P2\n" << cols << ' ' << rows << '\n' << kGrayMax << '\n';
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (c) {
                out << ' ';
            }
            out << pixels[r * cols + c];
        }
        out << '\n';
    }
}

Graymap read_graymap(std::istream& in) {
    std::string magic;
    in >> magic;
    if (magic != "P2") {
        throw FormatError("not a plain graymap", 0);
    }
    Graymap g;
    int maxval = 0;
    if (!(in >> g.cols >> g.rows >> maxval) || maxval != kGrayMax) {
        throw FormatError("bad graymap header", static_cast<std::uint64_t>(std::max<std::streamoff>(0, in.tellg())));
    }
    g.pixels.resize(g.rows * g.cols);
    for (int& p : g.pixels) {
        if (!(in >> p) || p < 0 || p > maxval) {
            throw FormatError("bad graymap pixel", 0);
        }
    }
    return g;
}

}  // namespace asap
