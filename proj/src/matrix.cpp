// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "asap/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "asap/errors.hpp"

namespace asap {

namespace {

void check_entries(std::span<const double> data) {
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double v = data[i];
        if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
            throw ShapeError("matrix entry " + std::to_string(i) + " is not finite");
        }
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : m_rows(rows), m_cols(cols), m_data(rows * cols, fill) {
    check_entries(m_data);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : m_rows(rows), m_cols(cols), m_data(std::move(data)) {
    if (m_data.size() != rows * cols) {
        throw ShapeError("matrix data has " + std::to_string(m_data.size()) + " entries, expected " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
    check_entries(m_data);
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    m_rows = rows.size();
    m_cols = m_rows ? rows.begin()->size() : 0;
    m_data.reserve(m_rows * m_cols);
    for (const auto& r : rows) {
        if (r.size() != m_cols) {
            throw ShapeError("ragged matrix initializer");
        }
        m_data.insert(m_data.end(), r.begin(), r.end());
    }
    check_entries(m_data);
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

double Matrix::at(std::size_t r, std::size_t c) const {
    if (r >= m_rows || c >= m_cols) {
        throw ShapeError("index (" + std::to_string(r) + ", " + std::to_string(c) + ") out of range for " +
                         std::to_string(m_rows) + "x" + std::to_string(m_cols) + " matrix");
    }
    return (*this)(r, c);
}

Matrix Matrix::transposed() const {
    Matrix t(m_cols, m_rows);
    for (std::size_t r = 0; r < m_rows; ++r) {
        for (std::size_t c = 0; c < m_cols; ++c) {
            t(c, r) = (*this)(r, c);
        }
    }
    return t;
}

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), m_cols);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= m_rows) {
            throw ShapeError("row index " + std::to_string(indices[i]) + " out of range");
        }
        const auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

}  // namespace asap
