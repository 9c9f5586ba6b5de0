#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "oodgen/errors.hpp"

namespace oodgen {

/// Row-major dense matrix of doubles. The single numeric container for data
/// batches, network weights, feature embeddings and gradients.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // length rows * cols, row-major

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    DenseMatrix(std::size_t r, std::size_t c, std::vector<double> values);

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    std::size_t size() const { return data.size(); }
    bool all_finite() const;

    /// Copies row r of src into row dst_r of *this. Column counts must match.
    void set_row(std::size_t dst_r, const DenseMatrix& src, std::size_t src_r);
};

/// a[m x k] * b[k x n] -> [m x n]
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

/// a^T * b, with a[k x m], b[k x n] -> [m x n]
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);

/// a * b^T, with a[m x k], b[n x k] -> [m x n]
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);

void add_row_vector(DenseMatrix& m, std::span<const double> v);

inline void check_shape(bool ok, const char* what) {
    if (!ok) throw ShapeError(what);
}

}  // namespace oodgen
