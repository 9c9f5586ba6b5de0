#include "oodgen/matrix.hpp"

#include <cmath>
#include <utility>

namespace oodgen {

DenseMatrix::DenseMatrix(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
    check_shape(data.size() == rows * cols, "DenseMatrix: data length != rows*cols");
}

bool DenseMatrix::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void DenseMatrix::set_row(std::size_t dst_r, const DenseMatrix& src, std::size_t src_r) {
    check_shape(cols == src.cols, "set_row: column mismatch");
    auto s = src.row(src_r);
    auto d = row(dst_r);
    for (std::size_t c = 0; c < cols; ++c) d[c] = s[c];
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    check_shape(a.cols == b.rows, "matmul: inner dimensions differ");
    DenseMatrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + i * a.cols;
        double* orow = out.data.data() + i * out.cols;
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.data.data() + k * b.cols;
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    check_shape(a.rows == b.rows, "matmul_tn: inner dimensions differ");
    DenseMatrix out(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.data.data() + k * a.cols;
        const double* brow = b.data.data() + k * b.cols;
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* orow = out.data.data() + i * out.cols;
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aki * brow[j];
        }
    }
    return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    check_shape(a.cols == b.cols, "matmul_nt: inner dimensions differ");
    DenseMatrix out(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + i * a.cols;
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.data.data() + j * b.cols;
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            out(i, j) = acc;
        }
    }
    return out;
}

void add_row_vector(DenseMatrix& m, std::span<const double> v) {
    check_shape(m.cols == v.size(), "add_row_vector: length mismatch");
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* row = m.data.data() + i * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) row[j] += v[j];
    }
}

}  // namespace oodgen
