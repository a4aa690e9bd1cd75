#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tga/errors.hpp"

namespace tga {

// Dense row-major matrix of doubles. Column vectors (n x 1) are the vector
// convention throughout the model code.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a; // row-major, rows*cols entries

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    std::size_t size() const { return a.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    bool is_scalar() const { return rows == 1 && cols == 1; }
    double scalar() const;

    std::string shape_str() const;

    static Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, c, 0.0); }
    static Matrix ones(std::size_t r, std::size_t c) { return Matrix(r, c, 1.0); }
    static Matrix column(const std::vector<double>& v);
};

bool all_finite(const Matrix& m);

Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T and a^T * b without materializing the transpose (backward helpers).
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double s);

double max_abs_diff(const Matrix& a, const Matrix& b);

} // namespace tga
