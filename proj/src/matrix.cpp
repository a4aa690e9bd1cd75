#include "tga/matrix.hpp"

#include <cmath>
#include <cstdlib>

namespace tga {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                             b.shape_str());
    }
}

} // namespace

double Matrix::scalar() const {
    if (!is_scalar()) throw ContractError("scalar(): matrix has shape " + shape_str());
    return a[0];
}

std::string Matrix::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

Matrix Matrix::column(const std::vector<double>& v) {
    Matrix m(v.size(), 1);
    m.a = v;
    return m;
}

bool all_finite(const Matrix& m) {
    for (double x : m.a)
        if (!std::isfinite(x)) return false;
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw DimensionError("matmul: inner dimensions differ, " + a.shape_str() + " * " +
                             b.shape_str());
    }
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = &a.a[i * a.cols];
        double* ci = &c.a[i * c.cols];
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = &b.a[k * b.cols];
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) {
        throw DimensionError("matmul_nt: inner dimensions differ, " + a.shape_str() + " * " +
                             b.shape_str() + "^T");
    }
    Matrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = &a.a[i * a.cols];
        double* ci = &c.a[i * c.cols];
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* bj = &b.a[j * b.cols];
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
            ci[j] = s;
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) {
        throw DimensionError("matmul_tn: inner dimensions differ, " + a.shape_str() + "^T * " +
                             b.shape_str());
    }
    Matrix c(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* ak = &a.a[k * a.cols];
        const double* bk = &b.a[k * b.cols];
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            double* ci = &c.a[i * c.cols];
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
    return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.a[i] += b.a[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "sub");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.a[i] -= b.a[i];
    return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.a[i] *= b.a[i];
    return c;
}

Matrix scale(const Matrix& m, double s) {
    Matrix c = m;
    for (double& x : c.a) x *= s;
    return c;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.a[i] - b.a[i]));
    return d;
}

} // namespace tga
