#include "aqnmf/matrix.hpp"

#include "aqnmf/error.hpp"

#include <algorithm>
#include <cmath>

namespace aqnmf {

namespace {

void require_positive_dims(std::size_t rows, std::size_t cols)
{
    if (rows == 0 || cols == 0) {
        throw Error(ErrorKind::shape, "matrix dimensions must be positive, got "
                                          + std::to_string(rows) + "x" + std::to_string(cols));
    }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(ErrorKind::shape, std::string(op) + ": shapes " + a.shape_string() + " and "
                                          + b.shape_string() + " differ");
    }
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols)
{
    require_positive_dims(rows, cols);
    if (!std::isfinite(fill)) {
        throw Error(ErrorKind::domain, "matrix fill value must be finite");
    }
    data_.assign(rows * cols, fill);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data))
{
    require_positive_dims(rows, cols);
    if (data_.size() != rows * cols) {
        throw Error(ErrorKind::shape, "matrix data length " + std::to_string(data_.size())
                                          + " does not match " + shape_string());
    }
    if (!all_finite()) {
        throw Error(ErrorKind::domain, "matrix entries must be finite");
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size())
{
    require_positive_dims(rows_, cols_);
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw Error(ErrorKind::shape, "ragged matrix initializer");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
    if (!all_finite()) {
        throw Error(ErrorKind::domain, "matrix entries must be finite");
    }
}

Matrix Matrix::identity(std::size_t n)
{
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

std::vector<double> Matrix::column(std::size_t j) const
{
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        out[i] = (*this)(i, j);
    }
    return out;
}

bool Matrix::all_finite() const noexcept
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool Matrix::non_negative() const noexcept
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return v >= 0.0; });
}

std::string Matrix::shape_string() const
{
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b)
{
    if (a.cols() != b.rows()) {
        throw Error(ErrorKind::shape, "matmul: cannot multiply " + a.shape_string() + " by "
                                          + b.shape_string());
    }
    Matrix c(a.rows(), b.cols());
    // i-l-j order: c(i, j) still receives its terms in increasing l.
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto out = c.row(i);
        for (std::size_t l = 0; l < a.cols(); ++l) {
            const double ail = a(i, l);
            const auto brow = b.row(l);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out[j] += ail * brow[j];
            }
        }
    }
    return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b)
{
    if (a.rows() != b.rows()) {
        throw Error(ErrorKind::shape, "matmul_at_b: cannot multiply transpose of "
                                          + a.shape_string() + " by " + b.shape_string());
    }
    Matrix c(a.cols(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto arow = a.row(r);
        const auto brow = b.row(r);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double ari = arow[i];
            auto out = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out[j] += ari * brow[j];
            }
        }
    }
    return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b)
{
    if (a.cols() != b.cols()) {
        throw Error(ErrorKind::shape, "matmul_a_bt: cannot multiply " + a.shape_string()
                                          + " by transpose of " + b.shape_string());
    }
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto arow = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const auto brow = b.row(j);
            double sum = 0.0;
            for (std::size_t l = 0; l < a.cols(); ++l) {
                sum += arow[l] * brow[l];
            }
            c(i, j) = sum;
        }
    }
    return c;
}

Matrix transpose(const Matrix& a)
{
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            t(j, i) = a(i, j);
        }
    }
    return t;
}

Matrix add(const Matrix& a, const Matrix& b)
{
    require_same_shape(a, b, "add");
    Matrix c = a;
    auto out = c.data();
    const auto rhs = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += rhs[i];
    }
    return c;
}

Matrix subtract(const Matrix& a, const Matrix& b)
{
    require_same_shape(a, b, "subtract");
    Matrix c = a;
    auto out = c.data();
    const auto rhs = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] -= rhs[i];
    }
    return c;
}

Matrix scale(const Matrix& a, double factor)
{
    Matrix c = a;
    for (double& v : c.data()) {
        v *= factor;
    }
    return c;
}

double frobenius_sq_diff(const Matrix& a, const Matrix& b)
{
    require_same_shape(a, b, "frobenius_sq_diff");
    const auto x = a.data();
    const auto y = b.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        sum += d * d;
    }
    return sum;
}

double frobenius_sq(const Matrix& a)
{
    double sum = 0.0;
    for (double v : a.data()) {
        sum += v * v;
    }
    return sum;
}

double max_abs_diff(const Matrix& a, const Matrix& b)
{
    require_same_shape(a, b, "max_abs_diff");
    const auto x = a.data();
    const auto y = b.data();
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        worst = std::max(worst, std::abs(x[i] - y[i]));
    }
    return worst;
}

} // namespace aqnmf
