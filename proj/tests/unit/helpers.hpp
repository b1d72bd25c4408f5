#pragma once

#include "aqnmf/matrix.hpp"
#include "aqnmf/random.hpp"

#include <cmath>
#include <cstdint>

namespace aqnmf::test {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = 0.0,
                            double hi = 1.0)
{
    Rng rng(seed);
    Matrix m(rows, cols);
    for (double& v : m.data()) {
        v = rng.uniform(lo, hi);
    }
    return m;
}

inline Matrix naive_matmul(const Matrix& a, const Matrix& b)
{
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t l = 0; l < a.cols(); ++l) {
                s += a(i, l) * b(l, j);
            }
            c(i, j) = s;
        }
    }
    return c;
}

inline double rel_err(double got, double want)
{
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

} // namespace aqnmf::test
