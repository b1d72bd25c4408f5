#pragma once

#include "aqnmf/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace aqnmf {

/// plain: Euclidean multiplicative updates only, cost is monotone.
/// paper: additionally min-max normalizes every row of H after each
/// iteration (and once before the first), which gives up monotone descent.
enum class NmfMode { plain, paper };

std::string_view to_string(NmfMode mode) noexcept;
NmfMode parse_nmf_mode(std::string_view text);

struct NmfConfig {
    std::size_t max_iter = 500;
    /// plain: relative cost change threshold. paper: max absolute entry change.
    double tol = 1e-4;
    /// Added to every multiplicative-update denominator.
    double epsilon = 1e-12;
    NmfMode mode = NmfMode::paper;
    std::uint64_t seed = 0;

    void validate() const;
};

struct FactorModel {
    Matrix w;
    Matrix h;
    std::size_t k = 0;
    NmfMode mode = NmfMode::paper;
    std::uint64_t seed = 0;
    std::size_t iterations_run = 0;
    double final_cost = 0.0;
    /// Cost after each iteration; cost_trace.back() == final_cost.
    std::vector<double> cost_trace;
    bool converged = false;

    friend bool operator==(const FactorModel&, const FactorModel&) = default;
};

/// 1/2 ||a - w h||_F^2
double cost(const Matrix& a, const Matrix& w, const Matrix& h);

/// w_il * (A H^T)_il / ((W H H^T)_il + epsilon)
Matrix update_w(const Matrix& a, const Matrix& w, const Matrix& h, double epsilon);
/// h_lj * (W^T A)_lj / ((W^T W H)_lj + epsilon)
Matrix update_h(const Matrix& a, const Matrix& w, const Matrix& h, double epsilon);

/// dJ/dW = -A H^T + W H H^T
Matrix grad_w(const Matrix& a, const Matrix& w, const Matrix& h);
/// dJ/dH = -W^T A + W^T W H
Matrix grad_h(const Matrix& a, const Matrix& w, const Matrix& h);

/// Maps each row to (x - min) / (max - min); constant rows become all ones.
Matrix normalize_rows_minmax(const Matrix& h);

/// Seeded starting factors: W (m x k) then H (k x n), every entry drawn
/// i.i.d. uniform on [0.1, 1.1) from Rng(seed), in row-major order.
std::pair<Matrix, Matrix> initial_factors(std::size_t m, std::size_t n, std::size_t k,
                                          std::uint64_t seed);

/// Runs the multiplicative-update loop from seeded random factors.
FactorModel factorize(const Matrix& a, std::size_t k, const NmfConfig& config);

/// Same loop from caller-supplied starting factors.
FactorModel factorize_from(const Matrix& a, Matrix w0, Matrix h0, const NmfConfig& config);

/// Throws a rank error unless 1 <= k < min(m, n).
void check_rank(std::size_t k, std::size_t m, std::size_t n);

/// True when k exceeds half of min(m, n): still legal, but far from the
/// nk + km << nm regime in which the factorization actually compresses.
bool rank_exceeds_compression_bound(std::size_t k, std::size_t m, std::size_t n) noexcept;

} // namespace aqnmf
