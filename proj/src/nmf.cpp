#include "aqnmf/nmf.hpp"

#include "aqnmf/error.hpp"
#include "aqnmf/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace aqnmf {

namespace {

void require_conformant(const Matrix& a, const Matrix& w, const Matrix& h, const char* op)
{
    if (w.rows() != a.rows() || h.cols() != a.cols() || w.cols() != h.rows()) {
        throw Error(ErrorKind::shape, std::string(op) + ": a " + a.shape_string() + ", w "
                                          + w.shape_string() + ", h " + h.shape_string()
                                          + " do not conform");
    }
}

void require_non_negative(const Matrix& m, const char* name)
{
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (!(m(i, j) >= 0.0)) {
                throw Error(ErrorKind::domain, std::string(name) + " has negative entry "
                                                   + std::to_string(m(i, j)) + " at ("
                                                   + std::to_string(i) + ", " + std::to_string(j)
                                                   + ")");
            }
        }
    }
}

Matrix multiplicative_step(const Matrix& current, const Matrix& numerator,
                           const Matrix& denominator, double epsilon)
{
    Matrix next = current;
    auto out = next.data();
    const auto num = numerator.data();
    const auto den = denominator.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] == 0.0) {
            continue; // zero stays zero, also when num/den is 0/0
        }
        out[i] *= num[i] / (den[i] + epsilon);
        if (!std::isfinite(out[i])) {
            throw Error(ErrorKind::degenerate,
                        "multiplicative update produced a non-finite entry; raise epsilon");
        }
    }
    return next;
}

} // namespace

std::string_view to_string(NmfMode mode) noexcept
{
    return mode == NmfMode::plain ? "plain" : "paper";
}

NmfMode parse_nmf_mode(std::string_view text)
{
    if (text == "plain") {
        return NmfMode::plain;
    }
    if (text == "paper") {
        return NmfMode::paper;
    }
    throw Error(ErrorKind::domain, "unknown NMF mode '" + std::string(text)
                                       + "' (expected plain or paper)");
}

void NmfConfig::validate() const
{
    if (max_iter < 1) {
        throw Error(ErrorKind::domain, "max_iter must be at least 1");
    }
    if (!(tol > 0.0) || !std::isfinite(tol)) {
        throw Error(ErrorKind::domain, "tol must be positive");
    }
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw Error(ErrorKind::domain, "epsilon must be positive");
    }
}

double cost(const Matrix& a, const Matrix& w, const Matrix& h)
{
    require_conformant(a, w, h, "cost");
    return 0.5 * frobenius_sq_diff(a, matmul(w, h));
}

Matrix update_w(const Matrix& a, const Matrix& w, const Matrix& h, double epsilon)
{
    require_conformant(a, w, h, "update_w");
    const Matrix aht = matmul_a_bt(a, h);
    const Matrix whht = matmul(w, matmul_a_bt(h, h));
    return multiplicative_step(w, aht, whht, epsilon);
}

Matrix update_h(const Matrix& a, const Matrix& w, const Matrix& h, double epsilon)
{
    require_conformant(a, w, h, "update_h");
    const Matrix wta = matmul_at_b(w, a);
    const Matrix wtwh = matmul(matmul_at_b(w, w), h);
    return multiplicative_step(h, wta, wtwh, epsilon);
}

Matrix grad_w(const Matrix& a, const Matrix& w, const Matrix& h)
{
    require_conformant(a, w, h, "grad_w");
    return subtract(matmul(w, matmul_a_bt(h, h)), matmul_a_bt(a, h));
}

Matrix grad_h(const Matrix& a, const Matrix& w, const Matrix& h)
{
    require_conformant(a, w, h, "grad_h");
    return subtract(matmul(matmul_at_b(w, w), h), matmul_at_b(w, a));
}

Matrix normalize_rows_minmax(const Matrix& h)
{
    Matrix out = h;
    for (std::size_t l = 0; l < out.rows(); ++l) {
        auto row = out.row(l);
        const auto [lo_it, hi_it] = std::minmax_element(row.begin(), row.end());
        const double lo = *lo_it;
        const double hi = *hi_it;
        if (lo < hi) {
            const double range = hi - lo;
            for (double& v : row) {
                v = (v - lo) / range;
            }
        } else {
            std::fill(row.begin(), row.end(), 1.0);
        }
    }
    return out;
}

std::pair<Matrix, Matrix> initial_factors(std::size_t m, std::size_t n, std::size_t k,
                                          std::uint64_t seed)
{
    Rng rng(seed);
    Matrix w(m, k);
    for (double& v : w.data()) {
        v = rng.uniform(0.1, 1.1);
    }
    Matrix h(k, n);
    for (double& v : h.data()) {
        v = rng.uniform(0.1, 1.1);
    }
    return {std::move(w), std::move(h)};
}

void check_rank(std::size_t k, std::size_t m, std::size_t n)
{
    const std::size_t limit = std::min(m, n);
    if (k < 1 || k >= limit) {
        throw Error(ErrorKind::rank, "rank k = " + std::to_string(k) + " must satisfy 1 <= k < "
                                         + std::to_string(limit) + " for a "
                                         + std::to_string(m) + "x" + std::to_string(n)
                                         + " matrix");
    }
}

bool rank_exceeds_compression_bound(std::size_t k, std::size_t m, std::size_t n) noexcept
{
    return 2 * k > std::min(m, n);
}

FactorModel factorize(const Matrix& a, std::size_t k, const NmfConfig& config)
{
    check_rank(k, a.rows(), a.cols());
    auto [w0, h0] = initial_factors(a.rows(), a.cols(), k, config.seed);
    return factorize_from(a, std::move(w0), std::move(h0), config);
}

FactorModel factorize_from(const Matrix& a, Matrix w0, Matrix h0, const NmfConfig& config)
{
    config.validate();
    require_conformant(a, w0, h0, "factorize");
    check_rank(w0.cols(), a.rows(), a.cols());
    require_non_negative(a, "input matrix");
    require_non_negative(w0, "initial W");
    require_non_negative(h0, "initial H");

    const std::size_t k = w0.cols();
    FactorModel model{.w = std::move(w0),
                      .h = std::move(h0),
                      .k = k,
                      .mode = config.mode,
                      .seed = config.seed,
                      .iterations_run = 0,
                      .final_cost = 0.0,
                      .cost_trace = {},
                      .converged = false};
    model.cost_trace.reserve(config.max_iter);

    if (config.mode == NmfMode::paper) {
        model.h = normalize_rows_minmax(model.h);
    }

    double previous_cost = cost(a, model.w, model.h);
    for (std::size_t it = 0; it < config.max_iter; ++it) {
        Matrix w = update_w(a, model.w, model.h, config.epsilon);
        Matrix h = update_h(a, w, model.h, config.epsilon);
        if (config.mode == NmfMode::paper) {
            h = normalize_rows_minmax(h);
        }

        bool done = false;
        const double current_cost = cost(a, w, h);
        if (config.mode == NmfMode::plain) {
            const double change = std::abs(current_cost - previous_cost)
                                  / std::max(previous_cost, 1e-30);
            done = change < config.tol;
        } else {
            const double delta = std::max(max_abs_diff(w, model.w), max_abs_diff(h, model.h));
            done = delta < config.tol;
        }

        model.w = std::move(w);
        model.h = std::move(h);
        model.cost_trace.push_back(current_cost);
        model.iterations_run = it + 1;
        previous_cost = current_cost;
        if (done) {
            model.converged = true;
            break;
        }
    }
    model.final_cost = previous_cost;
    return model;
}

} // namespace aqnmf
