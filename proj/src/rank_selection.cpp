#include "aqnmf/rank_selection.hpp"

#include "aqnmf/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <string>
#include <thread>

namespace aqnmf {

namespace {

void validate_consensus(const Matrix& c)
{
    if (c.rows() != c.cols()) {
        throw Error(ErrorKind::shape, "consensus matrix must be square, got " + c.shape_string());
    }
    if (c.rows() < 3) {
        throw Error(ErrorKind::size, "cophenetic coefficient needs at least 3 objects, got "
                                         + std::to_string(c.rows()));
    }
    for (std::size_t i = 0; i < c.rows(); ++i) {
        if (c(i, i) != 1.0) {
            throw Error(ErrorKind::domain, "consensus diagonal must be 1");
        }
        for (std::size_t j = 0; j < c.cols(); ++j) {
            if (c(i, j) != c(j, i)) {
                throw Error(ErrorKind::domain, "consensus matrix must be symmetric");
            }
            if (c(i, j) < 0.0 || c(i, j) > 1.0) {
                throw Error(ErrorKind::domain, "consensus entries must lie in [0, 1]");
            }
        }
    }
}

} // namespace

std::string_view to_string(Linkage linkage) noexcept
{
    switch (linkage) {
    case Linkage::average: return "average";
    case Linkage::single: return "single";
    case Linkage::complete: return "complete";
    }
    return "average";
}

Linkage parse_linkage(std::string_view text)
{
    if (text == "average") {
        return Linkage::average;
    }
    if (text == "single") {
        return Linkage::single;
    }
    if (text == "complete") {
        return Linkage::complete;
    }
    throw Error(ErrorKind::domain, "unknown linkage '" + std::string(text) + "'");
}

std::vector<std::size_t> dominant_factor(const Matrix& h)
{
    std::vector<std::size_t> best(h.cols(), 0);
    for (std::size_t j = 0; j < h.cols(); ++j) {
        for (std::size_t l = 1; l < h.rows(); ++l) {
            if (h(l, j) > h(best[j], j)) {
                best[j] = l;
            }
        }
    }
    return best;
}

Matrix connectivity_matrix(const Matrix& h)
{
    const auto label = dominant_factor(h);
    const std::size_t n = h.cols();
    Matrix c(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            c(i, j) = label[i] == label[j] ? 1.0 : 0.0;
        }
    }
    return c;
}

Matrix cophenetic_distances(const Matrix& distances, Linkage linkage)
{
    const std::size_t n = distances.rows();
    if (distances.cols() != n) {
        throw Error(ErrorKind::shape, "distance matrix must be square, got "
                                          + distances.shape_string());
    }
    Matrix between = distances;
    Matrix coph(n, n);
    std::vector<std::vector<std::size_t>> members(n);
    for (std::size_t i = 0; i < n; ++i) {
        members[i] = {i};
    }
    std::vector<bool> active(n, true);

    for (std::size_t merges = 1; merges < n; ++merges) {
        std::size_t bi = 0;
        std::size_t bj = 0;
        double best = 0.0;
        bool found = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) {
                continue;
            }
            for (std::size_t j = i + 1; j < n; ++j) {
                if (active[j] && (!found || between(i, j) < best)) {
                    best = between(i, j);
                    bi = i;
                    bj = j;
                    found = true;
                }
            }
        }

        for (std::size_t p : members[bi]) {
            for (std::size_t q : members[bj]) {
                coph(p, q) = best;
                coph(q, p) = best;
            }
        }

        const double size_i = static_cast<double>(members[bi].size());
        const double size_j = static_cast<double>(members[bj].size());
        for (std::size_t c = 0; c < n; ++c) {
            if (!active[c] || c == bi || c == bj) {
                continue;
            }
            double merged = 0.0;
            switch (linkage) {
            case Linkage::average:
                merged = (size_i * between(bi, c) + size_j * between(bj, c)) / (size_i + size_j);
                break;
            case Linkage::single:
                merged = std::min(between(bi, c), between(bj, c));
                break;
            case Linkage::complete:
                merged = std::max(between(bi, c), between(bj, c));
                break;
            }
            between(bi, c) = merged;
            between(c, bi) = merged;
        }
        members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
        members[bj].clear();
        active[bj] = false;
    }
    return coph;
}

double cophenetic_coefficient(const Matrix& consensus, Linkage linkage)
{
    validate_consensus(consensus);
    const std::size_t n = consensus.rows();

    Matrix distance(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            distance(i, j) = i == j ? 0.0 : 1.0 - consensus(i, j);
        }
    }
    const Matrix coph = cophenetic_distances(distance, linkage);

    std::vector<double> x;
    std::vector<double> y;
    x.reserve(n * (n - 1) / 2);
    y.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            x.push_back(distance(i, j));
            y.push_back(coph(i, j));
        }
    }

    double mean_x = 0.0;
    double mean_y = 0.0;
    for (std::size_t p = 0; p < x.size(); ++p) {
        mean_x += x[p];
        mean_y += y[p];
    }
    mean_x /= static_cast<double>(x.size());
    mean_y /= static_cast<double>(y.size());

    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t p = 0; p < x.size(); ++p) {
        const double dx = x[p] - mean_x;
        const double dy = y[p] - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }

    if (sxx == 0.0 || syy == 0.0) {
        if (x == y) {
            return 1.0;
        }
        throw Error(ErrorKind::degenerate,
                    "cophenetic correlation undefined: a distance vector has zero variance");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ConsensusResult consensus_from_connectivity(std::size_t k, std::span<const Matrix> connectivity,
                                            Linkage linkage)
{
    if (connectivity.size() < 2) {
        throw Error(ErrorKind::range, "consensus needs at least 2 runs");
    }
    const std::size_t n = connectivity.front().rows();
    Matrix sum(n, n);
    for (const Matrix& c : connectivity) {
        if (c.rows() != n || c.cols() != n) {
            throw Error(ErrorKind::shape, "connectivity matrices differ in shape");
        }
        auto out = sum.data();
        const auto in = c.data();
        for (std::size_t p = 0; p < out.size(); ++p) {
            out[p] += in[p];
        }
    }
    const double runs = static_cast<double>(connectivity.size());
    for (double& v : sum.data()) {
        v /= runs;
    }

    ConsensusResult result;
    result.k = k;
    result.runs = connectivity.size();
    result.rho = cophenetic_coefficient(sum, linkage);
    result.consensus = std::move(sum);
    return result;
}

ConsensusResult consensus(const Matrix& a, std::size_t k, std::size_t runs,
                          std::uint64_t base_seed, const NmfConfig& config,
                          const ConsensusOptions& options)
{
    if (runs < 2) {
        throw Error(ErrorKind::range, "consensus needs at least 2 runs, got "
                                          + std::to_string(runs));
    }
    check_rank(k, a.rows(), a.cols());

    std::vector<std::optional<Matrix>> slots(runs);
    std::vector<std::exception_ptr> failures(runs);
    auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t r = first; r < runs; r += stride) {
            try {
                NmfConfig run_config = config;
                run_config.seed = base_seed + r;
                slots[r] = connectivity_matrix(factorize(a, k, run_config).h);
            } catch (...) {
                failures[r] = std::current_exception();
            }
        }
    };

    const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, runs);
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(work, t, threads);
        }
    }

    std::vector<Matrix> connectivity;
    connectivity.reserve(runs);
    for (std::size_t r = 0; r < runs; ++r) {
        if (failures[r]) {
            const std::string seed = std::to_string(base_seed + r);
            try {
                std::rethrow_exception(failures[r]);
            } catch (const Error& e) {
                throw Error(e.kind(), std::string(e.what()) + " (seed " + seed + ")");
            } catch (const std::exception& e) {
                throw Error(ErrorKind::degenerate, std::string(e.what()) + " (seed " + seed + ")");
            }
        }
        connectivity.push_back(std::move(*slots[r]));
    }
    return consensus_from_connectivity(k, connectivity, options.linkage);
}

RankSelection pick_rank(std::span<const std::size_t> ranks, std::span<const double> rhos)
{
    if (ranks.size() != rhos.size() || ranks.size() < 2) {
        throw Error(ErrorKind::range, "rank selection needs at least two (k, rho) pairs");
    }
    for (std::size_t p = 1; p < ranks.size(); ++p) {
        if (ranks[p] != ranks[p - 1] + 1) {
            throw Error(ErrorKind::range, "candidate ranks must be consecutive");
        }
    }

    RankSelection out;
    out.ranks.assign(ranks.begin(), ranks.end());
    out.rhos.assign(rhos.begin(), rhos.end());

    std::size_t best = 0;
    double best_drop = rhos[0] - rhos[1];
    for (std::size_t p = 1; p + 1 < rhos.size(); ++p) {
        const double drop = rhos[p] - rhos[p + 1];
        if (drop > best_drop) {
            best_drop = drop;
            best = p;
        }
    }
    if (best_drop > 0.0) {
        out.k = ranks[best];
    } else {
        out.no_decline = true;
        out.k = ranks[ranks.size() - 2];
    }
    return out;
}

RankSelection select_rank(const Matrix& a, std::size_t k_min, std::size_t k_max,
                          std::size_t runs, std::uint64_t base_seed, const NmfConfig& config,
                          const ConsensusOptions& options)
{
    const std::size_t limit = std::min(a.rows(), a.cols());
    if (k_min < 2 || k_min >= k_max || k_max >= limit) {
        throw Error(ErrorKind::range, "rank range " + std::to_string(k_min) + ".."
                                          + std::to_string(k_max) + " must satisfy 2 <= k_min < "
                                          + "k_max < " + std::to_string(limit));
    }
    std::vector<std::size_t> ranks;
    std::vector<double> rhos;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        ranks.push_back(k);
        rhos.push_back(consensus(a, k, runs, base_seed, config, options).rho);
    }
    RankSelection out = pick_rank(ranks, rhos);
    out.range_warning = rank_exceeds_compression_bound(k_max, a.rows(), a.cols());
    return out;
}

} // namespace aqnmf
