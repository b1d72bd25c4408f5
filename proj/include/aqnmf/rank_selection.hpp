#pragma once

#include "aqnmf/matrix.hpp"
#include "aqnmf/nmf.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace aqnmf {

/// Merge rule for the hierarchical clustering behind the cophenetic
/// coefficient. Average linkage (UPGMA) is the default.
enum class Linkage { average, single, complete };

std::string_view to_string(Linkage linkage) noexcept;
Linkage parse_linkage(std::string_view text);

struct ConsensusResult {
    std::size_t k = 0;
    double rho = 0.0;
    /// n x n, symmetric, unit diagonal, entries in [0, 1].
    Matrix consensus{1, 1, 1.0};
    std::size_t runs = 0;
};

struct ConsensusOptions {
    Linkage linkage = Linkage::average;
    /// Worker threads for the independent restarts. Results do not depend on it.
    std::size_t threads = 1;
};

/// Index of the largest entry in each column of h; ties go to the lowest row.
std::vector<std::size_t> dominant_factor(const Matrix& h);

/// n x n 0/1 matrix: 1 where two columns of h share their dominant factor.
Matrix connectivity_matrix(const Matrix& h);

/// Cophenetic (merge-height) distances of the hierarchical clustering of a
/// symmetric distance matrix. Ties in the merge order go to the lowest
/// cluster index pair.
Matrix cophenetic_distances(const Matrix& distances, Linkage linkage = Linkage::average);

/// Pearson correlation between 1 - consensus and the cophenetic distances of
/// its hierarchical clustering, over the strict upper triangle.
double cophenetic_coefficient(const Matrix& consensus, Linkage linkage = Linkage::average);

/// Averages already computed connectivity matrices in the given order.
ConsensusResult consensus_from_connectivity(std::size_t k, std::span<const Matrix> connectivity,
                                            Linkage linkage = Linkage::average);

/// Factorizes a with seeds base_seed, base_seed + 1, ... and averages the
/// resulting station connectivity matrices.
ConsensusResult consensus(const Matrix& a, std::size_t k, std::size_t runs,
                          std::uint64_t base_seed, const NmfConfig& config,
                          const ConsensusOptions& options = {});

struct RankSelection {
    std::size_t k = 0;
    std::vector<std::size_t> ranks;
    std::vector<double> rhos;
    /// No rank is followed by a drop in rho; k was set to the second-largest rank.
    bool no_decline = false;
    /// k_max is above half of min(m, n).
    bool range_warning = false;
};

/// The rank right before the steepest drop in rho, ties to the smaller rank.
/// ranks must be consecutive and rhos aligned with them.
RankSelection pick_rank(std::span<const std::size_t> ranks, std::span<const double> rhos);

RankSelection select_rank(const Matrix& a, std::size_t k_min, std::size_t k_max,
                          std::size_t runs, std::uint64_t base_seed, const NmfConfig& config,
                          const ConsensusOptions& options = {});

} // namespace aqnmf
