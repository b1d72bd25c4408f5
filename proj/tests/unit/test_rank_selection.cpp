#include "helpers.hpp"

#include "aqnmf/error.hpp"
#include "aqnmf/rank_selection.hpp"
#include "aqnmf/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace aqnmf;
using aqnmf::test::random_matrix;

namespace {

Matrix permuted(const Matrix& c, const std::vector<std::size_t>& p)
{
    Matrix out(c.rows(), c.cols());
    for (std::size_t i = 0; i < c.rows(); ++i) {
        for (std::size_t j = 0; j < c.cols(); ++j) {
            out(i, j) = c(p[i], p[j]);
        }
    }
    return out;
}

// Symmetric, unit diagonal, off-diagonal entries all distinct.
Matrix random_consensus(std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    Matrix c(n, n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            c(i, j) = c(j, i) = rng.uniform();
        }
    }
    return c;
}

Matrix block_consensus(const std::vector<std::size_t>& labels)
{
    const std::size_t n = labels.size();
    Matrix c(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            c(i, j) = labels[i] == labels[j] ? 1.0 : 0.0;
        }
    }
    return c;
}

} // namespace

TEST_CASE("connectivity examples")
{
    CHECK(connectivity_matrix(Matrix::identity(2)) == Matrix::identity(2));
    const Matrix dominated{{5, 6, 7}, {1, 2, 3}};
    CHECK(connectivity_matrix(dominated) == Matrix(3, 3, 1.0));
    CHECK(dominant_factor(Matrix{{1, 0}, {1, 2}}) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("connectivity matches a pairwise argmax oracle")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix h = random_matrix(3, 6, seed);
        const Matrix c = connectivity_matrix(h);
        for (std::size_t a = 0; a < 6; ++a) {
            for (std::size_t b = 0; b < 6; ++b) {
                std::size_t fa = 0, fb = 0;
                for (std::size_t l = 1; l < 3; ++l) {
                    if (h(l, a) > h(fa, a)) fa = l;
                    if (h(l, b) > h(fb, b)) fb = l;
                }
                CHECK(c(a, b) == (fa == fb ? 1.0 : 0.0));
            }
        }
    }
}

TEST_CASE("consensus averages connectivity")
{
    const std::vector<Matrix> same{block_consensus({0, 0, 1, 1, 2}), block_consensus({0, 0, 1, 1, 2})};
    const ConsensusResult r = consensus_from_connectivity(3, same);
    CHECK(r.rho == 1.0);
    CHECK(r.consensus == same[0]);
    CHECK(r.runs == 2);

    const std::vector<Matrix> differ{block_consensus({0, 0, 1, 1, 1}), block_consensus({0, 0, 0, 1, 1})};
    const ConsensusResult d = consensus_from_connectivity(2, differ);
    for (double v : d.consensus.data()) {
        CHECK((v == 0.0 || v == 0.5 || v == 1.0));
    }
    CHECK(d.consensus(0, 2) == 0.5);
    CHECK(d.consensus(3, 4) == 1.0);
}

TEST_CASE("cophenetic coefficient of an ultrametric input is one")
{
    CHECK(cophenetic_coefficient(block_consensus({0, 0, 0, 1, 1, 1})) == 1.0);
    CHECK(cophenetic_coefficient(block_consensus({0, 1, 0, 1, 1, 0, 0})) == 1.0);
}

TEST_CASE("average linkage by hand")
{
    // d = 1 - C: d01 = 0.1, d02 = d12 = 0.9. {0,1} merge at 0.1, then join 2
    // at (0.9 + 0.9) / 2, so the tree reproduces d exactly.
    const Matrix c{{1, .9, .1}, {.9, 1, .1}, {.1, .1, 1}};
    const Matrix coph = cophenetic_distances(subtract(Matrix(3, 3, 1.0), c));
    CHECK(coph(0, 1) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(coph(0, 2) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(coph(1, 2) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(cophenetic_coefficient(c) == doctest::Approx(1.0).epsilon(1e-12));

    // d01 = 0.2, d02 = 0.7, d12 = 0.9: merge {0,1} at 0.2, join 2 at 0.8.
    // Pearson of (.2,.7,.9) with (.2,.8,.8) is 0.24 / sqrt(0.26 * 0.24).
    const Matrix c2{{1, .8, .3}, {.8, 1, .1}, {.3, .1, 1}};
    const Matrix coph2 = cophenetic_distances(subtract(Matrix(3, 3, 1.0), c2));
    CHECK(coph2(0, 1) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(coph2(0, 2) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(coph2(1, 2) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(cophenetic_coefficient(c2) == doctest::Approx(std::sqrt(12.0 / 13.0)).epsilon(1e-12));

    // single and complete linkage join 2 at min / max of (0.7, 0.9)
    const Matrix d2 = subtract(Matrix(3, 3, 1.0), c2);
    CHECK(cophenetic_distances(d2, Linkage::single)(1, 2) == doctest::Approx(0.7));
    CHECK(cophenetic_distances(d2, Linkage::complete)(1, 2) == doctest::Approx(0.9));
}

TEST_CASE("cophenetic coefficient is permutation invariant")
{
    Rng rng(5);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const std::size_t n = 3 + seed % 12;
        const Matrix c = random_consensus(n, seed);
        std::vector<std::size_t> p(n);
        std::iota(p.begin(), p.end(), 0);
        for (std::size_t i = n; i > 1; --i) {
            std::swap(p[i - 1], p[rng.below(i)]);
        }
        const double rho = cophenetic_coefficient(c);
        CHECK(rho >= -1.0);
        CHECK(rho <= 1.0);
        CHECK(std::abs(cophenetic_coefficient(permuted(c, p)) - rho) <= 1e-12);
    }
}

TEST_CASE("cophenetic coefficient input validation")
{
    CHECK_THROWS_AS((void)cophenetic_coefficient(Matrix(2, 3)), Error);
    CHECK_THROWS_AS((void)cophenetic_coefficient(Matrix::identity(2)), Error);
    Matrix asym = random_consensus(4, 1);
    asym(0, 1) = 0.123;
    CHECK_THROWS_AS((void)cophenetic_coefficient(asym), Error);
    Matrix bad_diag = random_consensus(4, 2);
    bad_diag(2, 2) = 0.5;
    CHECK_THROWS_AS((void)cophenetic_coefficient(bad_diag), Error);
    Matrix out_of_range = random_consensus(4, 3);
    out_of_range(0, 3) = out_of_range(3, 0) = 1.5;
    CHECK_THROWS_AS((void)cophenetic_coefficient(out_of_range), Error);
    CHECK(cophenetic_coefficient(Matrix(4, 4, 1.0)) == 1.0);
}

TEST_CASE("pick_rank follows the steepest drop")
{
    const std::vector<std::size_t> ks{2, 3, 4, 5, 6};
    const RankSelection s = pick_rank(ks, std::vector<double>{0.99, 0.98, 0.97, 0.70, 0.72});
    CHECK(s.k == 4);
    CHECK_FALSE(s.no_decline);

    const RankSelection up = pick_rank(ks, std::vector<double>{0.5, 0.6, 0.7, 0.8, 0.9});
    CHECK(up.k == 5);
    CHECK(up.no_decline);

    const RankSelection tie = pick_rank(ks, std::vector<double>{1.0, 0.9, 1.0, 0.9, 0.9});
    CHECK(tie.k == 2);

    CHECK_THROWS_AS((void)pick_rank(std::vector<std::size_t>{2}, std::vector<double>{1.0}), Error);
    CHECK_THROWS_AS(
        (void)pick_rank(std::vector<std::size_t>{2, 4}, std::vector<double>{1.0, 0.5}), Error);
}

TEST_CASE("consensus on planted blocks")
{
    const GeneratedDataset ds = gen_dataset(cluster_scenario(1));
    NmfConfig cfg;
    const ConsensusResult r = consensus(ds.data.values, 3, 10, 0, cfg);
    CHECK(r.rho > 0.95);
    CHECK(r.runs == 10);
    for (std::size_t i = 0; i < r.consensus.rows(); ++i) {
        CHECK(r.consensus(i, i) == 1.0);
        for (std::size_t j = 0; j < r.consensus.cols(); ++j) {
            CHECK(r.consensus(i, j) == r.consensus(j, i));
        }
    }
}

TEST_CASE("consensus does not depend on the thread count")
{
    const Matrix a = random_matrix(40, 9, 6);
    NmfConfig cfg;
    cfg.max_iter = 100;
    ConsensusOptions one, four;
    four.threads = 4;
    const ConsensusResult r1 = consensus(a, 3, 8, 11, cfg, one);
    const ConsensusResult r4 = consensus(a, 3, 8, 11, cfg, four);
    CHECK(r1.consensus == r4.consensus);
    CHECK(r1.rho == r4.rho);
}

TEST_CASE("select_rank is deterministic and checks its range")
{
    const Matrix a = random_matrix(40, 9, 7);
    NmfConfig cfg;
    cfg.max_iter = 100;
    const RankSelection s1 = select_rank(a, 2, 4, 5, 3, cfg);
    const RankSelection s2 = select_rank(a, 2, 4, 5, 3, cfg);
    CHECK(s1.k == s2.k);
    CHECK(s1.rhos == s2.rhos);
    CHECK(s1.ranks == std::vector<std::size_t>{2, 3, 4});

    CHECK_THROWS_AS((void)select_rank(a, 1, 4, 5, 3, cfg), Error);
    CHECK_THROWS_AS((void)select_rank(a, 3, 3, 5, 3, cfg), Error);
    CHECK_THROWS_AS((void)select_rank(a, 2, 9, 5, 3, cfg), Error);
}

TEST_CASE("linkage names round-trip")
{
    for (Linkage l : {Linkage::average, Linkage::single, Linkage::complete}) {
        CHECK(parse_linkage(to_string(l)) == l);
    }
    CHECK_THROWS_AS(parse_linkage("ward"), Error);
}
