#include "cli.hpp"

#include "aqnmf/apportionment.hpp"
#include "aqnmf/ingest.hpp"
#include "aqnmf/meteorology.hpp"
#include "aqnmf/nmf.hpp"
#include "aqnmf/random.hpp"
#include "aqnmf/rank_selection.hpp"
#include "aqnmf/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace aqnmf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4)
{
    std::ostringstream s;
    s << std::setprecision(precision) << v;
    return s.str();
}

Matrix random_nonneg(std::size_t m, std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    Matrix a(m, n);
    for (double& v : a.data()) {
        v = rng.uniform();
    }
    return a;
}

fs::path scratch(const std::string& name)
{
    const char* base = std::getenv("AQNMF_TMP");
    fs::path dir = fs::path(base ? base : fs::temp_directory_path().string()) / "acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome monotone_descent()
{
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::size_t runs = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Matrix a = random_nonneg(50, 14, 1000 + s);
        for (std::size_t k = 2; k <= 7; ++k) {
            NmfConfig cfg;
            cfg.mode = NmfMode::plain;
            cfg.max_iter = 200;
            cfg.tol = 1e-15;
            cfg.seed = s;
            const FactorModel fm = factorize(a, k, cfg);
            for (std::size_t t = 1; t < fm.cost_trace.size(); ++t) {
                const double prev = fm.cost_trace[t - 1];
                worst = std::max(worst, (fm.cost_trace[t] - prev) / prev);
            }
            ++runs;
        }
    }
    const double dt = seconds_since(t0);
    return {worst <= 1e-10 && dt < 10.0,
            std::to_string(runs) + " runs, worst relative increase " + fmt(worst) + ", " + fmt(dt, 3) + " s"};
}

double central_difference(const Matrix& a, Matrix w, Matrix h, bool on_w, std::size_t i, std::size_t j,
                          double step)
{
    Matrix& x = on_w ? w : h;
    const double orig = x(i, j);
    x(i, j) = orig + step;
    const double up = cost(a, w, h);
    x(i, j) = orig - step;
    const double down = cost(a, w, h);
    return (up - down) / (2.0 * step);
}

Outcome gradient_fidelity()
{
    const double step = 1e-6;
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Matrix a = random_nonneg(8, 6, 2000 + s);
        const Matrix w = random_nonneg(8, 3, 3000 + s);
        const Matrix h = random_nonneg(3, 6, 4000 + s);
        for (bool on_w : {true, false}) {
            const Matrix g = on_w ? grad_w(a, w, h) : grad_h(a, w, h);
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < g.rows(); ++i) {
                for (std::size_t j = 0; j < g.cols(); ++j) {
                    const double fd = central_difference(a, w, h, on_w, i, j, step);
                    num = std::max(num, std::abs(fd - g(i, j)));
                    den = std::max(den, std::abs(g(i, j)));
                }
            }
            worst = std::max(worst, num / den);
        }
    }
    return {worst < 1e-5, "max relative error " + fmt(worst)};
}

Outcome exact_recovery()
{
    const auto [w, h] = gen_factors(30, 10, 2, 3);
    const Matrix a = matmul(w, h);
    const double norm = frobenius_sq(a);
    double best = std::numeric_limits<double>::infinity();
    std::size_t iters = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        NmfConfig cfg;
        cfg.mode = NmfMode::plain;
        cfg.max_iter = 5000;
        cfg.tol = 1e-15;
        cfg.seed = s;
        const FactorModel fm = factorize(a, 2, cfg);
        if (fm.final_cost < best) {
            best = fm.final_cost;
            iters = fm.iterations_run;
        }
    }
    return {best < 1e-6 * norm,
            "best cost / ||A||^2 = " + fmt(best / norm) + " after " + std::to_string(iters) + " iterations"};
}

Outcome minmax_semantics()
{
    const Matrix out = normalize_rows_minmax(Matrix{{2, 4, 6}, {3, 3, 3}});
    const bool ramp = out(0, 0) == 0.0 && out(0, 1) == 0.5 && out(0, 2) == 1.0;
    const bool flat = out(1, 0) == 1.0 && out(1, 1) == 1.0 && out(1, 2) == 1.0;
    return {ramp && flat, std::string("[2,4,6] -> [") + fmt(out(0, 0)) + "," + fmt(out(0, 1)) + "," + fmt(out(0, 2)) +
                              "], constant row -> [" + fmt(out(1, 0)) + "," + fmt(out(1, 1)) + "," + fmt(out(1, 2)) +
                              "]"};
}

Outcome speed_boundaries()
{
    const std::vector<double> speeds{0.19, 0.2, 5.49, 5.5, 13.89, 13.9};
    const std::vector<SpeedClass> expected{SpeedClass::calm,   SpeedClass::gentle_breeze, SpeedClass::gentle_breeze,
                                           SpeedClass::strong, SpeedClass::strong,        SpeedClass::gale};
    std::string detail;
    bool ok = true;
    for (std::size_t i = 0; i < speeds.size(); ++i) {
        const SpeedClass c = classify_speed(speeds[i]);
        ok = ok && c == expected[i];
        detail += (i ? ", " : "") + fmt(speeds[i]) + "->" + std::string(to_string(c));
    }
    return {ok, detail};
}

Outcome rank_selection()
{
    std::size_t hits = 0;
    double slowest = 0.0;
    std::string picks;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const GeneratedDataset ds = gen_dataset(cluster_scenario(100 + s));
        const auto t0 = Clock::now();
        const RankSelection sel = select_rank(ds.data.values, 2, 6, 10, 1000 * s, NmfConfig{});
        slowest = std::max(slowest, seconds_since(t0));
        hits += sel.k == 3 ? 1 : 0;
        picks += (s ? "," : "") + std::to_string(sel.k);
    }
    return {hits >= 8 && slowest < 60.0, "k = 3 in " + std::to_string(hits) + "/10 seeds (chosen " + picks +
                                             "), slowest sweep " + fmt(slowest, 3) + " s"};
}

Outcome consensus_sanity()
{
    Matrix block(6, 6);
    const std::vector<std::size_t> labels{0, 0, 1, 1, 2, 2};
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j) {
            block(i, j) = labels[i] == labels[j] ? 1.0 : 0.0;
        }
    }
    const std::vector<Matrix> runs(5, block);
    const double identical = consensus_from_connectivity(3, runs).rho;

    double worst = 0.0;
    Rng rng(77);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const std::size_t n = 14;
        Matrix c(n, n, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                c(i, j) = c(j, i) = rng.uniform();
            }
        }
        std::vector<std::size_t> p(n);
        std::iota(p.begin(), p.end(), 0);
        for (std::size_t i = n; i > 1; --i) {
            std::swap(p[i - 1], p[rng.below(i)]);
        }
        Matrix q(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                q(i, j) = c(p[i], p[j]);
            }
        }
        worst = std::max(worst, std::abs(cophenetic_coefficient(c) - cophenetic_coefficient(q)));
    }
    return {identical == 1.0 && worst <= 1e-12,
            "identical runs rho = " + fmt(identical, 17) + ", max permutation change " + fmt(worst)};
}

Outcome contribution_shares_check()
{
    double worst_sum = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto sh = contribution_shares(random_nonneg(40, 5, 5000 + s), random_nonneg(5, 14, 6000 + s));
        worst_sum = std::max(worst_sum, std::abs(std::accumulate(sh.begin(), sh.end(), 0.0) - 100.0));
    }
    double worst_dev = 0.0;
    std::string last;
    for (std::uint64_t s = 0; s < 5; ++s) {
        Scenario sc;
        sc.m = 500;
        sc.n = 14;
        sc.k_true = 3;
        sc.shares = {50, 30, 20};
        sc.seed = s;
        const GeneratedDataset ds = gen_dataset(sc);
        NmfConfig cfg;
        cfg.mode = NmfMode::plain;
        cfg.seed = s;
        std::vector<double> sh = contribution_shares(factorize(ds.data.values, 3, cfg));
        worst_sum = std::max(worst_sum, std::abs(std::accumulate(sh.begin(), sh.end(), 0.0) - 100.0));
        std::sort(sh.begin(), sh.end(), std::greater<>());
        const std::vector<double> planted{50, 30, 20};
        for (std::size_t l = 0; l < 3; ++l) {
            worst_dev = std::max(worst_dev, std::abs(sh[l] - planted[l]));
        }
        last = fmt(sh[0]) + "/" + fmt(sh[1]) + "/" + fmt(sh[2]);
    }
    return {worst_sum <= 1e-9 && worst_dev <= 5.0, "max |sum - 100| " + fmt(worst_sum) + ", max share error " +
                                                       fmt(worst_dev) + " points (last seed " + last + ")"};
}

double cosine(const Matrix& a, std::size_t ra, const Matrix& b, std::size_t rb)
{
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        ab += a(ra, j) * b(rb, j);
        aa += a(ra, j) * a(ra, j);
        bb += b(rb, j) * b(rb, j);
    }
    return ab / std::sqrt(aa * bb);
}

Outcome label_recovery()
{
    std::size_t hits = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const GeneratedDataset ds = gen_dataset(two_source_scenario(s));
        NmfConfig cfg;
        cfg.seed = s;
        const FactorModel fm = factorize(ds.data.values, 2, cfg);
        const WindTable winds(ds.data, ds.winds);
        const ApportionmentReport r = apportion(fm, ds.data, winds);
        std::vector<bool> used(ds.truth.size(), false);
        bool ok = true;
        for (const FeatureRow& f : r.features) {
            std::size_t match = 0;
            for (std::size_t p = 1; p < ds.truth.size(); ++p) {
                if (cosine(fm.h, f.index, ds.planted_h, p) > cosine(fm.h, f.index, ds.planted_h, match)) {
                    match = p;
                }
            }
            ok = ok && !used[match] && f.label.verdict == ds.truth[match];
            used[match] = true;
        }
        hits += ok ? 1 : 0;
    }
    return {hits == 10, std::to_string(hits) + "/10 seeds with both labels recovered"};
}

Outcome validation_math()
{
    const std::map<Pollutant, double> ref{{Pollutant::NO2, 70}, {Pollutant::SO2, 27}, {Pollutant::O3, 25}};
    const std::vector<std::pair<Pollutant, double>> obs{
        {Pollutant::NO2, 75.9}, {Pollutant::SO2, 26.9}, {Pollutant::O3, 22.7}};
    const ValidationReport v = validate_against(obs, ref);
    const std::vector<double> expected{5.9, 0.1, 2.3};
    bool ok = v.rows.size() == 3 && v.all_pass;
    std::string detail;
    for (std::size_t i = 0; ok && i < 3; ++i) {
        ok = v.rows[i].deviation == expected[i] && v.rows[i].pass;
        detail += (i ? ", " : "") + std::string(to_string(v.rows[i].pollutant)) + " " + fmt(v.rows[i].deviation) +
                  (v.rows[i].pass ? " pass" : " fail");
    }
    return {ok, detail};
}

int invoke(std::vector<std::string> args)
{
    std::ostringstream out, err;
    return cli::run(args, out, err);
}

Outcome determinism()
{
    const fs::path dir = scratch("determinism");
    const std::string data = (dir / "data.csv").string();
    if (invoke({"synth", "--seed", "5", "--output", data}) != 0) {
        return {false, "synth failed"};
    }
    std::vector<std::string> base{"apportion", "--input", data, "--pollutant", "NO2", "--k", "2", "--seed", "5"};
    auto first = base, second = base;
    first.insert(first.end(), {"--output", (dir / "a.json").string()});
    second.insert(second.end(), {"--output", (dir / "b.json").string()});
    if (invoke(first) != 0 || invoke(second) != 0) {
        return {false, "apportion failed"};
    }
    const std::string a = slurp(dir / "a.json");
    const std::string b = slurp(dir / "b.json");
    return {!a.empty() && a == b, std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different")};
}

Outcome round_trip()
{
    const fs::path dir = scratch("round_trip");
    std::size_t cells = 0;
    bool ok = true;
    for (std::uint64_t s = 0; s < 3; ++s) {
        Scenario sc = two_source_scenario(s);
        sc.noise_level = 0.1;
        const GeneratedDataset ds = gen_dataset(sc);
        const fs::path file = dir / ("synth" + std::to_string(s) + ".csv");
        if (invoke({"synth", "--seed", std::to_string(s), "--noise", "0.1", "--output", file.string()}) != 0) {
            return {false, "synth failed"};
        }
        const ParseResult parsed = parse_records_file(file);
        const Assembled back = assemble(parsed.rows, sc.pollutant);
        ok = ok && parsed.errors.empty() && back.data.fully_observed() && back.data == ds.data &&
             back.winds == ds.winds;
        cells += back.data.values.data().size();
    }
    return {ok, std::to_string(cells) + " cells compared, " + (ok ? "all bit-identical" : "mismatch")};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"monotone descent", monotone_descent},
        {"gradient fidelity", gradient_fidelity},
        {"exact recovery", exact_recovery},
        {"min-max normalization", minmax_semantics},
        {"speed class boundaries", speed_boundaries},
        {"rank selection", rank_selection},
        {"consensus sanity", consensus_sanity},
        {"contribution shares", contribution_shares_check},
        {"label recovery", label_recovery},
        {"validation math", validation_math},
        {"determinism", determinism},
        {"round-trip", round_trip},
    };
    std::size_t failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << i + 1 << ". " << criteria[i].first << ": " << o.detail
                  << std::endl;
    }
    std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
