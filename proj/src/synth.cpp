#include "aqnmf/synth.hpp"

#include "aqnmf/error.hpp"
#include "aqnmf/meteorology.hpp"
#include "aqnmf/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace aqnmf {

namespace {

constexpr double direction_spread_deg = 15.0;
constexpr double low_wind_speed_sd = 0.3;
constexpr double monsoon_speed_sd = 1.0;
constexpr double target_mean_concentration = 20.0;
constexpr double idle_probability = 0.2;

double wrap_degrees(double deg)
{
    double d = std::fmod(deg, 360.0);
    if (d < 0.0) {
        d += 360.0;
    }
    return d >= 360.0 ? 0.0 : d;
}

double diurnal(RegimeKind kind, int hour)
{
    // domestic sources peak in the evening, monsoon transport in the small hours
    const double peak = kind == RegimeKind::low_wind ? 20.0 : 2.0;
    const double depth = kind == RegimeKind::low_wind ? 0.5 : 0.3;
    return 1.0 + depth * std::cos(2.0 * std::numbers::pi * (hour - peak) / 24.0);
}

} // namespace

SourceRegime SourceRegime::low_wind(double speed_ms, double direction_deg)
{
    return {RegimeKind::low_wind, speed_ms, direction_deg, 1.0};
}

SourceRegime SourceRegime::monsoon(double speed_ms, double direction_deg,
                                   double winter_spring_boost)
{
    return {RegimeKind::monsoon, speed_ms, direction_deg, winter_spring_boost};
}

void Scenario::validate() const
{
    if (k_true < 1 || k_true >= std::min(m, n)) {
        throw Error(ErrorKind::range, "scenario needs 1 <= k_true < min(m, n)");
    }
    if (n < 2) {
        throw Error(ErrorKind::range, "scenario needs at least 2 stations");
    }
    if (!(noise_level >= 0.0 && noise_level <= 0.5)) {
        throw Error(ErrorKind::range, "noise_level must lie in [0, 0.5]");
    }
    if (!(missing_fraction >= 0.0 && missing_fraction < 1.0)) {
        throw Error(ErrorKind::range, "missing_fraction must lie in [0, 1)");
    }
    if (!sources.empty() && sources.size() != k_true) {
        throw Error(ErrorKind::range, "scenario needs one source regime per planted feature");
    }
    for (const auto& s : sources) {
        if (!(s.mean_speed_ms >= 0.0) || !(s.winter_spring_boost > 0.0)
            || !std::isfinite(s.direction_deg)) {
            throw Error(ErrorKind::range, "invalid source regime");
        }
    }
    if (!shares.empty()) {
        if (shares.size() != k_true) {
            throw Error(ErrorKind::range, "scenario needs one planted share per feature");
        }
        const double total = std::accumulate(shares.begin(), shares.end(), 0.0);
        const bool positive = std::all_of(shares.begin(), shares.end(),
                                          [](double s) { return s > 0.0; });
        if (!positive || std::abs(total - 100.0) > 1e-9) {
            throw Error(ErrorKind::range, "planted shares must be positive and sum to 100");
        }
    }
}

Scenario two_source_scenario(std::uint64_t seed)
{
    Scenario s;
    s.m = 8760;
    s.n = 14;
    s.k_true = 2;
    s.sources = {SourceRegime::low_wind(4.0, 270.0), SourceRegime::monsoon(9.0, 45.0, 3.0)};
    s.shares = {60.0, 40.0};
    s.seed = seed;
    return s;
}

Scenario cluster_scenario(std::uint64_t seed)
{
    Scenario s;
    s.m = 200;
    s.n = 14;
    s.k_true = 3;
    s.noise_level = 0.05;
    s.seed = seed;
    return s;
}

std::vector<std::size_t> planted_blocks(std::size_t n, std::size_t k_true)
{
    std::vector<std::size_t> block(n);
    for (std::size_t j = 0; j < n; ++j) {
        block[j] = j * k_true / n;
    }
    return block;
}

std::pair<Matrix, Matrix> gen_factors(std::size_t m, std::size_t n, std::size_t k_true,
                                      std::uint64_t seed)
{
    if (k_true < 1 || k_true >= std::min(m, n)) {
        throw Error(ErrorKind::range, "gen_factors: k_true = " + std::to_string(k_true)
                                          + " must satisfy 1 <= k_true < min(m, n)");
    }
    Rng rng(seed);
    // Sources switch off for a share of the hours. The exact zeros make the
    // planted factorization essentially unique, not just one of a cone of them.
    Matrix w(m, k_true);
    for (double& v : w.data()) {
        const double draw = rng.uniform(0.05, 1.0);
        v = rng.uniform() < idle_probability ? 0.0 : draw;
    }
    const auto block = planted_blocks(n, k_true);
    Matrix h(k_true, n);
    for (std::size_t j = 0; j < n; ++j) {
        h(block[j], j) = rng.uniform(0.5, 1.0);
    }
    return {std::move(w), std::move(h)};
}

std::vector<std::string> synthetic_station_names(std::size_t n)
{
    const std::size_t letters = n <= 26 * 26 ? 2 : 3;
    std::vector<std::string> names;
    names.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::string code(letters, 'A');
        std::size_t rest = j;
        for (std::size_t p = letters; p-- > 0;) {
            code[p] = static_cast<char>('A' + rest % 26);
            rest /= 26;
        }
        names.push_back(std::move(code));
    }
    return names;
}

GeneratedDataset gen_dataset(const Scenario& scenario)
{
    scenario.validate();
    const std::size_t m = scenario.m;
    const std::size_t n = scenario.n;
    const std::size_t k = scenario.k_true;

    auto [w, h] = gen_factors(m, n, k, scenario.seed);
    // independent stream for everything past the factors
    Rng rng(scenario.seed ^ 0x9e3779b97f4a7c15ULL);

    std::vector<HourStamp> times(m);
    for (std::size_t i = 0; i < m; ++i) {
        times[i] = HourStamp{scenario.start.hours + static_cast<std::int64_t>(i)};
    }

    if (!scenario.sources.empty()) {
        for (std::size_t i = 0; i < m; ++i) {
            const int hour = hour_of_day(times[i]);
            const Season season = season_of(month_of(times[i]));
            const bool monsoon_season = season == Season::winter || season == Season::spring;
            for (std::size_t l = 0; l < k; ++l) {
                const SourceRegime& src = scenario.sources[l];
                const double boost = monsoon_season ? src.winter_spring_boost : 1.0;
                const double draw = diurnal(src.kind, hour) * boost * rng.uniform(0.5, 1.5);
                w(i, l) = rng.uniform() < idle_probability ? 0.0 : draw;
            }
        }
    }

    std::vector<double> wsum(k, 0.0);
    std::vector<double> hsum(k, 0.0);
    for (std::size_t l = 0; l < k; ++l) {
        for (std::size_t i = 0; i < m; ++i) {
            wsum[l] += w(i, l);
        }
        for (std::size_t j = 0; j < n; ++j) {
            hsum[l] += h(l, j);
        }
    }
    // Column scale c_l makes (sum w_l)(sum h_l) proportional to the planted share,
    // the common factor sets the mean concentration.
    std::vector<double> factor(k, 1.0);
    if (!scenario.shares.empty()) {
        for (std::size_t l = 0; l < k; ++l) {
            factor[l] = scenario.shares[l] / (wsum[l] * hsum[l]);
        }
    }
    double total = 0.0;
    for (std::size_t l = 0; l < k; ++l) {
        total += factor[l] * wsum[l] * hsum[l];
    }
    const double common = target_mean_concentration * static_cast<double>(m * n) / total;
    for (std::size_t l = 0; l < k; ++l) {
        for (std::size_t i = 0; i < m; ++i) {
            w(i, l) *= factor[l] * common;
        }
    }

    Matrix values = matmul(w, h);
    if (scenario.noise_level > 0.0) {
        Matrix noise(m, n);
        for (double& v : noise.data()) {
            v = rng.normal();
        }
        const double scale = scenario.noise_level * std::sqrt(frobenius_sq(values))
                             / std::sqrt(frobenius_sq(noise));
        auto out = values.data();
        const auto e = noise.data();
        for (std::size_t p = 0; p < out.size(); ++p) {
            out[p] = std::max(0.0, out[p] + scale * e[p]);
        }
    }

    GeneratedDataset ds;
    DataMatrix& dm = ds.data;
    dm.values = std::move(values);
    dm.mask.assign(m * n, 1);
    dm.timestamps = times;
    dm.stations = synthetic_station_names(n);
    dm.pollutant = scenario.pollutant;
    if (scenario.missing_fraction > 0.0) {
        for (std::size_t p = 0; p < m * n; ++p) {
            if (rng.uniform() < scenario.missing_fraction) {
                dm.mask[p] = 0;
                dm.values.data()[p] = 0.0;
            }
        }
    }

    const auto block = planted_blocks(n, k);
    const SourceRegime fallback = SourceRegime::low_wind();
    ds.winds.reserve(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const SourceRegime& src = scenario.sources.empty() ? fallback
                                                               : scenario.sources[block[j]];
            const double sd = src.kind == RegimeKind::low_wind ? low_wind_speed_sd
                                                               : monsoon_speed_sd;
            const double centre = src.mean_speed_ms + speed_bin_width_ms / 2.0;
            const double speed = std::max(0.0, rng.normal(centre, sd));
            const double direction = wrap_degrees(rng.normal(src.direction_deg,
                                                             direction_spread_deg));
            ds.winds.push_back({dm.stations[j], times[i], direction, speed});
        }
    }

    for (std::size_t l = 0; l < k; ++l) {
        ds.truth.push_back(scenario.sources.empty() ? Verdict::domestic
                                                    : scenario.sources[l].truth());
    }
    ds.planted_shares = contribution_shares(w, h);
    ds.planted_w = std::move(w);
    ds.planted_h = std::move(h);
    return ds;
}

} // namespace aqnmf
