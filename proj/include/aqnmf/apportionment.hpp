#pragma once

#include "aqnmf/ingest.hpp"
#include "aqnmf/meteorology.hpp"
#include "aqnmf/nmf.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace aqnmf {

enum class Verdict { domestic, transboundary };
enum class TriggeredRule { peak_speed, monsoon_seasonal, default_domestic };

std::string_view to_string(Verdict v) noexcept;
std::string_view to_string(TriggeredRule r) noexcept;
Verdict parse_verdict(std::string_view text);
TriggeredRule parse_triggered_rule(std::string_view text);

/// A feature is transboundary when its wind rose peaks in the strong-wind
/// range, or when it carries a sizeable strong-wind fraction and most of
/// its activation falls in winter and spring (monsoon months).
struct ClassifierThresholds {
    double strong_threshold_ms = strong_limit_ms;
    double strong_fraction = 0.25;
    /// Percent of activation in winter + spring.
    double winter_spring_share = 60.0;

    friend bool operator==(const ClassifierThresholds&, const ClassifierThresholds&) = default;
};

struct FeatureEvidence {
    double peak_speed_ms = 0.0;
    double strong_wind_fraction = 0.0;
    double winter_spring_share = 0.0;

    friend bool operator==(const FeatureEvidence&, const FeatureEvidence&) = default;
};

struct FeatureProfile {
    std::size_t index = 0;
    /// Row of H scaled to sum to 1.
    std::vector<double> loadings;
    /// Column of W.
    std::vector<double> activation;
    std::vector<std::optional<double>> hourly;
    std::vector<std::optional<double>> monthly;
    SeasonShares seasonal{};
    WindRose windrose;
    /// Center of the speed bin with the most mass.
    double peak_speed_ms = 0.0;
    /// (Strong + Gale) mass over total mass.
    double strong_wind_fraction = 0.0;
    double winter_spring_share = 0.0;

    FeatureEvidence evidence() const noexcept
    {
        return {peak_speed_ms, strong_wind_fraction, winter_spring_share};
    }
};

struct FeatureLabel {
    Verdict verdict = Verdict::domestic;
    TriggeredRule triggered_rule = TriggeredRule::default_domestic;
    FeatureEvidence evidence;
};

/// share_l = 100 (sum_i w_il)(sum_j h_lj) / sum_l' (sum_i w_il')(sum_j h_l'j)
std::vector<double> contribution_shares(const Matrix& w, const Matrix& h);
std::vector<double> contribution_shares(const FactorModel& model);

FeatureProfile build_feature_profile(const FactorModel& model, std::size_t feature,
                                     const DataMatrix& dm, const WindTable& winds);

FeatureLabel classify_evidence(const FeatureEvidence& evidence,
                               const ClassifierThresholds& thresholds = {});
FeatureLabel classify_feature(const FeatureProfile& profile,
                              const ClassifierThresholds& thresholds = {});

struct FeatureRow {
    std::size_t index = 0;
    double share = 0.0;
    FeatureLabel label;
    std::string dominant_sector;
    /// Stations in decreasing order of loading, at most three.
    std::vector<std::string> top_stations;
};

struct ApportionmentReport {
    Pollutant pollutant = Pollutant::SO2;
    std::size_t k = 0;
    std::vector<FeatureRow> features;
    double domestic_ratio = 0.0;
    double transboundary_ratio = 0.0;
    ClassifierThresholds thresholds;
    NmfMode mode = NmfMode::paper;
    std::uint64_t seed = 0;
    std::size_t iterations_run = 0;
    bool converged = false;
    double final_cost = 0.0;
};

ApportionmentReport apportion(const FactorModel& model, const DataMatrix& dm,
                              const WindTable& winds, const ClassifierThresholds& thresholds = {});

struct Deviation {
    Pollutant pollutant = Pollutant::SO2;
    double reference = 0.0;
    double observed = 0.0;
    /// |observed - reference| in percentage points, rounded to 1e-9.
    double deviation = 0.0;
    bool pass = false;
};

struct ValidationReport {
    double tolerance = 6.0;
    std::vector<Deviation> rows;
    bool all_pass = true;
};

inline constexpr double default_validation_tolerance = 6.0;

/// Compares observed domestic ratios (percent) with reference ones.
/// Every observed pollutant must appear in the reference.
ValidationReport validate_against(std::span<const std::pair<Pollutant, double>> observed,
                                  const std::map<Pollutant, double>& reference,
                                  double tolerance = default_validation_tolerance);
ValidationReport validate_against(std::span<const ApportionmentReport> reports,
                                  const std::map<Pollutant, double>& reference,
                                  double tolerance = default_validation_tolerance);

/// "no2=70,so2=27,o3=25"
std::map<Pollutant, double> parse_ratio_list(std::string_view text);

} // namespace aqnmf
