#include "aqnmf/apportionment.hpp"

#include "aqnmf/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace aqnmf {

std::string_view to_string(Verdict v) noexcept
{
    return v == Verdict::domestic ? "Domestic" : "Transboundary";
}

std::string_view to_string(TriggeredRule r) noexcept
{
    switch (r) {
    case TriggeredRule::peak_speed: return "peak_speed";
    case TriggeredRule::monsoon_seasonal: return "monsoon_seasonal";
    case TriggeredRule::default_domestic: return "default_domestic";
    }
    return "default_domestic";
}

Verdict parse_verdict(std::string_view text)
{
    if (text == "Domestic") {
        return Verdict::domestic;
    }
    if (text == "Transboundary") {
        return Verdict::transboundary;
    }
    throw Error(ErrorKind::format, "unknown verdict '" + std::string(text) + "'");
}

TriggeredRule parse_triggered_rule(std::string_view text)
{
    for (TriggeredRule r : {TriggeredRule::peak_speed, TriggeredRule::monsoon_seasonal,
                            TriggeredRule::default_domestic}) {
        if (text == to_string(r)) {
            return r;
        }
    }
    throw Error(ErrorKind::format, "unknown rule '" + std::string(text) + "'");
}

std::vector<double> contribution_shares(const Matrix& w, const Matrix& h)
{
    if (w.cols() != h.rows()) {
        throw Error(ErrorKind::shape, "contribution_shares: w " + w.shape_string() + " and h "
                                          + h.shape_string() + " do not conform");
    }
    const std::size_t k = w.cols();
    std::vector<double> mass(k, 0.0);
    for (std::size_t l = 0; l < k; ++l) {
        double wsum = 0.0;
        for (std::size_t i = 0; i < w.rows(); ++i) {
            wsum += w(i, l);
        }
        double hsum = 0.0;
        for (double v : h.row(l)) {
            hsum += v;
        }
        mass[l] = wsum * hsum;
    }
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    if (!(total > 0.0)) {
        throw Error(ErrorKind::undefined_share, "contribution shares undefined: all-zero model");
    }
    for (double& v : mass) {
        v = 100.0 * v / total;
    }
    return mass;
}

std::vector<double> contribution_shares(const FactorModel& model)
{
    return contribution_shares(model.w, model.h);
}

FeatureProfile build_feature_profile(const FactorModel& model, std::size_t feature,
                                     const DataMatrix& dm, const WindTable& winds)
{
    if (feature >= model.k) {
        throw Error(ErrorKind::range, "feature " + std::to_string(feature) + " out of range for k = "
                                          + std::to_string(model.k));
    }
    if (model.w.rows() != dm.hours() || model.h.cols() != dm.station_count()) {
        throw Error(ErrorKind::shape, "model factors do not match the "
                                          + dm.values.shape_string() + " data matrix");
    }
    const std::string tag = "feature " + std::to_string(feature + 1) + ": ";

    FeatureProfile p;
    p.index = feature;
    const auto hrow = model.h.row(feature);
    const double hsum = std::accumulate(hrow.begin(), hrow.end(), 0.0);
    if (!(hsum > 0.0)) {
        throw Error(ErrorKind::undefined_share, tag + "all station loadings are zero");
    }
    p.loadings.resize(hrow.size());
    for (std::size_t j = 0; j < hrow.size(); ++j) {
        p.loadings[j] = hrow[j] / hsum;
    }
    p.activation = model.w.column(feature);
    p.hourly = group_means(p.activation, dm.timestamps, Grouping::hour);
    p.monthly = group_means(p.activation, dm.timestamps, Grouping::month);

    try {
        p.seasonal = seasonal_share(p.activation, dm.timestamps);
        p.windrose = build_windrose(p.activation, p.loadings, winds, dm);
    } catch (const Error& e) {
        throw Error(e.kind(), tag + e.what());
    }

    const double total = p.windrose.total_mass();
    const auto peak = p.windrose.peak_speed_bin();
    if (!(total > 0.0) || !peak) {
        throw Error(ErrorKind::empty_rose, tag + "wind rose has no mass");
    }
    p.peak_speed_ms = (static_cast<double>(*peak) + 0.5) * speed_bin_width_ms;
    p.strong_wind_fraction = std::clamp((p.windrose.class_mass(SpeedClass::strong)
                                         + p.windrose.class_mass(SpeedClass::gale))
                                            / total,
                                        0.0, 1.0);
    p.winter_spring_share = p.seasonal[static_cast<int>(Season::winter)]
                            + p.seasonal[static_cast<int>(Season::spring)];
    return p;
}

FeatureLabel classify_evidence(const FeatureEvidence& evidence,
                               const ClassifierThresholds& thresholds)
{
    FeatureLabel label;
    label.evidence = evidence;
    if (evidence.peak_speed_ms >= thresholds.strong_threshold_ms) {
        label.verdict = Verdict::transboundary;
        label.triggered_rule = TriggeredRule::peak_speed;
    } else if (evidence.strong_wind_fraction >= thresholds.strong_fraction
               && evidence.winter_spring_share >= thresholds.winter_spring_share) {
        label.verdict = Verdict::transboundary;
        label.triggered_rule = TriggeredRule::monsoon_seasonal;
    } else {
        label.verdict = Verdict::domestic;
        label.triggered_rule = TriggeredRule::default_domestic;
    }
    return label;
}

FeatureLabel classify_feature(const FeatureProfile& profile, const ClassifierThresholds& thresholds)
{
    return classify_evidence(profile.evidence(), thresholds);
}

ApportionmentReport apportion(const FactorModel& model, const DataMatrix& dm,
                              const WindTable& winds, const ClassifierThresholds& thresholds)
{
    const std::vector<double> shares = contribution_shares(model);

    ApportionmentReport report;
    report.pollutant = dm.pollutant;
    report.k = model.k;
    report.thresholds = thresholds;
    report.mode = model.mode;
    report.seed = model.seed;
    report.iterations_run = model.iterations_run;
    report.converged = model.converged;
    report.final_cost = model.final_cost;

    double domestic = 0.0;
    double transboundary = 0.0;
    for (std::size_t l = 0; l < model.k; ++l) {
        const FeatureProfile profile = build_feature_profile(model, l, dm, winds);
        FeatureRow row;
        row.index = l;
        row.share = shares[l];
        row.label = classify_feature(profile, thresholds);
        if (const auto sector = profile.windrose.dominant_sector()) {
            row.dominant_sector = std::string(sector_name(*sector));
        }
        std::vector<std::size_t> order(dm.station_count());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return profile.loadings[a] > profile.loadings[b];
        });
        for (std::size_t r = 0; r < std::min<std::size_t>(3, order.size()); ++r) {
            row.top_stations.push_back(dm.stations[order[r]]);
        }
        (row.label.verdict == Verdict::domestic ? domestic : transboundary) += row.share;
        report.features.push_back(std::move(row));
    }
    const double total = domestic + transboundary;
    report.domestic_ratio = 100.0 * domestic / total;
    report.transboundary_ratio = 100.0 * transboundary / total;
    return report;
}

ValidationReport validate_against(std::span<const std::pair<Pollutant, double>> observed,
                                  const std::map<Pollutant, double>& reference, double tolerance)
{
    if (!(tolerance >= 0.0)) {
        throw Error(ErrorKind::domain, "validation tolerance must be non-negative");
    }
    ValidationReport out;
    out.tolerance = tolerance;
    for (const auto& [pollutant, ratio] : observed) {
        const auto ref = reference.find(pollutant);
        if (ref == reference.end()) {
            throw Error(ErrorKind::coverage, "no reference ratio for "
                                                 + std::string(to_string(pollutant)));
        }
        Deviation d;
        d.pollutant = pollutant;
        d.reference = ref->second;
        d.observed = ratio;
        // round away representation noise: 75.9 - 70 should read 5.9
        d.deviation = std::round(std::abs(ratio - ref->second) * 1e9) / 1e9;
        d.pass = d.deviation <= tolerance;
        out.all_pass = out.all_pass && d.pass;
        out.rows.push_back(d);
    }
    return out;
}

ValidationReport validate_against(std::span<const ApportionmentReport> reports,
                                  const std::map<Pollutant, double>& reference, double tolerance)
{
    std::vector<std::pair<Pollutant, double>> observed;
    for (const auto& r : reports) {
        observed.emplace_back(r.pollutant, r.domestic_ratio);
    }
    return validate_against(observed, reference, tolerance);
}

std::map<Pollutant, double> parse_ratio_list(std::string_view text)
{
    std::map<Pollutant, double> out;
    while (!text.empty()) {
        const std::size_t comma = text.find(',');
        const std::string_view item = text.substr(0, comma);
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
        const std::size_t eq = item.find('=');
        if (eq == std::string_view::npos) {
            throw Error(ErrorKind::format, "expected pollutant=percent, got '" + std::string(item)
                                               + "'");
        }
        const Pollutant p = parse_pollutant(item.substr(0, eq));
        const std::string number(item.substr(eq + 1));
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(number, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != number.size() || !std::isfinite(v)) {
            throw Error(ErrorKind::format, "bad percentage '" + number + "'");
        }
        if (!out.emplace(p, v).second) {
            throw Error(ErrorKind::format, "pollutant " + std::string(to_string(p))
                                               + " listed twice");
        }
    }
    if (out.empty()) {
        throw Error(ErrorKind::format, "empty ratio list");
    }
    return out;
}

} // namespace aqnmf
