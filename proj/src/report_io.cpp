#include "aqnmf/report_io.hpp"

#include "aqnmf/error.hpp"

#include <ostream>
#include <string>

namespace aqnmf {

ordered_json to_json(const ClassifierThresholds& thresholds)
{
    ordered_json j;
    j["strong_threshold_ms"] = thresholds.strong_threshold_ms;
    j["strong_fraction"] = thresholds.strong_fraction;
    j["winter_spring_share"] = thresholds.winter_spring_share;
    return j;
}

ordered_json to_json(const ApportionmentReport& report)
{
    ordered_json j;
    j["pollutant"] = std::string(to_string(report.pollutant));
    j["units"] = std::string(units_of(report.pollutant));
    j["k"] = report.k;
    ordered_json features = ordered_json::array();
    for (const FeatureRow& row : report.features) {
        ordered_json f;
        f["index"] = row.index + 1;
        f["share"] = row.share;
        f["verdict"] = std::string(to_string(row.label.verdict));
        f["triggered_rule"] = std::string(to_string(row.label.triggered_rule));
        f["evidence"] = {
            {"peak_speed_ms", row.label.evidence.peak_speed_ms},
            {"strong_wind_fraction", row.label.evidence.strong_wind_fraction},
            {"winter_spring_share", row.label.evidence.winter_spring_share},
        };
        f["dominant_sector"] = row.dominant_sector;
        f["top_stations"] = row.top_stations;
        features.push_back(std::move(f));
    }
    j["features"] = std::move(features);
    j["ratios"] = {
        {"domestic", report.domestic_ratio},
        {"transboundary", report.transboundary_ratio},
    };
    ordered_json config;
    config["thresholds"] = to_json(report.thresholds);
    config["mode"] = std::string(to_string(report.mode));
    config["seed"] = report.seed;
    config["iterations_run"] = report.iterations_run;
    config["converged"] = report.converged;
    config["final_cost"] = report.final_cost;
    j["config"] = std::move(config);
    return j;
}

ApportionmentReport report_from_json(const nlohmann::json& j)
{
    try {
        ApportionmentReport r;
        r.pollutant = parse_pollutant(j.at("pollutant").get<std::string>());
        r.k = j.at("k").get<std::size_t>();
        for (const auto& f : j.at("features")) {
            FeatureRow row;
            const auto index = f.at("index").get<std::size_t>();
            if (index < 1) {
                throw Error(ErrorKind::format, "feature indices start at 1");
            }
            row.index = index - 1;
            row.share = f.at("share").get<double>();
            row.label.verdict = parse_verdict(f.at("verdict").get<std::string>());
            row.label.triggered_rule = parse_triggered_rule(f.at("triggered_rule").get<std::string>());
            const auto& ev = f.at("evidence");
            row.label.evidence.peak_speed_ms = ev.at("peak_speed_ms").get<double>();
            row.label.evidence.strong_wind_fraction = ev.at("strong_wind_fraction").get<double>();
            row.label.evidence.winter_spring_share = ev.at("winter_spring_share").get<double>();
            row.dominant_sector = f.value("dominant_sector", std::string{});
            row.top_stations = f.value("top_stations", std::vector<std::string>{});
            r.features.push_back(std::move(row));
        }
        r.domestic_ratio = j.at("ratios").at("domestic").get<double>();
        r.transboundary_ratio = j.at("ratios").at("transboundary").get<double>();
        if (j.contains("config")) {
            const auto& c = j.at("config");
            if (c.contains("thresholds")) {
                const auto& t = c.at("thresholds");
                r.thresholds.strong_threshold_ms = t.at("strong_threshold_ms").get<double>();
                r.thresholds.strong_fraction = t.at("strong_fraction").get<double>();
                r.thresholds.winter_spring_share = t.at("winter_spring_share").get<double>();
            }
            r.mode = parse_nmf_mode(c.value("mode", std::string("paper")));
            r.seed = c.value("seed", std::uint64_t{0});
            r.iterations_run = c.value("iterations_run", std::size_t{0});
            r.converged = c.value("converged", false);
            r.final_cost = c.value("final_cost", 0.0);
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::format, std::string("malformed report JSON: ") + e.what());
    }
}

void write_report_csv(std::ostream& out, const ApportionmentReport& report)
{
    out << "pollutant,feature,share,verdict,triggered_rule,peak_speed_ms,strong_wind_fraction,"
           "winter_spring_share,dominant_sector\n";
    const std::string p(to_string(report.pollutant));
    for (const FeatureRow& row : report.features) {
        out << p << ",NMF" << row.index + 1 << ',' << format_number(row.share) << ','
            << to_string(row.label.verdict) << ',' << to_string(row.label.triggered_rule) << ','
            << format_number(row.label.evidence.peak_speed_ms) << ','
            << format_number(row.label.evidence.strong_wind_fraction) << ','
            << format_number(row.label.evidence.winter_spring_share) << ','
            << row.dominant_sector << '\n';
    }
    out << p << ",domestic_ratio," << format_number(report.domestic_ratio) << ",,,,,,\n";
    out << p << ",transboundary_ratio," << format_number(report.transboundary_ratio) << ",,,,,,\n";
}

ordered_json to_json(const ValidationReport& report)
{
    ordered_json j;
    j["tolerance"] = report.tolerance;
    ordered_json rows = ordered_json::array();
    for (const Deviation& d : report.rows) {
        rows.push_back({
            {"pollutant", std::string(to_string(d.pollutant))},
            {"reference", d.reference},
            {"observed", d.observed},
            {"deviation", d.deviation},
            {"pass", d.pass},
        });
    }
    j["rows"] = std::move(rows);
    j["all_pass"] = report.all_pass;
    return j;
}

ordered_json to_json(const RankSelection& selection)
{
    ordered_json j;
    ordered_json table = ordered_json::array();
    for (std::size_t p = 0; p < selection.ranks.size(); ++p) {
        table.push_back({{"k", selection.ranks[p]}, {"rho", selection.rhos[p]}});
    }
    j["rho"] = std::move(table);
    j["chosen_k"] = selection.k;
    j["no_decline"] = selection.no_decline;
    j["range_warning"] = selection.range_warning;
    return j;
}

ordered_json model_metadata(const FactorModel& model)
{
    ordered_json j;
    j["k"] = model.k;
    j["mode"] = std::string(to_string(model.mode));
    j["seed"] = model.seed;
    j["iterations_run"] = model.iterations_run;
    j["converged"] = model.converged;
    j["final_cost"] = model.final_cost;
    j["cost_trace"] = model.cost_trace;
    return j;
}

void write_w_csv(std::ostream& out, const FactorModel& model, const DataMatrix& dm)
{
    out << "timestamp";
    for (std::size_t l = 0; l < model.k; ++l) {
        out << ",NMF" << l + 1;
    }
    out << '\n';
    for (std::size_t i = 0; i < model.w.rows(); ++i) {
        out << format_timestamp(dm.timestamps[i]);
        for (std::size_t l = 0; l < model.k; ++l) {
            out << ',' << format_number(model.w(i, l));
        }
        out << '\n';
    }
}

void write_h_csv(std::ostream& out, const FactorModel& model, const DataMatrix& dm)
{
    out << "feature";
    for (const auto& s : dm.stations) {
        out << ',' << s;
    }
    out << '\n';
    for (std::size_t l = 0; l < model.k; ++l) {
        out << "NMF" << l + 1;
        for (double v : model.h.row(l)) {
            out << ',' << format_number(v);
        }
        out << '\n';
    }
}

} // namespace aqnmf
