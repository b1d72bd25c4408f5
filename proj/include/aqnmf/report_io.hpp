#pragma once

#include "aqnmf/apportionment.hpp"
#include "aqnmf/nmf.hpp"
#include "aqnmf/rank_selection.hpp"

#include <json.hpp>

#include <iosfwd>

namespace aqnmf {

using ordered_json = nlohmann::ordered_json;

/// Field order is fixed: pollutant, units, k, features, ratios, config.
/// Feature indices are 1-based (NMF1, NMF2, ...).
ordered_json to_json(const ApportionmentReport& report);
ApportionmentReport report_from_json(const nlohmann::json& j);

/// One row per feature followed by the two ratio rows.
void write_report_csv(std::ostream& out, const ApportionmentReport& report);

ordered_json to_json(const ValidationReport& report);
ordered_json to_json(const RankSelection& selection);
ordered_json to_json(const ClassifierThresholds& thresholds);

/// Convergence metadata only; factors are written separately.
ordered_json model_metadata(const FactorModel& model);

/// Rows "timestamp,NMF1,...,NMFk".
void write_w_csv(std::ostream& out, const FactorModel& model, const DataMatrix& dm);
/// Rows "feature,<station>,...".
void write_h_csv(std::ostream& out, const FactorModel& model, const DataMatrix& dm);

} // namespace aqnmf
