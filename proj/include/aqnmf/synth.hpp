#pragma once

#include "aqnmf/apportionment.hpp"
#include "aqnmf/ingest.hpp"
#include "aqnmf/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace aqnmf {

enum class RegimeKind { low_wind, monsoon };

/// Wind regime planted behind one synthetic source. Speeds are drawn around
/// the middle of the 0.5 m/s speed bin that starts at mean_speed_ms, so the
/// planted bin is the rose's modal bin.
struct SourceRegime {
    RegimeKind kind = RegimeKind::low_wind;
    double mean_speed_ms = 4.0;
    double direction_deg = 270.0;
    /// Activation multiplier for winter and spring months.
    double winter_spring_boost = 1.0;

    static SourceRegime low_wind(double speed_ms = 4.0, double direction_deg = 270.0);
    static SourceRegime monsoon(double speed_ms = 9.0, double direction_deg = 45.0,
                                double winter_spring_boost = 3.0);

    Verdict truth() const noexcept
    {
        return kind == RegimeKind::low_wind ? Verdict::domestic : Verdict::transboundary;
    }
};

struct Scenario {
    std::size_t m = 8760;
    std::size_t n = 14;
    std::size_t k_true = 2;
    /// ||noise||_F / ||W* H*||_F before truncation at zero.
    double noise_level = 0.0;
    /// One per planted feature, or empty for untimed random activations.
    std::vector<SourceRegime> sources;
    /// Planted contribution shares in percent, or empty to leave them as drawn.
    std::vector<double> shares;
    /// Fraction of cells removed from the emitted data.
    double missing_fraction = 0.0;
    std::uint64_t seed = 0;
    HourStamp start = parse_timestamp("2010-01-01T00:00");
    Pollutant pollutant = Pollutant::NO2;

    void validate() const;
};

/// One low-wind domestic source (60 %) and one monsoon transboundary
/// source (40 %), one year of hourly data at 14 stations.
Scenario two_source_scenario(std::uint64_t seed);
/// 200 hours x 14 stations, three planted station clusters, 5 % noise.
Scenario cluster_scenario(std::uint64_t seed);

/// Non-negative W* (m x k) and block-structured H* (k x n): station j
/// loads only on feature floor(j k / n), so column argmax of H* splits the
/// stations into k contiguous non-empty groups.
std::pair<Matrix, Matrix> gen_factors(std::size_t m, std::size_t n, std::size_t k_true,
                                      std::uint64_t seed);

/// Planted station feature (block index) for each column.
std::vector<std::size_t> planted_blocks(std::size_t n, std::size_t k_true);

/// Two-letter station codes AA, AB, ... (three letters past 676) in sorted order.
std::vector<std::string> synthetic_station_names(std::size_t n);

struct GeneratedDataset {
    DataMatrix data;
    std::vector<WindRecord> winds;
    std::vector<Verdict> truth;
    Matrix planted_w{1, 1};
    Matrix planted_h{1, 1};
    /// Shares of W* H* in percent.
    std::vector<double> planted_shares;
};

GeneratedDataset gen_dataset(const Scenario& scenario);

} // namespace aqnmf
