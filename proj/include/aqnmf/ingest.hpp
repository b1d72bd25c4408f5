#pragma once

#include "aqnmf/matrix.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aqnmf {

enum class Pollutant { SO2, NO2, PM10, PM25, O3 };

std::string_view to_string(Pollutant p) noexcept;
/// Case-insensitive; also accepts "PM2.5".
Pollutant parse_pollutant(std::string_view text);
/// "ppb" for the gases, "ug/m3" for particulates.
std::string_view units_of(Pollutant p) noexcept;

/// Whole hours since 1970-01-01T00:00, wall-clock time as recorded (no zone).
struct HourStamp {
    std::int64_t hours = 0;

    friend auto operator<=>(const HourStamp&, const HourStamp&) = default;
};

/// Parses "YYYY-MM-DDTHH:00". Throws a format error otherwise.
HourStamp parse_timestamp(std::string_view text);
std::string format_timestamp(HourStamp t);
int hour_of_day(HourStamp t) noexcept;
/// Calendar month, 1..12.
int month_of(HourStamp t) noexcept;

/// One hourly observation at one station, wind in meteorological convention:
/// direction the wind blows FROM, degrees clockwise from north, in [0, 360).
struct WindRecord {
    std::string station;
    HourStamp time;
    double direction_deg = 0.0;
    double speed_ms = 0.0;

    friend bool operator==(const WindRecord&, const WindRecord&) = default;
};

struct RawRow {
    std::size_t line = 0;
    HourStamp time;
    std::string station;
    Pollutant pollutant = Pollutant::SO2;
    std::optional<double> value;
    std::optional<double> wind_dir_deg;
    std::optional<double> wind_speed_ms;
};

struct LineError {
    std::size_t line = 0;
    std::string message;
};

struct ParseResult {
    std::vector<RawRow> rows;
    std::vector<LineError> errors;
};

struct ParseOptions {
    /// Concentrations below this are instrument sentinels (-999 etc.) and read as missing.
    double missing_below = 0.0;
};

inline constexpr std::string_view record_header =
    "timestamp,station,pollutant,value,wind_dir_deg,wind_speed_ms";

/// Reads the long hourly CSV. Lines starting with '#' are comments.
/// Malformed lines land in ParseResult::errors; a wrong header throws.
ParseResult parse_records(std::istream& in, const ParseOptions& options = {});
ParseResult parse_records_file(const std::filesystem::path& path,
                               const ParseOptions& options = {});

/// Hours x stations concentration matrix. Masked cells hold 0 in values.
struct DataMatrix {
    Matrix values{1, 1};
    /// Row-major like values; 1 = observed.
    std::vector<std::uint8_t> mask;
    /// Consecutive hours, timestamps[i + 1] = timestamps[i] + 1h.
    std::vector<HourStamp> timestamps;
    /// Sorted, unique.
    std::vector<std::string> stations;
    Pollutant pollutant = Pollutant::SO2;

    std::size_t hours() const noexcept { return values.rows(); }
    std::size_t station_count() const noexcept { return values.cols(); }
    bool observed(std::size_t i, std::size_t j) const noexcept
    {
        return mask[i * values.cols() + j] != 0;
    }
    bool fully_observed() const noexcept;
    std::string_view units() const noexcept { return units_of(pollutant); }
    std::optional<std::size_t> station_index(std::string_view station) const;

    friend bool operator==(const DataMatrix&, const DataMatrix&) = default;
};

struct Assembled {
    DataMatrix data;
    /// Wind for the chosen pollutant's rows, ordered by (time, station).
    std::vector<WindRecord> winds;
};

/// Builds the hours x stations matrix for one pollutant: stations sorted
/// lexicographically, hours spanning the first to last timestamp, absent
/// cells masked. Row order of the input does not matter.
Assembled assemble(std::span<const RawRow> rows, Pollutant pollutant);

enum class ImputePolicy { interpolate_then_mean };

inline constexpr std::size_t default_max_gap_hours = 6;

/// Per station: linear interpolation over interior gaps of at most
/// max_gap_hours, the station's observed mean everywhere else.
DataMatrix impute(const DataMatrix& dm, ImputePolicy policy = ImputePolicy::interpolate_then_mean,
                  std::size_t max_gap_hours = default_max_gap_hours);

struct Wind {
    double direction_deg = 0.0;
    double speed_ms = 0.0;
};

/// Wind observations indexed by the (hour, station) cells of a DataMatrix.
class WindTable {
public:
    WindTable(const DataMatrix& dm, std::span<const WindRecord> records);

    std::optional<Wind> at(std::size_t hour, std::size_t station) const noexcept;
    std::size_t hours() const noexcept { return hours_; }
    std::size_t stations() const noexcept { return stations_; }
    std::size_t count() const noexcept { return count_; }

private:
    std::size_t hours_;
    std::size_t stations_;
    std::size_t count_ = 0;
    std::vector<std::uint8_t> present_;
    std::vector<Wind> cells_;
};

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

/// Writes every (hour, station) cell in the long format, time-major.
/// Masked values are written empty; missing wind is written empty.
void write_records_csv(std::ostream& out, const DataMatrix& dm,
                       std::span<const WindRecord> winds);

/// Canonical wide matrix file: "timestamp,<station>,..." then one row per hour,
/// masked cells empty.
void write_matrix_csv(std::ostream& out, const DataMatrix& dm);
DataMatrix read_matrix_csv(std::istream& in, Pollutant pollutant);

} // namespace aqnmf
