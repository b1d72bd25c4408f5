#pragma once

#include "aqnmf/ingest.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aqnmf {

/// Wind speed classes, ordered by speed.
///   calm           [0, 0.2)
///   gentle_breeze  [0.2, 5.5)
///   strong         [5.5, 13.9)
///   gale           [13.9, inf)
enum class SpeedClass { calm = 0, gentle_breeze = 1, strong = 2, gale = 3 };

inline constexpr double calm_limit_ms = 0.2;
inline constexpr double strong_limit_ms = 5.5;
inline constexpr double gale_limit_ms = 13.9;

std::string_view to_string(SpeedClass c) noexcept;
SpeedClass classify_speed(double speed_ms);

/// Spring Mar-May, Summer Jun-Aug, Autumn Sep-Nov, Winter Dec-Feb.
enum class Season { spring = 0, summer = 1, autumn = 2, winter = 3 };

std::string_view to_string(Season s) noexcept;
Season season_of(int month);

enum class Grouping { hour, month };

/// Mean of values per hour-of-day (24 bins) or calendar month (12 bins);
/// bins with no samples are empty.
std::vector<std::optional<double>> group_means(std::span<const double> values,
                                               std::span<const HourStamp> times,
                                               Grouping by);

struct StationProfile {
    std::string station;
    std::vector<std::optional<double>> bins;
};

/// One profile per station column, in column order.
std::vector<StationProfile> aggregate_profile(const DataMatrix& dm, Grouping by);

/// Percent of the total per season, indexed by Season.
using SeasonShares = std::array<double, 4>;

SeasonShares seasonal_share(const DataMatrix& dm);
SeasonShares seasonal_share(std::span<const double> values, std::span<const HourStamp> times);

inline constexpr std::size_t sector_count = 16;
inline constexpr double sector_width_deg = 22.5;
inline constexpr double speed_bin_width_ms = 0.5;

/// Sector 0 is centered on north, sectors advance clockwise.
std::size_t sector_of(double direction_deg) noexcept;
double sector_center_deg(std::size_t sector) noexcept;
std::string_view sector_name(std::size_t sector) noexcept;
/// Bin b covers [0.5 b, 0.5 b + 0.5).
std::size_t speed_bin_of(double speed_ms) noexcept;

/// Pollution-weighted histogram over 16 direction sectors and 0.5 m/s speed bins.
class WindRose {
public:
    WindRose() = default;

    void add(double direction_deg, double speed_ms, double weight);

    std::size_t speed_bins() const noexcept { return mass_.size(); }
    double mass(std::size_t sector, std::size_t speed_bin) const noexcept;
    double total_mass() const noexcept;
    const std::array<double, 4>& class_mass() const noexcept { return class_mass_; }
    double class_mass(SpeedClass c) const noexcept { return class_mass_[static_cast<int>(c)]; }

    std::vector<double> speed_marginal() const;
    std::array<double, sector_count> sector_marginal() const;

    /// Speed bin holding the most mass, lowest bin on ties. Empty if no mass.
    std::optional<std::size_t> peak_speed_bin() const;
    std::optional<std::size_t> dominant_sector() const;

private:
    std::vector<std::array<double, sector_count>> mass_;
    std::array<double, 4> class_mass_{};
};

/// Adds activation[i] * loadings[j] at the wind of every (hour i, station j)
/// cell that has one, hour-major then station. loadings must sum to 1.
WindRose build_windrose(std::span<const double> activation, std::span<const double> loadings,
                        const WindTable& winds, const DataMatrix& dm);

/// Same binning weighted by the observed concentration of each cell.
WindRose build_concentration_windrose(const WindTable& winds, const DataMatrix& dm);

/// "sector_deg_center,speed_bin_low,speed_bin_high,mass" for every cell,
/// then a blank line and a "class,mass" class_totals block.
void write_windrose_csv(std::ostream& out, const WindRose& rose);

/// Static polar plot: one stacked wedge per sector, shaded by speed bin.
void write_windrose_svg(std::ostream& out, const WindRose& rose, std::string_view title);

} // namespace aqnmf
