#include "aqnmf/meteorology.hpp"

#include "aqnmf/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace aqnmf {

std::string_view to_string(SpeedClass c) noexcept
{
    switch (c) {
    case SpeedClass::calm: return "Calm";
    case SpeedClass::gentle_breeze: return "GentleBreeze";
    case SpeedClass::strong: return "Strong";
    case SpeedClass::gale: return "Gale";
    }
    return "Calm";
}

SpeedClass classify_speed(double speed_ms)
{
    if (!std::isfinite(speed_ms) || speed_ms < 0.0) {
        throw Error(ErrorKind::domain, "wind speed must be finite and non-negative, got "
                                           + std::to_string(speed_ms));
    }
    if (speed_ms < calm_limit_ms) {
        return SpeedClass::calm;
    }
    if (speed_ms < strong_limit_ms) {
        return SpeedClass::gentle_breeze;
    }
    if (speed_ms < gale_limit_ms) {
        return SpeedClass::strong;
    }
    return SpeedClass::gale;
}

std::string_view to_string(Season s) noexcept
{
    switch (s) {
    case Season::spring: return "spring";
    case Season::summer: return "summer";
    case Season::autumn: return "autumn";
    case Season::winter: return "winter";
    }
    return "spring";
}

Season season_of(int month)
{
    if (month < 1 || month > 12) {
        throw Error(ErrorKind::domain, "month must be in 1..12, got " + std::to_string(month));
    }
    if (month >= 3 && month <= 5) {
        return Season::spring;
    }
    if (month >= 6 && month <= 8) {
        return Season::summer;
    }
    if (month >= 9 && month <= 11) {
        return Season::autumn;
    }
    return Season::winter;
}

std::vector<std::optional<double>> group_means(std::span<const double> values,
                                               std::span<const HourStamp> times, Grouping by)
{
    if (values.size() != times.size()) {
        throw Error(ErrorKind::shape, "group_means: " + std::to_string(values.size())
                                          + " values for " + std::to_string(times.size())
                                          + " timestamps");
    }
    const std::size_t bins = by == Grouping::hour ? 24 : 12;
    std::vector<double> sum(bins, 0.0);
    std::vector<std::size_t> count(bins, 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto b = static_cast<std::size_t>(by == Grouping::hour ? hour_of_day(times[i])
                                                                     : month_of(times[i]) - 1);
        sum[b] += values[i];
        ++count[b];
    }
    std::vector<std::optional<double>> out(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] > 0) {
            out[b] = sum[b] / static_cast<double>(count[b]);
        }
    }
    return out;
}

std::vector<StationProfile> aggregate_profile(const DataMatrix& dm, Grouping by)
{
    std::vector<StationProfile> out;
    out.reserve(dm.station_count());
    for (std::size_t j = 0; j < dm.station_count(); ++j) {
        std::vector<double> values;
        std::vector<HourStamp> times;
        for (std::size_t i = 0; i < dm.hours(); ++i) {
            if (dm.observed(i, j)) {
                values.push_back(dm.values(i, j));
                times.push_back(dm.timestamps[i]);
            }
        }
        out.push_back({dm.stations[j], group_means(values, times, by)});
    }
    return out;
}

namespace {

SeasonShares to_percent(const std::array<double, 4>& sums)
{
    const double total = sums[0] + sums[1] + sums[2] + sums[3];
    if (!(total > 0.0)) {
        throw Error(ErrorKind::undefined_share, "seasonal shares undefined: total mass is zero");
    }
    SeasonShares out{};
    for (std::size_t s = 0; s < 4; ++s) {
        out[s] = 100.0 * sums[s] / total;
    }
    return out;
}

} // namespace

SeasonShares seasonal_share(const DataMatrix& dm)
{
    std::array<double, 4> sums{};
    for (std::size_t i = 0; i < dm.hours(); ++i) {
        const auto s = static_cast<std::size_t>(season_of(month_of(dm.timestamps[i])));
        for (std::size_t j = 0; j < dm.station_count(); ++j) {
            if (dm.observed(i, j)) {
                sums[s] += dm.values(i, j);
            }
        }
    }
    return to_percent(sums);
}

SeasonShares seasonal_share(std::span<const double> values, std::span<const HourStamp> times)
{
    if (values.size() != times.size()) {
        throw Error(ErrorKind::shape, "seasonal_share: values and timestamps differ in length");
    }
    std::array<double, 4> sums{};
    for (std::size_t i = 0; i < values.size(); ++i) {
        sums[static_cast<std::size_t>(season_of(month_of(times[i])))] += values[i];
    }
    return to_percent(sums);
}

std::size_t sector_of(double direction_deg) noexcept
{
    double shifted = std::fmod(direction_deg + sector_width_deg / 2.0, 360.0);
    if (shifted < 0.0) {
        shifted += 360.0;
    }
    return static_cast<std::size_t>(shifted / sector_width_deg) % sector_count;
}

double sector_center_deg(std::size_t sector) noexcept
{
    return static_cast<double>(sector % sector_count) * sector_width_deg;
}

std::string_view sector_name(std::size_t sector) noexcept
{
    static constexpr std::array<std::string_view, sector_count> names = {
        "N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE",
        "S", "SSW", "SW", "WSW", "W", "WNW", "NW", "NNW"};
    return names[sector % sector_count];
}

std::size_t speed_bin_of(double speed_ms) noexcept
{
    return static_cast<std::size_t>(std::floor(speed_ms / speed_bin_width_ms));
}

void WindRose::add(double direction_deg, double speed_ms, double weight)
{
    if (!(weight >= 0.0) || !std::isfinite(weight)) {
        throw Error(ErrorKind::domain, "wind rose weights must be finite and non-negative");
    }
    const SpeedClass c = classify_speed(speed_ms);
    const std::size_t bin = speed_bin_of(speed_ms);
    if (bin >= mass_.size()) {
        mass_.resize(bin + 1, std::array<double, sector_count>{});
    }
    mass_[bin][sector_of(direction_deg)] += weight;
    class_mass_[static_cast<int>(c)] += weight;
}

double WindRose::mass(std::size_t sector, std::size_t speed_bin) const noexcept
{
    if (speed_bin >= mass_.size() || sector >= sector_count) {
        return 0.0;
    }
    return mass_[speed_bin][sector];
}

double WindRose::total_mass() const noexcept
{
    double total = 0.0;
    for (const auto& bin : mass_) {
        for (double v : bin) {
            total += v;
        }
    }
    return total;
}

std::vector<double> WindRose::speed_marginal() const
{
    std::vector<double> out(mass_.size(), 0.0);
    for (std::size_t b = 0; b < mass_.size(); ++b) {
        for (double v : mass_[b]) {
            out[b] += v;
        }
    }
    return out;
}

std::array<double, sector_count> WindRose::sector_marginal() const
{
    std::array<double, sector_count> out{};
    for (const auto& bin : mass_) {
        for (std::size_t s = 0; s < sector_count; ++s) {
            out[s] += bin[s];
        }
    }
    return out;
}

namespace {

template <typename Range>
std::optional<std::size_t> argmax_positive(const Range& values)
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] > 0.0 && (!best || values[i] > values[*best])) {
            best = i;
        }
    }
    return best;
}

} // namespace

std::optional<std::size_t> WindRose::peak_speed_bin() const
{
    return argmax_positive(speed_marginal());
}

std::optional<std::size_t> WindRose::dominant_sector() const
{
    return argmax_positive(sector_marginal());
}

WindRose build_windrose(std::span<const double> activation, std::span<const double> loadings,
                        const WindTable& winds, const DataMatrix& dm)
{
    if (activation.size() != dm.hours() || loadings.size() != dm.station_count()
        || winds.hours() != dm.hours() || winds.stations() != dm.station_count()) {
        throw Error(ErrorKind::shape, "build_windrose: activation, loadings and wind table must "
                                      "match the " + dm.values.shape_string() + " data matrix");
    }
    double loading_sum = 0.0;
    for (double v : loadings) {
        loading_sum += v;
    }
    if (std::abs(loading_sum - 1.0) > 1e-9) {
        throw Error(ErrorKind::domain, "wind rose loadings must sum to 1, got "
                                           + std::to_string(loading_sum));
    }
    if (winds.count() == 0) {
        throw Error(ErrorKind::empty_rose, "no wind records to build a wind rose from");
    }
    WindRose rose;
    for (std::size_t i = 0; i < dm.hours(); ++i) {
        for (std::size_t j = 0; j < dm.station_count(); ++j) {
            if (const auto w = winds.at(i, j)) {
                rose.add(w->direction_deg, w->speed_ms, activation[i] * loadings[j]);
            }
        }
    }
    return rose;
}

WindRose build_concentration_windrose(const WindTable& winds, const DataMatrix& dm)
{
    if (winds.count() == 0) {
        throw Error(ErrorKind::empty_rose, "no wind records to build a wind rose from");
    }
    WindRose rose;
    for (std::size_t i = 0; i < dm.hours(); ++i) {
        for (std::size_t j = 0; j < dm.station_count(); ++j) {
            const auto w = winds.at(i, j);
            if (w && dm.observed(i, j)) {
                rose.add(w->direction_deg, w->speed_ms, dm.values(i, j));
            }
        }
    }
    return rose;
}

void write_windrose_csv(std::ostream& out, const WindRose& rose)
{
    out << "sector_deg_center,speed_bin_low,speed_bin_high,mass\n";
    for (std::size_t s = 0; s < sector_count; ++s) {
        for (std::size_t b = 0; b < rose.speed_bins(); ++b) {
            const double low = static_cast<double>(b) * speed_bin_width_ms;
            out << format_number(sector_center_deg(s)) << ',' << format_number(low) << ','
                << format_number(low + speed_bin_width_ms) << ','
                << format_number(rose.mass(s, b)) << '\n';
        }
    }
    out << "\nclass_totals\nclass,mass\n";
    for (SpeedClass c : {SpeedClass::calm, SpeedClass::gentle_breeze, SpeedClass::strong,
                         SpeedClass::gale}) {
        out << to_string(c) << ',' << format_number(rose.class_mass(c)) << '\n';
    }
}

namespace {

std::string fixed3(double v)
{
    char buf[48];
    const int n = std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string(buf, static_cast<std::size_t>(n));
}

std::string bin_colour(std::size_t bin, std::size_t bins)
{
    // blue (slow) to red (fast)
    const double t = bins > 1 ? static_cast<double>(bin) / static_cast<double>(bins - 1) : 0.0;
    const int r = static_cast<int>(std::lround(40 + 200 * t));
    const int g = static_cast<int>(std::lround(90 + 60 * (1.0 - std::abs(2.0 * t - 1.0))));
    const int b = static_cast<int>(std::lround(220 - 190 * t));
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

} // namespace

void write_windrose_svg(std::ostream& out, const WindRose& rose, std::string_view title)
{
    constexpr double cx = 220.0;
    constexpr double cy = 230.0;
    constexpr double radius = 170.0;
    const auto polar = [&](double deg, double r) {
        const double rad = deg * 3.14159265358979323846 / 180.0;
        return fixed3(cx + r * std::sin(rad)) + "," + fixed3(cy - r * std::cos(rad));
    };

    const auto sectors = rose.sector_marginal();
    const double largest = *std::max_element(sectors.begin(), sectors.end());

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"440\" height=\"460\" "
           "viewBox=\"0 0 440 460\">\n";
    out << "<title>" << title << "</title>\n";
    out << "<text x=\"220\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title
        << "</text>\n";
    for (int ring = 1; ring <= 4; ++ring) {
        out << "<circle cx=\"" << fixed3(cx) << "\" cy=\"" << fixed3(cy) << "\" r=\""
            << fixed3(radius * ring / 4.0) << "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
    }
    for (std::size_t s = 0; s < sector_count; s += 4) {
        const std::string at = polar(sector_center_deg(s), radius + 14.0);
        const auto comma = at.find(',');
        out << "<text x=\"" << at.substr(0, comma) << "\" y=\"" << at.substr(comma + 1)
            << "\" text-anchor=\"middle\" font-size=\"12\">" << sector_name(s) << "</text>\n";
    }
    if (largest > 0.0) {
        for (std::size_t s = 0; s < sector_count; ++s) {
            const double lo = sector_center_deg(s) - sector_width_deg / 2.0;
            const double hi = sector_center_deg(s) + sector_width_deg / 2.0;
            double inner = 0.0;
            for (std::size_t b = 0; b < rose.speed_bins(); ++b) {
                const double m = rose.mass(s, b);
                if (m <= 0.0) {
                    continue;
                }
                const double outer = inner + radius * m / largest;
                out << "<path d=\"M " << polar(lo, inner) << " L " << polar(lo, outer) << " A "
                    << fixed3(outer) << ',' << fixed3(outer) << " 0 0 1 " << polar(hi, outer)
                    << " L " << polar(hi, inner) << " A " << fixed3(inner) << ','
                    << fixed3(inner) << " 0 0 0 " << polar(lo, inner) << " Z\" fill=\""
                    << bin_colour(b, rose.speed_bins()) << "\" stroke=\"#ffffff\" "
                    << "stroke-width=\"0.5\"><title>" << sector_name(s) << ' '
                    << format_number(static_cast<double>(b) * speed_bin_width_ms) << '-'
                    << format_number(static_cast<double>(b + 1) * speed_bin_width_ms)
                    << " m/s: " << format_number(m) << "</title></path>\n";
                inner = outer;
            }
        }
    }
    out << "</svg>\n";
}

} // namespace aqnmf
