#include "aqnmf/ingest.hpp"

#include "aqnmf/error.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <tuple>

namespace aqnmf {

namespace {

using std::chrono::day;
using std::chrono::days;
using std::chrono::month;
using std::chrono::sys_days;
using std::chrono::year;
using std::chrono::year_month_day;

std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

template <typename Int>
bool parse_int(std::string_view text, Int& out)
{
    if (text.empty()) {
        return false;
    }
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

std::optional<double> parse_double(std::string_view text)
{
    double v = 0.0;
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

bool is_missing_token(std::string_view text)
{
    return text.empty() || text == "NA";
}

bool valid_station(std::string_view s)
{
    return s.size() >= 2 && s.size() <= 4
           && std::all_of(s.begin(), s.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

/// Reads the next line that is neither blank nor a '#' comment.
bool next_content_line(std::istream& in, std::string& line, std::size_t& line_no)
{
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) {
            line.erase(0, 3);
        }
        const std::string_view t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        return true;
    }
    return false;
}

year_month_day civil(HourStamp t)
{
    const std::int64_t day_count = t.hours >= 0 ? t.hours / 24 : (t.hours - 23) / 24;
    return year_month_day{sys_days{days{day_count}}};
}

} // namespace

std::string_view to_string(Pollutant p) noexcept
{
    switch (p) {
    case Pollutant::SO2: return "SO2";
    case Pollutant::NO2: return "NO2";
    case Pollutant::PM10: return "PM10";
    case Pollutant::PM25: return "PM25";
    case Pollutant::O3: return "O3";
    }
    return "SO2";
}

Pollutant parse_pollutant(std::string_view text)
{
    std::string upper;
    for (char c : text) {
        if (c != '.') {
            upper.push_back(static_cast<char>(c >= 'a' && c <= 'z' ? c - 'a' + 'A' : c));
        }
    }
    for (Pollutant p : {Pollutant::SO2, Pollutant::NO2, Pollutant::PM10, Pollutant::PM25,
                        Pollutant::O3}) {
        if (upper == to_string(p)) {
            return p;
        }
    }
    throw Error(ErrorKind::format, "unknown pollutant '" + std::string(text)
                                       + "' (expected SO2, NO2, PM10, PM25 or O3)");
}

std::string_view units_of(Pollutant p) noexcept
{
    return p == Pollutant::PM10 || p == Pollutant::PM25 ? "ug/m3" : "ppb";
}

HourStamp parse_timestamp(std::string_view text)
{
    // YYYY-MM-DDTHH:00
    const auto bad = [&] {
        return Error(ErrorKind::format, "timestamp '" + std::string(text)
                                            + "' is not of the form YYYY-MM-DDTHH:00");
    };
    if (text.size() != 16 || text[4] != '-' || text[7] != '-' || text[10] != 'T'
        || text[13] != ':') {
        throw bad();
    }
    int y = 0;
    unsigned mo = 0;
    unsigned d = 0;
    int hh = 0;
    int mm = 0;
    if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo)
        || !parse_int(text.substr(8, 2), d) || !parse_int(text.substr(11, 2), hh)
        || !parse_int(text.substr(14, 2), mm)) {
        throw bad();
    }
    const year_month_day date{year{y}, month{mo}, day{d}};
    if (!date.ok() || hh < 0 || hh > 23) {
        throw bad();
    }
    if (mm != 0) {
        throw Error(ErrorKind::format, "timestamp '" + std::string(text) + "' is not hour-aligned");
    }
    const std::int64_t day_count = sys_days{date}.time_since_epoch().count();
    return HourStamp{day_count * 24 + hh};
}

std::string format_timestamp(HourStamp t)
{
    const year_month_day date = civil(t);
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00",
                                static_cast<int>(date.year()),
                                static_cast<unsigned>(date.month()),
                                static_cast<unsigned>(date.day()), hour_of_day(t));
    return std::string(buf, static_cast<std::size_t>(n));
}

int hour_of_day(HourStamp t) noexcept
{
    const std::int64_t r = t.hours % 24;
    return static_cast<int>(r < 0 ? r + 24 : r);
}

int month_of(HourStamp t) noexcept
{
    return static_cast<int>(static_cast<unsigned>(civil(t).month()));
}

ParseResult parse_records(std::istream& in, const ParseOptions& options)
{
    if (!in) {
        throw Error(ErrorKind::io, "input stream is not readable");
    }
    ParseResult result;
    std::string line;
    std::size_t line_no = 0;
    if (!next_content_line(in, line, line_no)) {
        if (in.bad()) {
            throw Error(ErrorKind::io, "read failure");
        }
        return result;
    }
    if (trim(line) != record_header) {
        throw Error(ErrorKind::format, "header mismatch: expected '" + std::string(record_header)
                                           + "', found '" + std::string(trim(line)) + "'");
    }

    while (next_content_line(in, line, line_no)) {
        const auto fields = split_commas(trim(line));
        const auto reject = [&](std::string message) {
            result.errors.push_back({line_no, std::move(message)});
        };
        if (fields.size() != 6) {
            reject("expected 6 fields, found " + std::to_string(fields.size()));
            continue;
        }
        RawRow row;
        row.line = line_no;
        try {
            row.time = parse_timestamp(trim(fields[0]));
            row.pollutant = parse_pollutant(trim(fields[2]));
        } catch (const Error& e) {
            reject(e.what());
            continue;
        }
        row.station = std::string(trim(fields[1]));
        if (!valid_station(row.station)) {
            reject("station '" + row.station + "' does not match [A-Z]{2,4}");
            continue;
        }

        const std::string_view value = trim(fields[3]);
        if (!is_missing_token(value)) {
            const auto v = parse_double(value);
            if (!v) {
                reject("value '" + std::string(value) + "' is not a number");
                continue;
            }
            if (*v >= options.missing_below) {
                row.value = *v;
            }
        }

        const std::string_view dir = trim(fields[4]);
        const std::string_view speed = trim(fields[5]);
        std::optional<double> d;
        std::optional<double> s;
        if (!is_missing_token(dir) && !(d = parse_double(dir))) {
            reject("wind direction '" + std::string(dir) + "' is not a number");
            continue;
        }
        if (!is_missing_token(speed) && !(s = parse_double(speed))) {
            reject("wind speed '" + std::string(speed) + "' is not a number");
            continue;
        }
        // Out-of-range wind readings are sentinels as well; 360 is north.
        if (d && *d == 360.0) {
            d = 0.0;
        }
        if (d && s && *d >= 0.0 && *d < 360.0 && *s >= 0.0) {
            row.wind_dir_deg = d;
            row.wind_speed_ms = s;
        }
        result.rows.push_back(std::move(row));
    }
    if (in.bad()) {
        throw Error(ErrorKind::io, "read failure at line " + std::to_string(line_no));
    }
    return result;
}

ParseResult parse_records_file(const std::filesystem::path& path, const ParseOptions& options)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
    }
    return parse_records(in, options);
}

bool DataMatrix::fully_observed() const noexcept
{
    return std::all_of(mask.begin(), mask.end(), [](std::uint8_t v) { return v != 0; });
}

std::optional<std::size_t> DataMatrix::station_index(std::string_view station) const
{
    const auto it = std::lower_bound(stations.begin(), stations.end(), station);
    if (it == stations.end() || *it != station) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - stations.begin());
}

Assembled assemble(std::span<const RawRow> rows, Pollutant pollutant)
{
    struct Cell {
        std::optional<double> value;
        std::optional<Wind> wind;
    };
    std::map<std::pair<std::int64_t, std::string>, Cell> cells;
    for (const RawRow& row : rows) {
        if (row.pollutant != pollutant) {
            continue;
        }
        Cell& cell = cells[{row.time.hours, row.station}];
        const std::string where = row.station + " at " + format_timestamp(row.time) + " ("
                                  + std::string(to_string(pollutant)) + ")";
        if (row.value) {
            if (cell.value && *cell.value != *row.value) {
                throw Error(ErrorKind::conflict, "conflicting values for " + where + ": "
                                                     + format_number(*cell.value) + " vs "
                                                     + format_number(*row.value));
            }
            cell.value = row.value;
        }
        if (row.wind_dir_deg && row.wind_speed_ms) {
            const Wind w{*row.wind_dir_deg, *row.wind_speed_ms};
            if (cell.wind && (cell.wind->direction_deg != w.direction_deg
                              || cell.wind->speed_ms != w.speed_ms)) {
                throw Error(ErrorKind::conflict, "conflicting wind for " + where);
            }
            cell.wind = w;
        }
    }
    if (cells.empty()) {
        throw Error(ErrorKind::format, "no rows for pollutant " + std::string(to_string(pollutant)));
    }

    std::vector<std::string> stations;
    std::int64_t first = cells.begin()->first.first;
    std::int64_t last = first;
    bool any_observed = false;
    for (const auto& [key, cell] : cells) {
        stations.push_back(key.second);
        first = std::min(first, key.first);
        last = std::max(last, key.first);
        any_observed = any_observed || cell.value.has_value();
    }
    std::sort(stations.begin(), stations.end());
    stations.erase(std::unique(stations.begin(), stations.end()), stations.end());
    if (!any_observed) {
        throw Error(ErrorKind::format, "no observed values for pollutant "
                                           + std::string(to_string(pollutant)));
    }
    if (stations.size() < 2) {
        throw Error(ErrorKind::size, "at least 2 stations are required, found "
                                         + std::to_string(stations.size()));
    }

    const auto m = static_cast<std::size_t>(last - first + 1);
    const std::size_t n = stations.size();
    Assembled out;
    DataMatrix& dm = out.data;
    dm.values = Matrix(m, n);
    dm.mask.assign(m * n, 0);
    dm.timestamps.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        dm.timestamps[i] = HourStamp{first + static_cast<std::int64_t>(i)};
    }
    dm.stations = stations;
    dm.pollutant = pollutant;

    // map order is (time, station), so winds come out time-major
    for (const auto& [key, cell] : cells) {
        const auto i = static_cast<std::size_t>(key.first - first);
        const std::size_t j = *dm.station_index(key.second);
        if (cell.value) {
            dm.values(i, j) = *cell.value;
            dm.mask[i * n + j] = 1;
        }
        if (cell.wind) {
            out.winds.push_back({key.second, HourStamp{key.first}, cell.wind->direction_deg,
                                 cell.wind->speed_ms});
        }
    }
    return out;
}

DataMatrix impute(const DataMatrix& dm, ImputePolicy policy, std::size_t max_gap_hours)
{
    (void)policy; // single policy for now
    DataMatrix out = dm;
    const std::size_t m = dm.hours();
    const std::size_t n = dm.station_count();
    for (std::size_t j = 0; j < n; ++j) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < m; ++i) {
            if (dm.observed(i, j)) {
                sum += dm.values(i, j);
                ++count;
            }
        }
        if (count == 0) {
            throw Error(ErrorKind::imputation, "station " + dm.stations[j]
                                                   + " has no observed values");
        }
        const double mean = sum / static_cast<double>(count);

        std::size_t i = 0;
        while (i < m) {
            if (dm.observed(i, j)) {
                ++i;
                continue;
            }
            std::size_t end = i;
            while (end < m && !dm.observed(end, j)) {
                ++end;
            }
            const std::size_t gap = end - i;
            const bool interior = i > 0 && end < m;
            if (interior && gap <= max_gap_hours) {
                const double left = dm.values(i - 1, j);
                const double right = dm.values(end, j);
                for (std::size_t t = 0; t < gap; ++t) {
                    const double frac = static_cast<double>(t + 1) / static_cast<double>(gap + 1);
                    out.values(i + t, j) = left + (right - left) * frac;
                }
            } else {
                for (std::size_t t = i; t < end; ++t) {
                    out.values(t, j) = mean;
                }
            }
            i = end;
        }
    }
    std::fill(out.mask.begin(), out.mask.end(), std::uint8_t{1});
    return out;
}

WindTable::WindTable(const DataMatrix& dm, std::span<const WindRecord> records)
    : hours_(dm.hours()), stations_(dm.station_count()),
      present_(hours_ * stations_, 0), cells_(hours_ * stations_)
{
    if (dm.timestamps.empty()) {
        return;
    }
    const std::int64_t first = dm.timestamps.front().hours;
    for (const WindRecord& r : records) {
        const std::int64_t offset = r.time.hours - first;
        if (offset < 0 || offset >= static_cast<std::int64_t>(hours_)) {
            continue;
        }
        const auto j = dm.station_index(r.station);
        if (!j) {
            continue;
        }
        const std::size_t idx = static_cast<std::size_t>(offset) * stations_ + *j;
        if (!present_[idx]) {
            ++count_;
        }
        present_[idx] = 1;
        cells_[idx] = Wind{r.direction_deg, r.speed_ms};
    }
}

std::optional<Wind> WindTable::at(std::size_t hour, std::size_t station) const noexcept
{
    const std::size_t idx = hour * stations_ + station;
    if (hour >= hours_ || station >= stations_ || !present_[idx]) {
        return std::nullopt;
    }
    return cells_[idx];
}

std::string format_number(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_records_csv(std::ostream& out, const DataMatrix& dm, std::span<const WindRecord> winds)
{
    const WindTable table(dm, winds);
    const std::string pollutant(to_string(dm.pollutant));
    out << record_header << '\n';
    for (std::size_t i = 0; i < dm.hours(); ++i) {
        const std::string stamp = format_timestamp(dm.timestamps[i]);
        for (std::size_t j = 0; j < dm.station_count(); ++j) {
            out << stamp << ',' << dm.stations[j] << ',' << pollutant << ',';
            if (dm.observed(i, j)) {
                out << format_number(dm.values(i, j));
            }
            out << ',';
            if (const auto w = table.at(i, j)) {
                out << format_number(w->direction_deg) << ',' << format_number(w->speed_ms);
            } else {
                out << ',';
            }
            out << '\n';
        }
    }
}

void write_matrix_csv(std::ostream& out, const DataMatrix& dm)
{
    out << "timestamp";
    for (const auto& s : dm.stations) {
        out << ',' << s;
    }
    out << '\n';
    for (std::size_t i = 0; i < dm.hours(); ++i) {
        out << format_timestamp(dm.timestamps[i]);
        for (std::size_t j = 0; j < dm.station_count(); ++j) {
            out << ',';
            if (dm.observed(i, j)) {
                out << format_number(dm.values(i, j));
            }
        }
        out << '\n';
    }
}

DataMatrix read_matrix_csv(std::istream& in, Pollutant pollutant)
{
    if (!in) {
        throw Error(ErrorKind::io, "input stream is not readable");
    }
    std::string line;
    std::size_t line_no = 0;
    if (!next_content_line(in, line, line_no)) {
        throw Error(ErrorKind::format, "matrix file is empty");
    }
    const auto header = split_commas(trim(line));
    if (header.size() < 3 || trim(header[0]) != "timestamp") {
        throw Error(ErrorKind::format, "matrix header must be 'timestamp,<station>,...'");
    }
    DataMatrix dm;
    dm.pollutant = pollutant;
    for (std::size_t j = 1; j < header.size(); ++j) {
        dm.stations.emplace_back(trim(header[j]));
    }
    if (!std::is_sorted(dm.stations.begin(), dm.stations.end())
        || std::adjacent_find(dm.stations.begin(), dm.stations.end()) != dm.stations.end()) {
        throw Error(ErrorKind::format, "matrix stations must be sorted and unique");
    }
    const std::size_t n = dm.stations.size();
    std::vector<double> values;
    while (next_content_line(in, line, line_no)) {
        const auto fields = split_commas(trim(line));
        if (fields.size() != n + 1) {
            throw Error(ErrorKind::format, "line " + std::to_string(line_no) + ": expected "
                                               + std::to_string(n + 1) + " fields");
        }
        const HourStamp t = parse_timestamp(trim(fields[0]));
        if (!dm.timestamps.empty() && t.hours != dm.timestamps.back().hours + 1) {
            throw Error(ErrorKind::format, "line " + std::to_string(line_no)
                                               + ": hours must be consecutive");
        }
        dm.timestamps.push_back(t);
        for (std::size_t j = 1; j <= n; ++j) {
            const std::string_view f = trim(fields[j]);
            if (f.empty()) {
                values.push_back(0.0);
                dm.mask.push_back(0);
                continue;
            }
            const auto v = parse_double(f);
            if (!v || *v < 0.0) {
                throw Error(ErrorKind::format, "line " + std::to_string(line_no) + ": bad value '"
                                                   + std::string(f) + "'");
            }
            values.push_back(*v);
            dm.mask.push_back(1);
        }
    }
    if (dm.timestamps.empty()) {
        throw Error(ErrorKind::format, "matrix file has no rows");
    }
    dm.values = Matrix(dm.timestamps.size(), n, std::move(values));
    return dm;
}

} // namespace aqnmf
