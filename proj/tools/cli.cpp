#include "cli.hpp"

#include "aqnmf/apportionment.hpp"
#include "aqnmf/error.hpp"
#include "aqnmf/ingest.hpp"
#include "aqnmf/meteorology.hpp"
#include "aqnmf/nmf.hpp"
#include "aqnmf/rank_selection.hpp"
#include "aqnmf/report_io.hpp"
#include "aqnmf/synth.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

namespace aqnmf::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view tool_version = "1.0.0";

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct KRange {
    std::size_t lo = 2;
    std::size_t hi = 7;
};

struct RunConfig {
    std::string command;
    std::string input;
    std::string input_sha256;
    std::string pollutant;
    std::optional<std::size_t> k;
    std::optional<KRange> k_range;
    std::optional<std::size_t> runs;
    std::uint64_t seed = 0;
    double tol = NmfConfig{}.tol;
    std::size_t max_iter = NmfConfig{}.max_iter;
    NmfMode mode = NmfConfig{}.mode;
    ClassifierThresholds thresholds;
    std::string format;
    std::map<std::string, std::string> extra;

    NmfConfig nmf() const
    {
        NmfConfig c;
        c.tol = tol;
        c.max_iter = max_iter;
        c.mode = mode;
        c.seed = seed;
        c.validate();
        return c;
    }
};

ordered_json to_json(const RunConfig& rc)
{
    ordered_json j;
    j["tool"] = "aqnmf";
    j["version"] = tool_version;
    j["command"] = rc.command;
    j["input"] = rc.input;
    j["input_sha256"] = rc.input_sha256;
    j["pollutant"] = rc.pollutant.empty() ? ordered_json() : ordered_json(rc.pollutant);
    j["k"] = rc.k ? ordered_json(*rc.k) : ordered_json();
    if (rc.k_range) {
        j["k_range"] = {rc.k_range->lo, rc.k_range->hi};
    } else {
        j["k_range"] = nullptr;
    }
    j["runs"] = rc.runs ? ordered_json(*rc.runs) : ordered_json();
    j["seed"] = rc.seed;
    j["tol"] = rc.tol;
    j["max_iter"] = rc.max_iter;
    j["mode"] = to_string(rc.mode);
    j["thresholds"] = aqnmf::to_json(rc.thresholds);
    j["format"] = rc.format.empty() ? ordered_json() : ordered_json(rc.format);
    for (const auto& [key, value] : rc.extra) {
        j[key] = value;
    }
    return j;
}

std::string provenance_line(const RunConfig& rc)
{
    return to_json(rc).dump();
}

void write_csv_provenance(std::ostream& out, const RunConfig& rc)
{
    out << "# provenance: " << provenance_line(rc) << '\n';
}

void write_svg_provenance(std::ostream& out, const RunConfig& rc)
{
    std::string text = provenance_line(rc);
    for (std::size_t pos = text.find("--"); pos != std::string::npos; pos = text.find("--", pos)) {
        text.replace(pos, 2, "-\\u002d");
    }
    out << "<!-- provenance: " << text << " -->\n";
}

int exit_code_for(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::degenerate:
    case ErrorKind::undefined_share:
        return exit_numerical;
    default:
        return exit_data;
    }
}

std::optional<std::uint64_t> parse_u64(std::string_view text)
{
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || text.empty()) {
        return std::nullopt;
    }
    return v;
}

KRange parse_k_range(std::string_view text)
{
    const auto dots = text.find("..");
    if (dots == std::string_view::npos) {
        throw UsageError("--k-range expects LO..HI, got '" + std::string(text) + "'");
    }
    const auto lo = parse_u64(text.substr(0, dots));
    const auto hi = parse_u64(text.substr(dots + 2));
    if (!lo || !hi) {
        throw UsageError("--k-range expects LO..HI, got '" + std::string(text) + "'");
    }
    return {static_cast<std::size_t>(*lo), static_cast<std::size_t>(*hi)};
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::ostream& err)
{
    if (flag) {
        return *flag;
    }
    if (const char* env = std::getenv("AQNMF_SEED")) {
        const auto v = parse_u64(env);
        if (!v) {
            throw UsageError("AQNMF_SEED must be a non-negative integer, got '" + std::string(env) + "'");
        }
        err << "seed = " << *v << " (from AQNMF_SEED)\n";
        return *v;
    }
    err << "seed = 0 (default)\n";
    return 0;
}

std::size_t resolve_threads(const std::optional<std::size_t>& flag)
{
    if (flag) {
        return std::max<std::size_t>(1, *flag);
    }
    if (const char* env = std::getenv("AQNMF_THREADS")) {
        const auto v = parse_u64(env);
        if (!v) {
            throw UsageError("AQNMF_THREADS must be a non-negative integer, got '" + std::string(env)
                             + "'");
        }
        return std::max<std::uint64_t>(1, *v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::string sha256_hex(std::istream& in)
{
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error(ErrorKind::io, "cannot initialise SHA-256");
    }
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto got = in.gcount();
        if (got > 0) {
            EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(got));
        }
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return hex.str();
}

void check_distinct(const std::string& input, const fs::path& output)
{
    std::error_code ec;
    if (!input.empty() && fs::exists(output, ec) && fs::equivalent(input, output, ec)) {
        throw UsageError("output " + output.string() + " would overwrite the input");
    }
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
    }
    body(out);
    out.flush();
    if (!out) {
        throw Error(ErrorKind::io, "failed writing " + path.string());
    }
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorKind::io, "cannot create directory " + dir.string() + ": " + ec.message());
    }
}

Assembled load_records(const RunConfig& rc, double missing_below, std::ostream& err)
{
    ParseOptions opts;
    opts.missing_below = missing_below;
    const ParseResult parsed = parse_records_file(rc.input, opts);
    if (!parsed.errors.empty()) {
        err << "warning: skipped " << parsed.errors.size() << " malformed line(s)\n";
        const std::size_t shown = std::min<std::size_t>(parsed.errors.size(), 5);
        for (std::size_t e = 0; e < shown; ++e) {
            err << "  line " << parsed.errors[e].line << ": " << parsed.errors[e].message << '\n';
        }
    }
    return assemble(parsed.rows, parse_pollutant(rc.pollutant));
}

DataMatrix fill_gaps(const DataMatrix& dm, std::ostream& err)
{
    if (dm.fully_observed()) {
        return dm;
    }
    const auto missing = std::count(dm.mask.begin(), dm.mask.end(), std::uint8_t{0});
    err << "note: imputing " << missing << " missing cell(s)\n";
    return impute(dm);
}

void warn_convergence(const FactorModel& model, std::ostream& err)
{
    if (!model.converged) {
        err << "warning: k = " << model.k << " did not converge within " << model.iterations_run
            << " iterations; factors are the last iterate\n";
    }
}

void warn_rank(std::size_t k, const DataMatrix& dm, std::ostream& err)
{
    if (rank_exceeds_compression_bound(k, dm.hours(), dm.station_count())) {
        err << "warning: k = " << k << " exceeds the compression bound for a " << dm.hours() << "x"
            << dm.station_count() << " matrix\n";
    }
}

void print_selection(std::ostream& out, const RankSelection& sel)
{
    out << "k,rho\n";
    for (std::size_t p = 0; p < sel.ranks.size(); ++p) {
        out << sel.ranks[p] << ',' << format_number(sel.rhos[p]) << '\n';
    }
    out << "chosen k = " << sel.k << '\n';
}

void warn_selection(std::ostream& err, const RankSelection& sel)
{
    if (sel.no_decline) {
        err << "warning: rho never declines over the range; picked k_max - 1\n";
    }
    if (sel.range_warning) {
        err << "warning: the rank range reaches past the compression bound\n";
    }
}

ordered_json with_provenance(const RunConfig& rc, const ordered_json& body)
{
    ordered_json j;
    j["provenance"] = to_json(rc);
    for (const auto& [key, value] : body.items()) {
        j[key] = value;
    }
    return j;
}

void add_nmf_options(CLI::App* sub, RunConfig& rc, std::string& mode_text)
{
    sub->add_option("--tol", rc.tol, "Convergence tolerance")->capture_default_str();
    sub->add_option("--max-iter", rc.max_iter, "Iteration cap")->capture_default_str();
    sub->add_option("--mode", mode_text, "plain or paper")
        ->check(CLI::IsMember({"plain", "paper"}))
        ->capture_default_str();
}

struct Options {
    RunConfig rc;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::string mode_text = std::string(to_string(NmfConfig{}.mode));
    std::string matrix;
    std::string output;
    std::string output_dir;
    std::string k_range_text;
    std::optional<std::size_t> k_min;
    std::optional<std::size_t> k_max;
    std::size_t runs = 20;
    std::string linkage = "average";
    double missing_below = 0.0;
    bool impute_gaps = false;
    std::optional<std::size_t> feature;
    std::string weighting = "nmf";
    std::vector<std::string> reports;
    std::string observed;
    std::string reference;
    double tolerance = default_validation_tolerance;
    std::string preset = "two-source";
    std::optional<double> noise;
    std::optional<double> missing;
    std::optional<std::size_t> hours;
    std::string truth;
};

void finish_common(Options& o, std::ostream& err)
{
    o.rc.mode = parse_nmf_mode(o.mode_text);
    o.rc.seed = resolve_seed(o.seed, err);
    if (!o.rc.input.empty()) {
        std::ifstream in(o.rc.input, std::ios::binary);
        if (!in) {
            throw Error(ErrorKind::io, "cannot open " + o.rc.input);
        }
        o.rc.input_sha256 = sha256_hex(in);
    }
}

int cmd_ingest(Options& o, std::ostream& out, std::ostream& err)
{
    check_distinct(o.rc.input, o.output);
    Assembled a = load_records(o.rc, o.missing_below, err);
    DataMatrix dm = o.impute_gaps ? fill_gaps(a.data, err) : a.data;
    o.rc.extra["imputed"] = o.impute_gaps ? "true" : "false";
    write_file(o.output, [&](std::ostream& f) {
        write_csv_provenance(f, o.rc);
        write_matrix_csv(f, dm);
    });
    const auto observed = std::count(a.data.mask.begin(), a.data.mask.end(), std::uint8_t{1});
    out << "hours " << dm.hours() << ", stations " << dm.station_count() << ", observed "
        << observed << " of " << a.data.mask.size() << " cells\n";
    return exit_ok;
}

DataMatrix load_matrix_input(Options& o, std::ostream& err)
{
    if (!o.matrix.empty()) {
        std::ifstream in(o.matrix, std::ios::binary);
        if (!in) {
            throw Error(ErrorKind::io, "cannot open " + o.matrix);
        }
        return fill_gaps(read_matrix_csv(in, parse_pollutant(o.rc.pollutant)), err);
    }
    return fill_gaps(load_records(o.rc, o.missing_below, err).data, err);
}

KRange resolve_range(Options& o)
{
    if (!o.k_range_text.empty()) {
        if (o.k_min || o.k_max) {
            throw UsageError("--k-range cannot be combined with --k-min/--k-max");
        }
        return parse_k_range(o.k_range_text);
    }
    KRange r;
    if (o.k_min) {
        r.lo = *o.k_min;
    }
    if (o.k_max) {
        r.hi = *o.k_max;
    }
    return r;
}

RankSelection run_selection(Options& o, const DataMatrix& dm, const KRange& range)
{
    ConsensusOptions copts;
    copts.linkage = parse_linkage(o.linkage);
    copts.threads = resolve_threads(o.threads);
    return select_rank(dm.values, range.lo, range.hi, o.runs, o.rc.seed, o.rc.nmf(), copts);
}

int cmd_select_rank(Options& o, std::ostream& out, std::ostream& err)
{
    const KRange range = resolve_range(o);
    o.rc.k_range = range;
    o.rc.runs = o.runs;
    o.rc.extra["linkage"] = o.linkage;
    const DataMatrix dm = load_matrix_input(o, err);
    const RankSelection sel = run_selection(o, dm, range);
    print_selection(out, sel);
    warn_selection(err, sel);
    if (!o.output.empty()) {
        check_distinct(o.rc.input, o.output);
        write_file(o.output, [&](std::ostream& f) {
            f << with_provenance(o.rc, aqnmf::to_json(sel)).dump(2) << '\n';
        });
    }
    return exit_ok;
}

int cmd_factorize(Options& o, std::ostream& out, std::ostream& err)
{
    const DataMatrix dm = load_matrix_input(o, err);
    const std::size_t k = *o.rc.k;
    check_rank(k, dm.hours(), dm.station_count());
    warn_rank(k, dm, err);
    const FactorModel model = factorize(dm.values, k, o.rc.nmf());
    warn_convergence(model, err);

    const fs::path dir(o.output_dir);
    ensure_dir(dir);
    write_file(dir / "W.csv", [&](std::ostream& f) {
        write_csv_provenance(f, o.rc);
        write_w_csv(f, model, dm);
    });
    write_file(dir / "H.csv", [&](std::ostream& f) {
        write_csv_provenance(f, o.rc);
        write_h_csv(f, model, dm);
    });
    ordered_json meta = model_metadata(model);
    meta["pollutant"] = to_string(dm.pollutant);
    meta["stations"] = dm.stations;
    meta["hours"] = dm.hours();
    meta["shares"] = contribution_shares(model);
    write_file(dir / "model.json", [&](std::ostream& f) {
        f << with_provenance(o.rc, meta).dump(2) << '\n';
    });
    out << "k = " << k << ", iterations " << model.iterations_run << ", converged "
        << (model.converged ? "yes" : "no") << ", cost " << format_number(model.final_cost) << '\n';
    return exit_ok;
}

int cmd_windrose(Options& o, std::ostream& out, std::ostream& err)
{
    const Assembled a = load_records(o.rc, o.missing_below, err);
    const DataMatrix dm = fill_gaps(a.data, err);
    const WindTable winds(dm, a.winds);
    o.rc.extra["weighting"] = o.weighting;

    const fs::path dir(o.output_dir);
    ensure_dir(dir);
    const std::string ext = o.rc.format == "svg" ? ".svg" : ".csv";
    auto emit = [&](const WindRose& rose, const std::string& name) {
        const fs::path path = dir / ("windrose_" + name + ext);
        write_file(path, [&](std::ostream& f) {
            if (o.rc.format == "svg") {
                write_svg_provenance(f, o.rc);
                write_windrose_svg(f, rose, std::string(to_string(dm.pollutant)) + " " + name);
            } else {
                write_csv_provenance(f, o.rc);
                write_windrose_csv(f, rose);
            }
        });
        out << path.string() << '\n';
    };

    if (o.weighting == "concentration") {
        emit(build_concentration_windrose(winds, dm), "concentration");
        return exit_ok;
    }
    if (!o.rc.k) {
        throw UsageError("--k is required for NMF-weighted roses");
    }
    const std::size_t k = *o.rc.k;
    check_rank(k, dm.hours(), dm.station_count());
    const FactorModel model = factorize(dm.values, k, o.rc.nmf());
    warn_convergence(model, err);
    std::vector<std::size_t> features;
    if (o.feature) {
        if (*o.feature < 1 || *o.feature > k) {
            throw UsageError("--feature must lie in 1.." + std::to_string(k));
        }
        features.push_back(*o.feature - 1);
    } else {
        for (std::size_t l = 0; l < k; ++l) {
            features.push_back(l);
        }
    }
    for (std::size_t l : features) {
        const FeatureProfile p = build_feature_profile(model, l, dm, winds);
        emit(p.windrose, "NMF" + std::to_string(l + 1));
    }
    return exit_ok;
}

int cmd_apportion(Options& o, std::ostream& out, std::ostream& err)
{
    const bool has_range = !o.k_range_text.empty() || o.k_min || o.k_max;
    if (o.rc.k && has_range) {
        throw UsageError("--k and --k-range are mutually exclusive");
    }
    std::optional<RankSelection> sel;
    const Assembled a = load_records(o.rc, o.missing_below, err);
    const DataMatrix dm = fill_gaps(a.data, err);
    const WindTable winds(dm, a.winds);

    std::size_t k = 0;
    if (o.rc.k) {
        k = *o.rc.k;
        check_rank(k, dm.hours(), dm.station_count());
    } else {
        const KRange range = resolve_range(o);
        o.rc.k_range = range;
        o.rc.runs = o.runs;
        o.rc.extra["linkage"] = o.linkage;
        sel = run_selection(o, dm, range);
        warn_selection(err, *sel);
        k = sel->k;
        err << "chosen k = " << k << '\n';
    }
    warn_rank(k, dm, err);
    const FactorModel model = factorize(dm.values, k, o.rc.nmf());
    warn_convergence(model, err);
    const ApportionmentReport report = apportion(model, dm, winds, o.rc.thresholds);

    auto body = [&](std::ostream& f) {
        if (o.rc.format == "csv") {
            write_csv_provenance(f, o.rc);
            write_report_csv(f, report);
        } else {
            ordered_json j = with_provenance(o.rc, aqnmf::to_json(report));
            if (sel) {
                j["rank_selection"] = aqnmf::to_json(*sel);
            }
            f << j.dump(2) << '\n';
        }
    };
    if (o.output.empty()) {
        body(out);
    } else {
        check_distinct(o.rc.input, o.output);
        write_file(o.output, body);
    }
    return exit_ok;
}

int cmd_validate(Options& o, std::ostream& out, std::ostream& err)
{
    if (o.reports.empty() == o.observed.empty()) {
        throw UsageError("give exactly one of --report or --observed");
    }
    const auto reference = parse_ratio_list(o.reference);
    ValidationReport result;
    if (!o.observed.empty()) {
        const auto obs = parse_ratio_list(o.observed);
        const std::vector<std::pair<Pollutant, double>> pairs(obs.begin(), obs.end());
        result = validate_against(pairs, reference, o.tolerance);
    } else {
        std::vector<ApportionmentReport> reports;
        std::vector<std::string> hashes;
        for (const auto& path : o.reports) {
            std::ifstream in(path, std::ios::binary);
            if (!in) {
                throw Error(ErrorKind::io, "cannot open " + path);
            }
            hashes.push_back(sha256_hex(in));
            in.clear();
            in.seekg(0);
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorKind::format, path + ": " + e.what());
            }
            reports.push_back(report_from_json(j));
        }
        std::string joined;
        for (std::size_t r = 0; r < o.reports.size(); ++r) {
            joined += (r ? ";" : "") + o.reports[r] + "@" + hashes[r];
        }
        o.rc.extra["reports"] = joined;
        result = validate_against(reports, reference, o.tolerance);
    }
    o.rc.extra["reference"] = o.reference;
    o.rc.extra["tolerance"] = format_number(o.tolerance);

    out << "pollutant,reference,observed,deviation,verdict\n";
    for (const Deviation& d : result.rows) {
        out << to_string(d.pollutant) << ',' << format_number(d.reference) << ','
            << format_number(d.observed) << ',' << format_number(d.deviation) << ','
            << (d.pass ? "pass" : "fail") << '\n';
    }
    out << (result.all_pass ? "all within" : "not all within") << " +/-" << format_number(o.tolerance)
        << " points\n";
    if (!o.output.empty()) {
        write_file(o.output, [&](std::ostream& f) {
            f << with_provenance(o.rc, aqnmf::to_json(result)).dump(2) << '\n';
        });
    }
    (void)err;
    return exit_ok;
}

int cmd_synth(Options& o, std::ostream& out, std::ostream&)
{
    Scenario sc = o.preset == "clusters" ? cluster_scenario(o.rc.seed) : two_source_scenario(o.rc.seed);
    if (o.noise) {
        sc.noise_level = *o.noise;
    }
    if (o.missing) {
        sc.missing_fraction = *o.missing;
    }
    if (o.hours) {
        sc.m = *o.hours;
    }
    o.rc.pollutant = std::string(to_string(sc.pollutant));
    o.rc.k = sc.k_true;
    o.rc.extra["preset"] = o.preset;
    o.rc.extra["noise_level"] = format_number(sc.noise_level);
    o.rc.extra["missing_fraction"] = format_number(sc.missing_fraction);
    o.rc.extra["hours"] = std::to_string(sc.m);

    const GeneratedDataset ds = gen_dataset(sc);
    write_file(o.output, [&](std::ostream& f) {
        write_csv_provenance(f, o.rc);
        write_records_csv(f, ds.data, ds.winds);
    });
    if (!o.truth.empty()) {
        ordered_json t;
        t["pollutant"] = to_string(sc.pollutant);
        t["k_true"] = sc.k_true;
        t["planted_shares"] = ds.planted_shares;
        ordered_json labels = ordered_json::array();
        for (Verdict v : ds.truth) {
            labels.push_back(to_string(v));
        }
        t["labels"] = labels;
        const auto blocks = planted_blocks(sc.n, sc.k_true);
        ordered_json stations = ordered_json::object();
        for (std::size_t j = 0; j < sc.n; ++j) {
            stations[ds.data.stations[j]] = blocks[j] + 1;
        }
        t["station_feature"] = stations;
        write_file(o.truth, [&](std::ostream& f) {
            f << with_provenance(o.rc, t).dump(2) << '\n';
        });
    }
    out << "wrote " << ds.data.hours() << " hours x " << ds.data.station_count() << " stations to "
        << o.output << '\n';
    return exit_ok;
}

} // namespace

std::string sha256_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open " + path);
    }
    return sha256_hex(in);
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err)
{
    CLI::App app("Air-quality source apportionment with non-negative matrix factorization", "aqnmf");
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tool_version));

    Options o;
    auto seed_opt = [&](CLI::App* sub) {
        sub->add_option("--seed", o.seed, "Base seed (default: AQNMF_SEED or 0)");
    };
    auto input_opt = [&](CLI::App* sub, bool required) {
        auto* opt = sub->add_option("--input", o.rc.input, "Hourly records CSV")->check(CLI::ExistingFile);
        if (required) {
            opt->required();
        }
        sub->add_option("--missing-below", o.missing_below, "Values below this read as missing")
            ->capture_default_str();
        return opt;
    };
    auto pollutant_opt = [&](CLI::App* sub) {
        sub->add_option("--pollutant", o.rc.pollutant, "SO2, NO2, PM10, PM25 or O3")->required();
    };
    auto range_opts = [&](CLI::App* sub) {
        sub->add_option("--k-range", o.k_range_text, "Candidate ranks LO..HI (default 2..7)");
        sub->add_option("--k-min", o.k_min, "Smallest candidate rank");
        sub->add_option("--k-max", o.k_max, "Largest candidate rank");
        sub->add_option("--runs", o.runs, "Restarts per rank")->capture_default_str();
        sub->add_option("--linkage", o.linkage, "average, single or complete")
            ->check(CLI::IsMember({"average", "single", "complete"}))
            ->capture_default_str();
        sub->add_option("--threads", o.threads, "Worker threads (default: AQNMF_THREADS or all cores)");
    };

    auto* ingest = app.add_subcommand("ingest", "Hourly records CSV to a canonical matrix file");
    input_opt(ingest, true);
    pollutant_opt(ingest);
    ingest->add_option("--output", o.output, "Matrix CSV to write")->required();
    ingest->add_flag("--impute", o.impute_gaps, "Fill gaps before writing");

    auto* select = app.add_subcommand("select-rank", "Cophenetic correlation over candidate ranks");
    auto* sel_in = input_opt(select, false);
    auto* sel_mx = select->add_option("--matrix", o.matrix, "Canonical matrix file")
                       ->check(CLI::ExistingFile);
    sel_in->excludes(sel_mx);
    pollutant_opt(select);
    range_opts(select);
    seed_opt(select);
    add_nmf_options(select, o.rc, o.mode_text);
    select->add_option("--output", o.output, "JSON file for the rho table");

    auto* fact = app.add_subcommand("factorize", "Factorize at a fixed rank");
    auto* fact_in = input_opt(fact, false);
    auto* fact_mx = fact->add_option("--matrix", o.matrix, "Canonical matrix file")
                        ->check(CLI::ExistingFile);
    fact_in->excludes(fact_mx);
    pollutant_opt(fact);
    fact->add_option("--k", o.rc.k, "Rank")->required();
    seed_opt(fact);
    add_nmf_options(fact, o.rc, o.mode_text);
    fact->add_option("--output-dir", o.output_dir, "Directory for W.csv, H.csv, model.json")->required();

    auto* rose = app.add_subcommand("windrose", "Per-feature wind roses");
    input_opt(rose, true);
    pollutant_opt(rose);
    rose->add_option("--k", o.rc.k, "Rank");
    rose->add_option("--feature", o.feature, "1-based feature (default: all)");
    rose->add_option("--weighting", o.weighting, "nmf or concentration")
        ->check(CLI::IsMember({"nmf", "concentration"}))
        ->capture_default_str();
    rose->add_option("--format", o.rc.format, "csv or svg (default csv)")
        ->check(CLI::IsMember({"csv", "svg"}));
    seed_opt(rose);
    add_nmf_options(rose, o.rc, o.mode_text);
    rose->add_option("--output-dir", o.output_dir, "Directory for the roses")->required();

    auto* appo = app.add_subcommand("apportion", "Full pipeline to an apportionment report");
    input_opt(appo, true);
    pollutant_opt(appo);
    appo->add_option("--k", o.rc.k, "Fixed rank (otherwise chosen over --k-range)");
    range_opts(appo);
    seed_opt(appo);
    add_nmf_options(appo, o.rc, o.mode_text);
    appo->add_option("--peak-speed", o.rc.thresholds.strong_threshold_ms,
                     "Peak speed marking a transboundary feature (m/s)")
        ->capture_default_str();
    appo->add_option("--strong-fraction", o.rc.thresholds.strong_fraction,
                     "Strong-wind mass fraction for the seasonal rule")
        ->capture_default_str();
    appo->add_option("--winter-spring", o.rc.thresholds.winter_spring_share,
                     "Winter + spring activation percent for the seasonal rule")
        ->capture_default_str();
    appo->add_option("--format", o.rc.format, "json or csv (default json)")->check(CLI::IsMember({"json", "csv"}));
    appo->add_option("--output", o.output, "Report file (default: stdout)");

    auto* val = app.add_subcommand("validate", "Compare domestic ratios with reference values");
    val->add_option("--report", o.reports, "Apportionment report JSON (repeatable)")
        ->check(CLI::ExistingFile);
    val->add_option("--observed", o.observed, "Observed ratios, e.g. no2=75.9,so2=26.9");
    val->add_option("--reference", o.reference, "Reference ratios, e.g. no2=70,so2=27")->required();
    val->add_option("--tolerance", o.tolerance, "Allowed deviation in points")->capture_default_str();
    val->add_option("--output", o.output, "JSON file for the comparison");

    auto* syn = app.add_subcommand("synth", "Synthetic dataset with planted sources");
    syn->add_option("--preset", o.preset, "two-source or clusters")
        ->check(CLI::IsMember({"two-source", "clusters"}))
        ->capture_default_str();
    seed_opt(syn);
    syn->add_option("--noise", o.noise, "Relative Frobenius noise in [0, 0.5]");
    syn->add_option("--missing", o.missing, "Fraction of cells to mask");
    syn->add_option("--hours", o.hours, "Number of hours");
    syn->add_option("--output", o.output, "Records CSV to write")->required();
    syn->add_option("--truth", o.truth, "Ground-truth JSON to write");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? exit_ok : exit_usage;
    }

    CLI::App* sub = app.get_subcommands().front();
    o.rc.command = sub->get_name();
    try {
        if (o.rc.format.empty()) {
            if (o.rc.command == "apportion") {
                o.rc.format = "json";
            } else if (o.rc.command == "windrose") {
                o.rc.format = "csv";
            }
        }
        if (o.rc.command == "select-rank" || o.rc.command == "factorize") {
            if (o.rc.input.empty() && o.matrix.empty()) {
                throw UsageError("give --input or --matrix");
            }
            if (!o.matrix.empty()) {
                o.rc.input = o.matrix;
            }
        }
        if (o.rc.command == "validate") {
            o.rc.input.clear();
        } else {
            finish_common(o, err);
        }
        if (o.rc.command == "ingest") return cmd_ingest(o, out, err);
        if (o.rc.command == "select-rank") return cmd_select_rank(o, out, err);
        if (o.rc.command == "factorize") return cmd_factorize(o, out, err);
        if (o.rc.command == "windrose") return cmd_windrose(o, out, err);
        if (o.rc.command == "apportion") return cmd_apportion(o, out, err);
        if (o.rc.command == "validate") return cmd_validate(o, out, err);
        return cmd_synth(o, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_data;
    }
}

} // namespace aqnmf::cli
