#include "aqnmf/apportionment.hpp"
#include "aqnmf/error.hpp"
#include "aqnmf/ingest.hpp"
#include "aqnmf/meteorology.hpp"
#include "aqnmf/nmf.hpp"
#include "aqnmf/rank_selection.hpp"
#include "aqnmf/report_io.hpp"
#include "aqnmf/synth.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>

namespace py = pybind11;
using namespace aqnmf;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a)
{
    if (a.ndim() != 2) {
        throw Error(ErrorKind::shape, "expected a 2-d array, got " + std::to_string(a.ndim()) + "-d");
    }
    const auto rows = static_cast<std::size_t>(a.shape(0));
    const auto cols = static_cast<std::size_t>(a.shape(1));
    std::vector<double> v(a.data(), a.data() + rows * cols);
    return Matrix(rows, cols, std::move(v));
}

Array to_array(const Matrix& m)
{
    Array out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

NmfConfig make_config(std::size_t max_iter, double tol, const std::string& mode, std::uint64_t seed)
{
    NmfConfig c;
    c.max_iter = max_iter;
    c.tol = tol;
    c.mode = parse_nmf_mode(mode);
    c.seed = seed;
    c.validate();
    return c;
}

py::dict model_dict(const FactorModel& m)
{
    py::dict d;
    d["w"] = to_array(m.w);
    d["h"] = to_array(m.h);
    d["k"] = m.k;
    d["mode"] = std::string(to_string(m.mode));
    d["seed"] = m.seed;
    d["iterations_run"] = m.iterations_run;
    d["final_cost"] = m.final_cost;
    d["cost_trace"] = m.cost_trace;
    d["converged"] = m.converged;
    return d;
}

py::object json_to_py(const ordered_json& j)
{
    return py::module_::import("json").attr("loads")(j.dump());
}

py::dict dataset_dict(const GeneratedDataset& ds)
{
    py::dict d;
    d["values"] = to_array(ds.data.values);
    d["stations"] = ds.data.stations;
    std::vector<std::string> times;
    times.reserve(ds.data.timestamps.size());
    for (HourStamp t : ds.data.timestamps) {
        times.push_back(format_timestamp(t));
    }
    d["timestamps"] = times;
    std::vector<std::string> truth;
    for (Verdict v : ds.truth) {
        truth.emplace_back(to_string(v));
    }
    d["truth"] = truth;
    d["planted_w"] = to_array(ds.planted_w);
    d["planted_h"] = to_array(ds.planted_h);
    d["planted_shares"] = ds.planted_shares;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Non-negative matrix factorization for air-quality source apportionment";

    static py::exception<Error> error_type(m, "AqnmfError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const Error& e) {
            py::set_error(error_type, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
        }
    });

    m.def(
        "factorize",
        [](const Array& a, std::size_t k, std::size_t max_iter, double tol, const std::string& mode,
           std::uint64_t seed) {
            const Matrix mat = to_matrix(a);
            const NmfConfig c = make_config(max_iter, tol, mode, seed);
            const FactorModel model = [&] {
                py::gil_scoped_release release;
                return factorize(mat, k, c);
            }();
            return model_dict(model);
        },
        py::arg("a"), py::arg("k"), py::arg("max_iter") = 500, py::arg("tol") = 1e-4,
        py::arg("mode") = "paper", py::arg("seed") = 0, "Multiplicative-update NMF of a non-negative matrix.");

    m.def(
        "cost", [](const Array& a, const Array& w, const Array& h) {
            return cost(to_matrix(a), to_matrix(w), to_matrix(h));
        },
        py::arg("a"), py::arg("w"), py::arg("h"), "0.5 * ||A - WH||_F^2");

    m.def(
        "normalize_rows_minmax", [](const Array& h) { return to_array(normalize_rows_minmax(to_matrix(h))); },
        py::arg("h"));

    m.def(
        "connectivity_matrix", [](const Array& h) { return to_array(connectivity_matrix(to_matrix(h))); },
        py::arg("h"));

    m.def(
        "cophenetic_coefficient",
        [](const Array& c, const std::string& linkage) {
            return cophenetic_coefficient(to_matrix(c), parse_linkage(linkage));
        },
        py::arg("consensus"), py::arg("linkage") = "average");

    m.def(
        "consensus",
        [](const Array& a, std::size_t k, std::size_t runs, std::uint64_t base_seed, std::size_t threads,
           const std::string& mode) {
            const Matrix mat = to_matrix(a);
            const NmfConfig c = make_config(500, 1e-4, mode, 0);
            ConsensusOptions opts;
            opts.threads = threads;
            ConsensusResult r;
            {
                py::gil_scoped_release release;
                r = consensus(mat, k, runs, base_seed, c, opts);
            }
            py::dict d;
            d["k"] = r.k;
            d["rho"] = r.rho;
            d["consensus"] = to_array(r.consensus);
            d["runs"] = r.runs;
            return d;
        },
        py::arg("a"), py::arg("k"), py::arg("runs") = 10, py::arg("base_seed") = 0, py::arg("threads") = 1,
        py::arg("mode") = "paper");

    m.def(
        "select_rank",
        [](const Array& a, std::size_t k_min, std::size_t k_max, std::size_t runs, std::uint64_t base_seed,
           std::size_t threads, const std::string& mode) {
            const Matrix mat = to_matrix(a);
            const NmfConfig c = make_config(500, 1e-4, mode, 0);
            ConsensusOptions opts;
            opts.threads = threads;
            RankSelection sel;
            {
                py::gil_scoped_release release;
                sel = select_rank(mat, k_min, k_max, runs, base_seed, c, opts);
            }
            return json_to_py(to_json(sel));
        },
        py::arg("a"), py::arg("k_min") = 2, py::arg("k_max") = 7, py::arg("runs") = 20,
        py::arg("base_seed") = 0, py::arg("threads") = 1, py::arg("mode") = "paper");

    m.def(
        "pick_rank",
        [](const std::vector<std::size_t>& ranks, const std::vector<double>& rhos) {
            return json_to_py(to_json(pick_rank(ranks, rhos)));
        },
        py::arg("ranks"), py::arg("rhos"));

    m.def(
        "classify_speed", [](double v) { return std::string(to_string(classify_speed(v))); },
        py::arg("speed_ms"));
    m.def(
        "season_of", [](int month) { return std::string(to_string(season_of(month))); }, py::arg("month"));

    m.def(
        "contribution_shares", [](const Array& w, const Array& h) {
            return contribution_shares(to_matrix(w), to_matrix(h));
        },
        py::arg("w"), py::arg("h"));

    m.def(
        "classify_evidence",
        [](double peak_speed_ms, double strong_wind_fraction, double winter_spring_share) {
            const FeatureLabel l = classify_evidence({peak_speed_ms, strong_wind_fraction, winter_spring_share});
            return py::make_tuple(std::string(to_string(l.verdict)), std::string(to_string(l.triggered_rule)));
        },
        py::arg("peak_speed_ms"), py::arg("strong_wind_fraction"), py::arg("winter_spring_share"));

    m.def(
        "validate",
        [](const std::string& observed, const std::string& reference, double tolerance) {
            const auto obs = parse_ratio_list(observed);
            const std::vector<std::pair<Pollutant, double>> pairs(obs.begin(), obs.end());
            return json_to_py(to_json(validate_against(pairs, parse_ratio_list(reference), tolerance)));
        },
        py::arg("observed"), py::arg("reference"), py::arg("tolerance") = default_validation_tolerance);

    m.def(
        "apportion_file",
        [](const std::string& path, const std::string& pollutant, std::size_t k, std::uint64_t seed,
           const std::string& mode) {
            ordered_json j;
            {
                py::gil_scoped_release release;
                const ParseResult parsed = parse_records_file(path);
                const Assembled a = assemble(parsed.rows, parse_pollutant(pollutant));
                const DataMatrix dm = a.data.fully_observed() ? a.data : impute(a.data);
                const WindTable winds(dm, a.winds);
                const FactorModel model = factorize(dm.values, k, make_config(500, 1e-4, mode, seed));
                j = to_json(apportion(model, dm, winds));
            }
            return json_to_py(j);
        },
        py::arg("path"), py::arg("pollutant"), py::arg("k"), py::arg("seed") = 0, py::arg("mode") = "paper",
        "Records CSV to an apportionment report (as a dict).");

    m.def(
        "gen_factors", [](std::size_t rows, std::size_t cols, std::size_t k_true, std::uint64_t seed) {
            auto [w, h] = gen_factors(rows, cols, k_true, seed);
            return py::make_tuple(to_array(w), to_array(h));
        },
        py::arg("m"), py::arg("n"), py::arg("k_true"), py::arg("seed") = 0);

    m.def(
        "synth",
        [](const std::string& preset, std::uint64_t seed, std::optional<double> noise) {
            Scenario sc;
            if (preset == "two-source") {
                sc = two_source_scenario(seed);
            } else if (preset == "clusters") {
                sc = cluster_scenario(seed);
            } else {
                throw Error(ErrorKind::domain, "unknown preset '" + preset + "'");
            }
            if (noise) {
                sc.noise_level = *noise;
            }
            return dataset_dict(gen_dataset(sc));
        },
        py::arg("preset") = "two-source", py::arg("seed") = 0, py::arg("noise") = py::none());

    m.def(
        "write_synth_csv",
        [](const std::string& path, const std::string& preset, std::uint64_t seed) {
            const Scenario sc = preset == "clusters" ? cluster_scenario(seed) : two_source_scenario(seed);
            const GeneratedDataset ds = gen_dataset(sc);
            std::ofstream out(path, std::ios::binary);
            if (!out) {
                throw Error(ErrorKind::io, "cannot open " + path);
            }
            write_records_csv(out, ds.data, ds.winds);
        },
        py::arg("path"), py::arg("preset") = "two-source", py::arg("seed") = 0);
}
