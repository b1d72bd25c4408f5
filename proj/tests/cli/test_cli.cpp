#include "cli.hpp"

#include "aqnmf/ingest.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using aqnmf::cli::run;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result call(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path workdir(const std::string& name)
{
    const char* base = std::getenv("AQNMF_TMP");
    fs::path dir = fs::path(base ? base : fs::temp_directory_path().string()) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string first_line(const fs::path& p)
{
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

nlohmann::json provenance_of_csv(const fs::path& p)
{
    const std::string line = first_line(p);
    const std::string tag = "# provenance: ";
    REQUIRE(line.rfind(tag, 0) == 0);
    return nlohmann::json::parse(line.substr(tag.size()));
}

fs::path small_dataset(const fs::path& dir, const std::string& seed = "7")
{
    const fs::path data = dir / "data.csv";
    const Result r = call({"synth", "--seed", seed, "--hours", "2000", "--output", data.string(), "--truth",
                           (dir / "truth.json").string()});
    REQUIRE(r.code == 0);
    return data;
}

} // namespace

TEST_CASE("apportion is byte-identical across invocations")
{
    const fs::path dir = workdir("determinism");
    const fs::path data = small_dataset(dir);
    const auto a = call({"apportion", "--input", data.string(), "--pollutant", "NO2", "--k", "2", "--seed", "7",
                         "--output", (dir / "r1.json").string()});
    const auto b = call({"apportion", "--input", data.string(), "--pollutant", "NO2", "--k", "2", "--seed", "7",
                         "--output", (dir / "r2.json").string()});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(slurp(dir / "r1.json") == slurp(dir / "r2.json"));

    const auto j = nlohmann::json::parse(slurp(dir / "r1.json"));
    CHECK(j["provenance"]["seed"] == 7);
    CHECK(j["provenance"]["input_sha256"] == aqnmf::cli::sha256_file(data.string()));
    CHECK(j["provenance"]["command"] == "apportion");
    CHECK(j["k"] == 2);

    const auto truth = nlohmann::json::parse(slurp(dir / "truth.json"));
    CHECK(truth["labels"] == nlohmann::json::array({"Domestic", "Transboundary"}));
}

TEST_CASE("stdout report and CSV format")
{
    const fs::path dir = workdir("formats");
    const fs::path data = small_dataset(dir);
    const auto json_out = call({"apportion", "--input", data.string(), "--pollutant", "NO2", "--k", "2", "--seed", "1"});
    REQUIRE(json_out.code == 0);
    CHECK(nlohmann::json::parse(json_out.out)["features"].size() == 2);

    const auto csv = call({"apportion", "--input", data.string(), "--pollutant", "NO2", "--k", "2", "--seed", "1",
                           "--format", "csv", "--output", (dir / "r.csv").string()});
    REQUIRE(csv.code == 0);
    CHECK(provenance_of_csv(dir / "r.csv")["format"] == "csv");
    CHECK(slurp(dir / "r.csv").find("NO2,transboundary_ratio,") != std::string::npos);
}

TEST_CASE("apportion with rank selection records the rho table")
{
    const fs::path dir = workdir("apportion_range");
    const fs::path data = small_dataset(dir);
    const auto r = call({"apportion", "--input", data.string(), "--pollutant", "NO2", "--k-range", "2..4", "--runs",
                         "4", "--seed", "2", "--threads", "2", "--output", (dir / "r.json").string()});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "r.json"));
    CHECK(j["rank_selection"]["rho"].size() == 3);
    CHECK(j["provenance"]["k_range"] == nlohmann::json::array({2, 4}));
    CHECK(j["provenance"]["runs"] == 4);
}

TEST_CASE("ingest writes a canonical matrix with provenance")
{
    const fs::path dir = workdir("ingest");
    const fs::path data = small_dataset(dir);
    const std::string before = aqnmf::cli::sha256_file(data.string());
    const auto r = call({"ingest", "--input", data.string(), "--pollutant", "no2", "--output",
                         (dir / "m.csv").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("hours 2000, stations 14") != std::string::npos);
    CHECK(aqnmf::cli::sha256_file(data.string()) == before);
    const auto prov = provenance_of_csv(dir / "m.csv");
    CHECK(prov["input_sha256"] == before);

    std::ifstream in(dir / "m.csv");
    const aqnmf::DataMatrix dm = aqnmf::read_matrix_csv(in, aqnmf::Pollutant::NO2);
    CHECK(dm.hours() == 2000);

    const auto same = call({"ingest", "--input", data.string(), "--pollutant", "NO2", "--output", data.string()});
    CHECK(same.code == 1);
    CHECK(aqnmf::cli::sha256_file(data.string()) == before);
}

TEST_CASE("factorize, select-rank and windrose artifacts")
{
    const fs::path dir = workdir("artifacts");
    const fs::path data = small_dataset(dir);
    REQUIRE(call({"ingest", "--input", data.string(), "--pollutant", "NO2", "--output", (dir / "m.csv").string()})
                .code == 0);

    const auto f = call({"factorize", "--matrix", (dir / "m.csv").string(), "--pollutant", "NO2", "--k", "2",
                         "--seed", "3", "--mode", "plain", "--output-dir", (dir / "fac").string()});
    REQUIRE(f.code == 0);
    CHECK(fs::exists(dir / "fac" / "W.csv"));
    CHECK(fs::exists(dir / "fac" / "H.csv"));
    const auto meta = nlohmann::json::parse(slurp(dir / "fac" / "model.json"));
    CHECK(meta["provenance"]["mode"] == "plain");
    CHECK(meta["stations"].size() == 14);
    CHECK(provenance_of_csv(dir / "fac" / "H.csv")["k"] == 2);

    const auto s = call({"select-rank", "--matrix", (dir / "m.csv").string(), "--pollutant", "NO2", "--k-min", "2",
                         "--k-max", "4", "--runs", "3", "--seed", "1", "--output", (dir / "sel.json").string()});
    REQUIRE(s.code == 0);
    CHECK(s.out.rfind("k,rho\n2,", 0) == 0);
    CHECK(s.out.find("chosen k = ") != std::string::npos);
    CHECK(nlohmann::json::parse(slurp(dir / "sel.json"))["provenance"]["k_range"][1] == 4);

    const auto svg = call({"windrose", "--input", data.string(), "--pollutant", "NO2", "--k", "2", "--format", "svg",
                           "--seed", "1", "--output-dir", (dir / "rose").string()});
    REQUIRE(svg.code == 0);
    const std::string text = slurp(dir / "rose" / "windrose_NMF2.svg");
    CHECK(text.rfind("<!-- provenance: ", 0) == 0);
    CHECK(text.find("<svg") != std::string::npos);

    const auto conc = call({"windrose", "--input", data.string(), "--pollutant", "NO2", "--weighting",
                            "concentration", "--output-dir", (dir / "rose").string()});
    REQUIRE(conc.code == 0);
    CHECK(slurp(dir / "rose" / "windrose_concentration.csv").find("class_totals") != std::string::npos);
}

TEST_CASE("validate reproduces the reference comparison")
{
    const auto r = call({"validate", "--observed", "no2=75.9,so2=26.9,o3=22.7", "--reference", "no2=70,so2=27,o3=25"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("NO2,70,75.9,5.9,pass") != std::string::npos);
    CHECK(r.out.find("SO2,27,26.9,0.1,pass") != std::string::npos);
    CHECK(r.out.find("O3,25,22.7,2.3,pass") != std::string::npos);
    CHECK(r.out.find("all within") != std::string::npos);

    const fs::path dir = workdir("validate");
    const fs::path data = small_dataset(dir);
    REQUIRE(call({"apportion", "--input", data.string(), "--pollutant", "NO2", "--k", "2", "--seed", "1", "--output",
                  (dir / "base.json").string()})
                .code == 0);
    const auto base = nlohmann::json::parse(slurp(dir / "base.json"));
    std::vector<std::string> args{"validate", "--reference", "no2=70,so2=27,o3=25", "--output",
                                  (dir / "v.json").string()};
    for (const auto& [pol, dom] : std::vector<std::pair<std::string, double>>{{"NO2", 75.9}, {"SO2", 26.9}, {"O3", 22.7}}) {
        auto j = base;
        j["pollutant"] = pol;
        j["ratios"]["domestic"] = dom;
        j["ratios"]["transboundary"] = 100.0 - dom;
        const fs::path p = dir / (pol + ".json");
        std::ofstream(p) << j.dump();
        args.push_back("--report");
        args.push_back(p.string());
    }
    const auto v = call(args);
    REQUIRE(v.code == 0);
    const auto vj = nlohmann::json::parse(slurp(dir / "v.json"));
    CHECK(vj["all_pass"] == true);
    CHECK(vj["rows"].size() == 3);

    const auto fail = call({"validate", "--observed", "pm10=50", "--reference", "pm10=40"});
    CHECK(fail.code == 0);
    CHECK(fail.out.find("PM10,40,50,10,fail") != std::string::npos);
}

TEST_CASE("exit codes")
{
    CHECK(call({}).code == 1);
    CHECK(call({"bogus"}).code == 1);
    CHECK(call({"--help"}).code == 0);
    CHECK(call({"synth"}).code == 1);
    CHECK(call({"validate", "--reference", "no2=70"}).code == 1);

    const fs::path dir = workdir("exit_codes");
    const fs::path data = small_dataset(dir);
    CHECK(call({"apportion", "--input", data.string(), "--pollutant", "NO2", "--k", "2", "--k-range", "2..4"}).code == 1);
    CHECK(call({"apportion", "--input", data.string(), "--pollutant", "NO2", "--k-range", "2-4"}).code == 1);
    CHECK(call({"apportion", "--input", data.string(), "--pollutant", "SO2", "--k", "2"}).code == 2);
    CHECK(call({"apportion", "--input", data.string(), "--pollutant", "NO2", "--k", "14"}).code == 2);
    CHECK(call({"validate", "--observed", "no2=70", "--reference", "so2=27"}).code == 2);

    const fs::path bad = dir / "bad.csv";
    std::ofstream(bad) << "time,where,what\n";
    CHECK(call({"ingest", "--input", bad.string(), "--pollutant", "NO2", "--output", (dir / "x.csv").string()}).code == 2);

    const fs::path zeros = dir / "zeros.csv";
    {
        std::ofstream z(zeros);
        z << aqnmf::record_header << '\n';
        for (int h = 0; h < 10; ++h) {
            for (const char* s : {"AA", "BB", "CC"}) {
                z << "2010-01-01T0" << h % 10 << ":00," << s << ",NO2,0,90,3\n";
            }
        }
    }
    const auto numerical = call({"apportion", "--input", zeros.string(), "--pollutant", "NO2", "--k", "2"});
    CHECK(numerical.code == 3);
    CHECK(numerical.err.find("error") != std::string::npos);
}

TEST_CASE("seed defaults are printed")
{
    const fs::path dir = workdir("seed");
    const auto d = call({"synth", "--hours", "50", "--output", (dir / "a.csv").string()});
    REQUIRE(d.code == 0);
    CHECK(d.err.find("seed = 0 (default)") != std::string::npos);
    CHECK(provenance_of_csv(dir / "a.csv")["seed"] == 0);

    setenv("AQNMF_SEED", "41", 1);
    const auto e = call({"synth", "--hours", "50", "--output", (dir / "b.csv").string()});
    unsetenv("AQNMF_SEED");
    REQUIRE(e.code == 0);
    CHECK(e.err.find("seed = 41 (from AQNMF_SEED)") != std::string::npos);
    CHECK(provenance_of_csv(dir / "b.csv")["seed"] == 41);

    setenv("AQNMF_SEED", "abc", 1);
    CHECK(call({"synth", "--hours", "50", "--output", (dir / "c.csv").string()}).code == 1);
    unsetenv("AQNMF_SEED");
}
