#include "doctest.h"

#include "cli.hpp"
#include "factorbreak/montecarlo.hpp"
#include "factorbreak/panel.hpp"

#include "support.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace factorbreak;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "factorbreak");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("factorbreak_cli_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string write_panel_file(const std::filesystem::path& dir, BreakType type, Index n, Index t, std::uint64_t seed) {
    DgpConfig cfg;
    cfg.n = n;
    cfg.t = t;
    cfg.break_type = type;
    cfg.rho = 0.5;
    cfg.seed = seed;
    const auto path = dir / "panel.csv";
    std::ofstream f(path);
    write_panel(f, gen_panel(cfg).panel);
    return path.string();
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("missing file is an input error naming the path") {
        const Outcome o = invoke({"test", "--data", "/nonexistent/panel.csv", "--no-cache"});
        CHECK(o.code == cli::kInputError);
        CHECK(o.err.find("/nonexistent/panel.csv") != std::string::npos);
    }

    TEST_CASE("malformed arguments are input errors") {
        CHECK(invoke({"test"}).code == cli::kInputError);
        CHECK(invoke({"bogus"}).code == cli::kInputError);
        const auto dir = scratch("args");
        const std::string data = write_panel_file(dir, BreakType::None, 20, 40, 1);
        CHECK(invoke({"test", "--data", data, "--r", "2", "--select", "icp1"}).code == cli::kInputError);
        CHECK(invoke({"test", "--data", data, "--test", "cusum"}).code == cli::kInputError);
        CHECK(invoke({"test", "--data", data, "--r", "2", "--test", "wwald", "--breaks", "2"}).code ==
              cli::kInputError);
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("test subcommand writes a report and a curve") {
        const auto dir = scratch("test");
        const std::string data = write_panel_file(dir, BreakType::None, 40, 80, 2);
        const std::string report = (dir / "report.json").string();
        const std::string curve = (dir / "curve.csv").string();
        const Outcome o = invoke({"test", "--data", data, "--test", "lr,lrm,wwald", "--cv-grid", "200", "--cv-reps", "100",
                                  "--seed", "4", "--out", report, "--curve-out", curve, "--no-cache", "--workers", "1"});
        INFO(o.err);
        REQUIRE(o.code == cli::kOk);
        std::ifstream in(report);
        const auto j = nlohmann::json::parse(in);
        CHECK(j["reports"].size() == 3);
        CHECK(j["data"]["T"] == 80);
        CHECK(j["data"]["N"] == 40);
        const auto& lr = j["reports"][0];
        CHECK(lr["test"] == "lr");
        CHECK(lr["critical_values"].contains("0.05"));
        CHECK(lr["reject"].contains("0.01"));
        CHECK(lr["curve"]["k"].size() == lr["curve"]["value"].size());
        std::ifstream c(curve);
        std::string header;
        std::getline(c, header);
        CHECK(header.rfind("k,lr", 0) == 0);
        CHECK(header.find("lrm") != std::string::npos);

        // Identical flags reproduce the report byte for byte.
        const std::string again = (dir / "again.json").string();
        REQUIRE(invoke({"test", "--data", data, "--test", "lr,lrm,wwald", "--cv-grid", "200", "--cv-reps", "100",
                        "--seed", "4", "--out", again, "--curve-out", curve, "--no-cache", "--workers", "1"})
                    .code == cli::kOk);
        std::ifstream a1(report), a2(again);
        std::stringstream s1, s2;
        s1 << a1.rdbuf();
        s2 << a2.rdbuf();
        auto strip = [](std::string s) {
            const auto pos = s.find("\"argv\"");
            const auto end = s.find(']', pos);
            return s.erase(pos, end - pos);
        };
        CHECK(strip(s1.str()) == strip(s2.str()));
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("fail-on-reject maps a detected break to status 2") {
        const auto dir = scratch("reject");
        const std::string data = write_panel_file(dir, BreakType::Diminishing, 200, 200, 3);
        const Outcome o = invoke({"test", "--data", data, "--r", "3", "--test", "lr", "--cv-grid", "200", "--cv-reps",
                                  "200", "--fail-on-reject", "--no-cache", "--workers", "1"});
        INFO(o.err);
        CHECK(o.code == cli::kRejected);
        const auto j = nlohmann::json::parse(o.out);
        const auto date = j["reports"][0]["break_dates"][0].get<int>();
        CHECK(std::abs(date - 100) <= 2);
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("simulate-cv is served from the cache on the second call") {
        const auto dir = scratch("cache");
        setenv("FACTORBREAK_CACHE_DIR", dir.c_str(), 1);
        const std::vector<std::string> args{"simulate-cv", "--family", "LR_var", "--r", "1", "--omega", "2",
                                            "--cv-grid", "200", "--cv-reps", "200", "--seed", "9"};
        const Outcome a = invoke(args);
        const Outcome b = invoke(args);
        REQUIRE(a.code == cli::kOk);
        REQUIRE(b.code == cli::kOk);
        const auto ja = nlohmann::json::parse(a.out);
        const auto jb = nlohmann::json::parse(b.out);
        CHECK_FALSE(ja["from_cache"].get<bool>());
        CHECK(jb["from_cache"].get<bool>());
        CHECK(ja["quantiles"] == jb["quantiles"]);
        const double q10 = ja["quantiles"]["0.10"].get<double>();
        const double q05 = ja["quantiles"]["0.05"].get<double>();
        const double q01 = ja["quantiles"]["0.01"].get<double>();
        CHECK(q10 <= q05);
        CHECK(q05 <= q01);
        CHECK(std::filesystem::exists(dir / "cv_tables.jsonl"));
        CHECK(invoke({"simulate-cv", "--family", "LR_var", "--r", "2", "--omega", "1,0,0,1", "--no-cache"}).code ==
              cli::kInputError);
        unsetenv("FACTORBREAK_CACHE_DIR");
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("factors subcommand") {
        const auto dir = scratch("factors");
        const std::string data = write_panel_file(dir, BreakType::None, 100, 100, 5);
        const std::string ghat = (dir / "ghat.csv").string();
        const Outcome o = invoke({"factors", "--data", data, "--ghat-out", ghat});
        REQUIRE(o.code == cli::kOk);
        const auto j = nlohmann::json::parse(o.out);
        CHECK(j["factors"]["r"] == 3);
        CHECK(load_panel(ghat).values.cols() == 3);
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("experiment subcommand") {
        const auto dir = scratch("experiment");
        const std::string table = (dir / "table.csv").string();
        const Outcome o = invoke({"experiment", "--n", "40", "--t", "50", "--reps", "3", "--cv-policy", "shared",
                                  "--cv-grid", "200", "--cv-reps", "200", "--table-out", table, "--workers", "1"});
        INFO(o.err);
        REQUIRE(o.code == cli::kOk);
        const auto j = nlohmann::json::parse(o.out);
        CHECK(j["completed"] == 3);
        CHECK(std::filesystem::exists(table));
        std::filesystem::remove_all(dir);
    }
}
