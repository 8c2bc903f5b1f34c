#include "doctest.h"

#include "gsde/cli.hpp"
#include "gsde/config.hpp"
#include "gsde/output.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gsde;
namespace fs = std::filesystem;

TEST_CASE("config parsing and typed reads") {
    Config cfg = Config::parse_string("[simulate]\ndt = 1e-2\nn_traj = 8\nx0 = 1, -1\nproject_energy = yes\n# comment\n");
    auto& s = cfg.section("simulate");
    CHECK(s.get_double("dt") == 0.01);
    CHECK(s.get_int("n_traj") == 8);
    CHECK(s.get_list("x0") == std::vector<double>{1, -1});
    CHECK(s.get_bool("project_energy", false));
    CHECK(s.get_double("missing", 2.5) == 2.5);
    CHECK_THROWS_AS(s.get_double("absent"), ConfigError);
    CHECK_NOTHROW(cfg.reject_unread());
}

TEST_CASE("unknown keys are rejected") {
    CHECK_THROWS_AS(Config::parse_string("[verify]\nn_points = 10\ntypo = 1\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse_string("[nonsense]\na = 1\n"), ConfigError);
    // Known but unused keys are caught after the run has read what it needs.
    Config cfg = Config::parse_string("[verify]\nn_points = 10\nseed = 3\n");
    (void)cfg.section("verify").get_int("n_points");
    CHECK_THROWS_AS(cfg.reject_unread(), ConfigError);
}

TEST_CASE("bad values are reported") {
    Config cfg = Config::parse_string("[stationarity]\nn_bumps = 1.5\ntol = abc\nbox = 0 1; 2\n");
    CHECK_THROWS_AS(cfg.section("stationarity").get_int("n_bumps"), ConfigError);
    CHECK_THROWS_AS(cfg.section("stationarity").get_double("tol"), ConfigError);
    CHECK_THROWS_AS(cfg.section("stationarity").get_box("box", 2), ConfigError);
}

TEST_CASE("resolved text replays to the same values") {
    Config cfg = Config::parse_string("[simulate]\ndt = 0.1\n");
    (void)cfg.section("simulate").get_double("dt");
    (void)cfg.section("simulate").get_double("horizon", 1.0 / 3.0);
    Config again = Config::parse_string(cfg.resolved_text());
    CHECK(again.section("simulate").get_double("dt") == 0.1);
    CHECK(again.section("simulate").get_double("horizon") == 1.0 / 3.0);
}

TEST_CASE("shortest round-trip doubles") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1e-300) == "1e-300");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("report and trajectory CSV shapes") {
    CheckResult c{"jacobi", 1e-15, 1e-8, Vec(), true};
    const std::string rep = format_report("verify", {{"system", "rigid_body"}}, {c});
    CHECK(rep == "# verify\n# system = rigid_body\nname,residual,tolerance,pass\njacobi,1e-15,1e-08,true\n");

    EnsembleResult r;
    Trajectory t;
    t.steps = {0, 1};
    t.times = {0, 0.5};
    Vec a(2), b(2);
    a << 1, 2;
    b << 3, 4;
    t.states = {a, b};
    t.E = {0, 0};
    t.S = {0, 0};
    t.exit = ExitFlag::LeftBounds;
    r.trajectories.push_back(t);
    CHECK(format_trajectories(r, 2) == "traj_id,step,time,x1,x2,E,S,exit_flag\n0,0,0,1,2,0,0,0\n0,1,0.5,3,4,0,0,1\n");
}

namespace {

int run(const std::vector<std::string>& args, std::string* err_text = nullptr) {
    std::vector<const char*> argv = {"gsde"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (err_text) *err_text = err.str();
    return rc;
}

fs::path write_config(const std::string& name, const std::string& text) {
    const fs::path dir = fs::temp_directory_path() / "gsde_unit_cli";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

} // namespace

TEST_CASE("cli exit codes") {
    const fs::path out = fs::temp_directory_path() / "gsde_unit_cli" / "out";
    const auto good = write_config("good.ini", "[system]\nkind = rigid_body\n[verify]\nn_points = 20\n");
    CHECK(run({"verify", "--config", good.string(), "--out", out.string()}) == 0);
    CHECK(fs::exists(out / "report.csv"));
    CHECK(fs::exists(out / "config.resolved.ini"));

    const auto failing = write_config("fail.ini", "[system]\nkind = custom\ndim = 2\nJ12 = x1\nE = x2\nS = 0\n");
    CHECK(run({"verify", "--config", failing.string(), "--out", out.string()}) == 1);

    std::string err;
    const auto typo = write_config("typo.ini", "[system]\nkind = rigid_body\n[verify]\nn_pionts = 20\n");
    CHECK(run({"verify", "--config", typo.string(), "--out", out.string()}, &err) == 2);
    CHECK(err.rfind("error:", 0) == 0);

    CHECK(run({"verify", "--config", "/nonexistent/file.ini"}) == 2);
    CHECK(run({"frobnicate", "--config", good.string()}) == 2);
    CHECK(run({"--help"}) == 0);
    fs::remove_all(fs::temp_directory_path() / "gsde_unit_cli");
}
