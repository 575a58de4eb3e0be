#include "mfgsens/cli.hpp"
#include "mfgsens/errors.hpp"
#include "mfgsens/io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

using namespace mfgsens;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "mfgsens");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

const char* kCoarse =
    "# coarse grid for tests\n"
    "disc.Nx = 60\n"
    "disc.Nt = 60\n"
    "cascade.K = 2\n"
    "sweep.epsilons = [0.02, 0.04, 0.08]\n";

}  // namespace

TEST_CASE("empty config gives the documented defaults") {
    const RunConfig c = parse_config("");
    CHECK(c.params.sigma == 1.0);
    CHECK(c.params.r == 0.3);
    CHECK(c.params.epsilon == 0.05);
    CHECK(c.disc.L == 12.0);
    CHECK(c.disc.Nx == 240);
    CHECK(c.disc.Nt == 240);
    CHECK(c.opts.tol == 1e-8);
    CHECK(c.opts.damping == 0.5);
    CHECK(c.cascade_K == 3);
    CHECK(c.sweep_epsilons == std::vector<double>{0.02, 0.04, 0.08});
}

TEST_CASE("every documented key parses") {
    const RunConfig c = parse_config(
        "params.sigma = 0.8\nparams.r = 0.2\nparams.T = 2\nparams.epsilon = 0.1\n"
        "params.xi.family = smooth_bump\nparams.xi.params = [0.5]\n"
        "params.M.family = \"gamma4_density\"\nparams.M.params = 0.8\n"
        "params.uT.family = smooth_terminal\nparams.uT.params = [2]\n"
        "params.mass_tail_tol = 0.01\n"
        "disc.L = 14\ndisc.Nx = 100\ndisc.Nt = 80\n"
        "opts.tol = 1e-9\nopts.max_iter = 50\nopts.damping = 0.7\n"
        "cascade.K = 4\nsweep.epsilons = 0.01, 0.02, 0.04\nsweep.solve_tol = 1e-12\n"
        "output.dir = results   # trailing comment\n");
    CHECK(c.params.sigma == 0.8);
    CHECK(c.params.T == 2.0);
    CHECK(c.disc.T == 2.0);
    CHECK(c.params.xi.family == TimeProfile::Family::smooth_bump);
    CHECK(c.params.xi.params == std::vector<double>{0.5});
    CHECK(c.params.uT.params == std::vector<double>{2.0});
    CHECK(c.disc.Nx == 100);
    CHECK(c.opts.max_iter == 50);
    CHECK(c.cascade_K == 4);
    CHECK(c.sweep_epsilons.size() == 3);
    CHECK(c.sweep_solve_tol == 1e-12);
    CHECK(c.output_dir == fs::path("results"));
    CHECK(config_keys().size() == 21);
}

TEST_CASE("config errors name the offending key or invariant") {
    CHECK_THROWS_WITH_AS(parse_config("params.sigma = -1\n"), doctest::Contains("sigma"), InvalidInput);
    CHECK_THROWS_WITH_AS(parse_config("params.bogus = 1\n"), doctest::Contains("params.bogus"), InvalidInput);
    CHECK_THROWS_WITH_AS(parse_config("disc.Nx = 10\ndisc.Nx = 12\n"), doctest::Contains("twice"), InvalidInput);
    CHECK_THROWS_WITH_AS(parse_config("disc.Nx = ten\n"), doctest::Contains("disc.Nx"), InvalidInput);
    CHECK_THROWS_WITH_AS(parse_config("disc.Nx = 4\n"), doctest::Contains("Nx"), InvalidInput);
    CHECK_THROWS_WITH_AS(parse_config("opts.damping = 0\n"), doctest::Contains("damping"), InvalidInput);
    CHECK_THROWS_WITH_AS(parse_config("sweep.epsilons = [0.02, 0.03]\n"), doctest::Contains("factor"), InvalidInput);
    CHECK_THROWS_WITH_AS(parse_config("params.xi.family = wobbly\n"), doctest::Contains("wobbly"), InvalidInput);
    CHECK_THROWS_WITH_AS(parse_config("disc.L = 6\n"), doctest::Contains("mass"), InvalidInput);
    CHECK_THROWS_WITH_AS(parse_config("cascade.K = 13\n"), doctest::Contains("cascade.K"), InvalidInput);
    CHECK_THROWS_AS(parse_config("just words\n"), InvalidInput);
}

TEST_CASE("exit codes") {
    TempDir tmp("mfgsens_cli_exit");
    CHECK(run({"--help"}) == kExitOk);
    CHECK(run({}) == kExitConfig);
    CHECK(run({"solve", "--threads", "0"}) == kExitConfig);

    const fs::path bad = tmp.path / "bad.cfg";
    write_text(bad, "params.sigma = -1\n");
    CHECK(run({"solve", "--config", bad.string()}) == kExitConfig);

    CHECK(run({"solve", "--config", (tmp.path / "missing.cfg").string()}) == kExitIO);

    const fs::path starve = tmp.path / "starve.cfg";
    write_text(starve, std::string(kCoarse) + "opts.max_iter = 2\n");
    CHECK(run({"solve", "--config", starve.string(), "--out", (tmp.path / "o").string()}) == kExitDivergence);

    // a regular file where the output directory should go
    const fs::path blocker = tmp.path / "blocker";
    write_text(blocker, "x");
    const fs::path coarse = tmp.path / "coarse.cfg";
    write_text(coarse, kCoarse);
    CHECK(run({"solve", "--config", coarse.string(), "--out", (blocker / "sub").string()}) == kExitIO);

    CHECK(run({"report", "--out", (tmp.path / "nothing_here").string()}) == kExitIO);
}

TEST_CASE("subcommands write re-parseable artifacts and report merges them") {
    TempDir tmp("mfgsens_cli_run");
    const fs::path cfg = tmp.path / "run.cfg";
    write_text(cfg, std::string(kCoarse) + "output.dir = " + (tmp.path / "out").string() + "\n");
    CHECK(run({"solve", "--config", cfg.string()}) == kExitOk);
    CHECK(run({"cascade", "--config", cfg.string()}) == kExitOk);
    CHECK(run({"sweep", "--config", cfg.string(), "--threads", "2"}) == kExitOk);
    CHECK(run({"report", "--config", cfg.string()}) == kExitOk);

    const fs::path out = tmp.path / "out";
    for (const char* f : {"solve/u.csv", "solve/m.csv", "solve/F.csv", "solve/summary.json", "solve/diagnostics.csv",
                          "cascade/manifest.json", "cascade/u_2.csv", "cascade/m_0.csv", "sweep/report.json",
                          "sweep/errors_u.csv", "sweep/errors_m.csv", "sweep/timing.json", "report.json"})
        CHECK_MESSAGE(fs::exists(out / f), f);

    const auto sweep = nlohmann::json::parse(read_text(out / "sweep/report.json"));
    CHECK(sweep.at("schema_version") == kSchemaVersion);
    CHECK_FALSE(sweep.contains("runtime_seconds"));
    int fitted = 0;
    for (const auto& s : sweep.at("slopes"))
        if (s.at("field") == "u" && s.at("norm") == "sup_val" && !s.at("slope").is_null()) ++fitted;
    CHECK(fitted == 3);

    const auto report = nlohmann::json::parse(read_text(out / "report.json"));
    CHECK(report.at("schema_version") == kSchemaVersion);
    CHECK(report.contains("solve/summary.json"));
    CHECK(report.contains("cascade/manifest.json"));
    CHECK(report.contains("sweep/report.json"));
    CHECK(report.at("files").size() >= 13);
    CHECK(report.at("timings").size() == 3);

    const auto solve = report.at("solve/summary.json");
    CHECK(solve.at("residual").get<double>() <= 1e-8);
    CHECK(solve.at("density_check") == "ok");

    // damage one csv: report refuses it
    write_text(out / "solve/m.csv", "t,x,value\n0,0\n");
    CHECK(run({"report", "--config", cfg.string()}) == kExitIO);
}

TEST_CASE("sweep output is byte-identical across runs with four workers") {
    TempDir tmp("mfgsens_cli_det");
    const fs::path cfg = tmp.path / "run.cfg";
    write_text(cfg, kCoarse);
    const fs::path a = tmp.path / "a", b = tmp.path / "b";
    REQUIRE(run({"sweep", "--config", cfg.string(), "--threads", "4", "--out", a.string()}) == kExitOk);
    REQUIRE(run({"sweep", "--config", cfg.string(), "--threads", "4", "--out", b.string()}) == kExitOk);
    for (const char* f : {"report.json", "errors_u.csv", "errors_m.csv"})
        CHECK(read_text(a / "sweep" / f) == read_text(b / "sweep" / f));
}

TEST_CASE("check subcommand passes on defaults") {
    TempDir tmp("mfgsens_cli_check");
    CHECK(run({"check", "--out", tmp.path.string()}) == kExitOk);
    const auto j = nlohmann::json::parse(read_text(tmp.path / "check/check.json"));
    CHECK(j.at("all_passed") == true);
    CHECK(j.at("checks").size() == 10);
}
