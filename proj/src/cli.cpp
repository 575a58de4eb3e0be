#include "mfgsens/cli.hpp"

#include "mfgsens/cascade.hpp"
#include "mfgsens/diagnostics.hpp"
#include "mfgsens/errors.hpp"
#include "mfgsens/io.hpp"
#include "mfgsens/sensitivity.hpp"
#include "mfgsens/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>

namespace mfgsens {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
        return s.substr(1, s.size() - 2);
    return s;
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
        throw InvalidInput(key + ": expected a number, got '" + v + "'");
    return out;
}

int to_int(const std::string& key, const std::string& v) {
    int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
        throw InvalidInput(key + ": expected an integer, got '" + v + "'");
    return out;
}

// "[a, b, c]" or "a, b, c"; "[]" is the empty list
std::vector<double> to_list(const std::string& key, std::string v) {
    if (!v.empty() && v.front() == '[') {
        if (v.back() != ']') throw InvalidInput(key + ": unterminated list");
        v = v.substr(1, v.size() - 2);
    }
    std::vector<double> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table = {
        {"params.sigma", [](RunConfig& c, auto& k, auto& v) { c.params.sigma = to_double(k, v); }},
        {"params.r", [](RunConfig& c, auto& k, auto& v) { c.params.r = to_double(k, v); }},
        {"params.T", [](RunConfig& c, auto& k, auto& v) { c.params.T = to_double(k, v); }},
        {"params.epsilon", [](RunConfig& c, auto& k, auto& v) { c.params.epsilon = to_double(k, v); }},
        {"params.xi.family", [](RunConfig& c, auto&, auto& v) { c.params.xi.family = parse_time_family(unquote(v)); }},
        {"params.xi.params", [](RunConfig& c, auto& k, auto& v) { c.params.xi.params = to_list(k, v); }},
        {"params.M.family", [](RunConfig& c, auto&, auto& v) { c.params.M.family = parse_function_family(unquote(v)); }},
        {"params.M.params", [](RunConfig& c, auto& k, auto& v) { c.params.M.params = to_list(k, v); }},
        {"params.uT.family", [](RunConfig& c, auto&, auto& v) { c.params.uT.family = parse_function_family(unquote(v)); }},
        {"params.uT.params", [](RunConfig& c, auto& k, auto& v) { c.params.uT.params = to_list(k, v); }},
        {"params.mass_tail_tol", [](RunConfig& c, auto& k, auto& v) { c.mass_tail_tol = to_double(k, v); }},
        {"disc.L", [](RunConfig& c, auto& k, auto& v) { c.disc.L = to_double(k, v); }},
        {"disc.Nx", [](RunConfig& c, auto& k, auto& v) { c.disc.Nx = to_int(k, v); }},
        {"disc.Nt", [](RunConfig& c, auto& k, auto& v) { c.disc.Nt = to_int(k, v); }},
        {"opts.tol", [](RunConfig& c, auto& k, auto& v) { c.opts.tol = to_double(k, v); }},
        {"opts.max_iter", [](RunConfig& c, auto& k, auto& v) { c.opts.max_iter = to_int(k, v); }},
        {"opts.damping", [](RunConfig& c, auto& k, auto& v) { c.opts.damping = to_double(k, v); }},
        {"cascade.K", [](RunConfig& c, auto& k, auto& v) { c.cascade_K = to_int(k, v); }},
        {"sweep.epsilons", [](RunConfig& c, auto& k, auto& v) { c.sweep_epsilons = to_list(k, v); }},
        {"sweep.solve_tol", [](RunConfig& c, auto& k, auto& v) { c.sweep_solve_tol = to_double(k, v); }},
        {"output.dir", [](RunConfig& c, auto&, auto& v) { c.output_dir = unquote(v); }},
    };
    return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, fn] : setters()) k.push_back(name);
        return k;
    }();
    return keys;
}

void RunConfig::validate() const {
    params.validate();
    disc.validate();
    if (std::abs(disc.T - params.T) > 1e-12 * params.T) throw InvalidInput("disc.T differs from params.T");
    if (!(mass_tail_tol > 0.0 && mass_tail_tol < 1.0))
        throw InvalidInput("params.mass_tail_tol must lie in (0, 1)");
    params.validate(disc, mass_tail_tol);
    opts.validate();
    if (cascade_K < 0 || cascade_K > kMaxDerivativeOrder) throw InvalidInput("cascade.K must lie in [0, 12]");
    validate_epsilons(sweep_epsilons);
    if (!(sweep_solve_tol > 0.0)) throw InvalidInput("sweep.solve_tol must be > 0");
    if (output_dir.empty()) throw InvalidInput("output.dir must not be empty");
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw InvalidInput("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        const auto& table = setters();
        const auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == key; });
        if (it == table.end()) throw InvalidInput("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (!seen.insert(key).second) throw InvalidInput("config key '" + key + "' given twice");
        it->second(cfg, key, value);
    }
    cfg.disc.T = cfg.params.T;
    cfg.validate();
    return cfg;
}

namespace {

std::string csv_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json nan_to_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json series_json(const DiagnosticSeries& s) {
    json j{{"name", s.name}, {"t", s.times}, {"value", s.values}};
    if (s.total) j["total"] = *s.total;
    return j;
}

std::function<void(int, double)> progress_printer(bool verbose) {
    if (!verbose) return {};
    static std::mutex mu;
    return [](int it, double res) {
        std::lock_guard<std::mutex> lock(mu);
        std::printf("%d,%.6e\n", it, res);
        std::fflush(stdout);
    };
}

json timing_json(const std::string& kind, double seconds) {
    return json{{"schema_version", kSchemaVersion}, {"kind", kind + "_timing"}, {"runtime_seconds", seconds}};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_solve(const RunConfig& cfg, bool verbose) {
    const auto start = std::chrono::steady_clock::now();
    SolveOptions opts = cfg.opts;
    opts.on_iteration = progress_printer(verbose);
    const MFGSolution s = solve_mfg(cfg.params, cfg.disc, opts);
    const fs::path dir = cfg.output_dir / "solve";
    fs::create_directories(dir);
    write_field(dir / "u.csv", s.u);
    write_field(dir / "m.csv", s.m);
    write_field(dir / "F.csv", s.F);
    const MassMoment mm = mass_and_moment(s.m, cfg.disc);
    std::ostringstream diag;
    write_series_csv(diag, {mm.mass, mm.moment, mm.l1});
    write_text(dir / "diagnostics.csv", diag.str());
    const json summary{{"schema_version", kSchemaVersion},
                       {"kind", "mfg_solution"},
                       {"params", to_json(cfg.params)},
                       {"disc", to_json(cfg.disc)},
                       {"opts", to_json(cfg.opts)},
                       {"iterations", s.iterations},
                       {"residual", s.residual},
                       {"history", s.history},
                       {"eta", s.eta},
                       {"mass", series_json(mm.mass)},
                       {"density_check", check_density(s.m).empty() ? "ok" : check_density(s.m)},
                       {"norms", {{"u", to_json(discrete_norms(s.u))}, {"m", to_json(discrete_norms(s.m))}}},
                       {"files", {"u.csv", "m.csv", "F.csv", "diagnostics.csv"}}};
    write_text(dir / "summary.json", dump(summary));
    write_text(dir / "timing.json", dump(timing_json("solve", seconds_since(start))));
    std::printf("solve: %d iterations, residual %.3e -> %s\n", s.iterations, s.residual, dir.string().c_str());
    return kExitOk;
}

int cmd_cascade(const RunConfig& cfg, bool verbose) {
    const auto start = std::chrono::steady_clock::now();
    SolveOptions opts = cfg.opts;
    opts.on_iteration = progress_printer(verbose);
    const TaylorTable table = build_cascade(cfg.params, cfg.disc, opts, cfg.cascade_K);
    const fs::path dir = cfg.output_dir / "cascade";
    write_taylor_table(table, dir);
    write_text(dir / "timing.json", dump(timing_json("cascade", seconds_since(start))));
    std::printf("cascade: K=%d -> %s\n", table.K, dir.string().c_str());
    for (int k = 0; k <= table.K; ++k)
        std::printf("  k=%d sup|u|=%.6e sup|m|=%.6e\n", k, sup_abs(table.u[k]), sup_abs(table.m[k]));
    return kExitOk;
}

}  // namespace

SweepRender render_sweep(const RunConfig& cfg, int threads, bool verbose) {
    SolveOptions opts = cfg.opts;
    opts.on_iteration = progress_printer(verbose);
    StudyOptions study;
    study.threads = threads;
    study.solve_tol = cfg.sweep_solve_tol;
    const SensitivityReport rep =
        remainder_study(cfg.params, cfg.disc, opts, cfg.sweep_epsilons, cfg.cascade_K, study);

    json errors = json::array();
    std::map<std::string, std::string> csv{{"u", "k,epsilon,norm,error\n"}, {"m", "k,epsilon,norm,error\n"}};
    for (const auto& [key, value] : rep.errors) {
        const auto& [field, k, e, norm] = key;
        const double eps = rep.epsilons[static_cast<std::size_t>(e)];
        errors.push_back({{"field", field}, {"k", k}, {"epsilon", eps}, {"norm", norm}, {"error", value}});
        csv[field] += std::to_string(k) + "," + csv_number(eps) + "," + norm + "," + csv_number(value) + "\n";
    }
    json slopes = json::array();
    for (const auto& [key, value] : rep.slopes) {
        const auto& [field, k, norm] = key;
        slopes.push_back({{"field", field},
                          {"k", k},
                          {"norm", norm},
                          {"slope", nan_to_null(value)},
                          {"expected", k + 1},
                          {"points", rep.fit_points.at(key)}});
    }
    const json report{{"schema_version", kSchemaVersion},
                      {"kind", "sensitivity_report"},
                      {"params", to_json(cfg.params)},
                      {"disc", to_json(cfg.disc)},
                      {"opts", to_json(cfg.opts)},
                      {"solve_tol", cfg.sweep_solve_tol},
                      {"K", cfg.cascade_K},
                      {"epsilons", rep.epsilons},
                      {"orders", rep.orders},
                      {"noise_floor", rep.noise_floor},
                      {"errors", errors},
                      {"slopes", slopes},
                      {"coefficient_sup_norms", rep.coefficient_sup_norms},
                      {"log_epsilon0", rep.log_epsilon0},
                      {"epsilon0", std::exp(rep.log_epsilon0)},
                      {"complete", rep.complete},
                      {"failure", rep.failure},
                      {"files", {"errors_u.csv", "errors_m.csv"}}};
    SweepRender out;
    out.files["report.json"] = dump(report);
    out.files["errors_u.csv"] = csv["u"];
    out.files["errors_m.csv"] = csv["m"];
    out.complete = rep.complete;
    out.runtime_seconds = rep.runtime_seconds;
    return out;
}

namespace {

int cmd_sweep(const RunConfig& cfg, int threads, bool verbose) {
    const SweepRender r = render_sweep(cfg, threads, verbose);
    const fs::path dir = cfg.output_dir / "sweep";
    fs::create_directories(dir);
    for (const auto& [name, bytes] : r.files) write_text(dir / name, bytes);
    write_text(dir / "timing.json", dump(timing_json("sweep", r.runtime_seconds)));
    const json report = json::parse(r.files.at("report.json"));
    for (const auto& s : report.at("slopes")) {
        if (s.at("norm") != "sup_val") continue;
        const std::string slope = s.at("slope").is_null() ? "n/a" : csv_number(s.at("slope").get<double>());
        std::printf("  %s k=%d slope %s (expected %d)\n", s.at("field").get<std::string>().c_str(),
                    s.at("k").get<int>(), slope.c_str(), s.at("expected").get<int>());
    }
    if (!r.complete) {
        std::fprintf(stderr, "sweep incomplete: %s\n", report.at("failure").get<std::string>().c_str());
        return kExitDivergence;
    }
    std::printf("sweep -> %s\n", dir.string().c_str());
    return kExitOk;
}

int cmd_oracle(const RunConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const fs::path dir = cfg.output_dir / "oracle";
    fs::create_directories(dir);
    std::string duh = "N,fp_vs_exact,duhamel_vs_exact,fp_vs_duhamel_drift\n";
    json duh_rows = json::array();
    for (int N : {25, 50, 100}) {
        const DuhamelComparison c = duhamel_comparison(N);
        duh += std::to_string(N) + "," + csv_number(c.fp_vs_exact) + "," + csv_number(c.duhamel_vs_exact) +
               "," + csv_number(c.fp_vs_duhamel_drift) + "\n";
        duh_rows.push_back({{"N", N},
                            {"fp_vs_exact", c.fp_vs_exact},
                            {"duhamel_vs_exact", c.duhamel_vs_exact},
                            {"fp_vs_duhamel_drift", c.fp_vs_duhamel_drift}});
    }
    std::string aff = "N,sup_error\n";
    json aff_rows = json::array();
    for (int N : {50, 100, 200}) {
        const double e = affine_oracle_error(N);
        aff += std::to_string(N) + "," + csv_number(e) + "\n";
        aff_rows.push_back({{"N", N}, {"sup_error", e}});
    }
    write_text(dir / "duhamel.csv", duh);
    write_text(dir / "affine_hjb.csv", aff);
    const json summary{{"schema_version", kSchemaVersion},
                       {"kind", "oracle_comparison"},
                       {"duhamel", duh_rows},
                       {"affine_hjb", aff_rows},
                       {"files", {"duhamel.csv", "affine_hjb.csv"}}};
    write_text(dir / "oracle.json", dump(summary));
    write_text(dir / "timing.json", dump(timing_json("oracle", seconds_since(start))));
    std::fputs(duh.c_str(), stdout);
    std::fputs(aff.c_str(), stdout);
    return kExitOk;
}

int cmd_check(const RunConfig& cfg, int threads) {
    const fs::path dir = cfg.output_dir / "check";
    fs::create_directories(dir);
    json results = json::array();
    bool all = true;
    auto emit = [&](int id, const CheckResult& r) {
        all = all && r.passed;
        std::printf("[%s] %d %s: %s\n", r.passed ? "PASS" : "FAIL", id, r.name.c_str(), r.detail.c_str());
        std::fflush(stdout);
        results.push_back({{"id", id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    };
    for (const Check& c : acceptance_checks()) emit(c.id, c.run());

    CheckResult det{"sweep_determinism", false, ""};
    try {
        const int n = std::max(threads, 4);
        const SweepRender a = render_sweep(cfg, n, false);
        const SweepRender b = render_sweep(cfg, n, false);
        det.passed = a.files == b.files;
        det.detail = "threads=" + std::to_string(n) + (det.passed ? " identical" : " outputs differ");
    } catch (const std::exception& ex) {
        det.detail = std::string("exception: ") + ex.what();
    }
    emit(10, det);
    const json summary{{"schema_version", kSchemaVersion}, {"kind", "check_results"}, {"all_passed", all}, {"checks", results}};
    write_text(dir / "check.json", dump(summary));
    return all ? kExitOk : kExitCheckFailed;
}

// Every data line of a CSV must carry the header's column count; numeric columns must parse.
std::size_t validate_csv(const fs::path& path) {
    std::istringstream in(read_text(path));
    std::string header;
    if (!std::getline(in, header) || header.empty()) throw std::ios_base::failure(path.string() + ": empty csv");
    const auto cols = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1 != cols)
            throw std::ios_base::failure(path.string() + ": ragged row " + std::to_string(rows + 2));
        ++rows;
    }
    return rows;
}

int cmd_report(const RunConfig& cfg) {
    const fs::path root = cfg.output_dir;
    if (!fs::is_directory(root)) throw std::ios_base::failure("no output directory " + root.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path() != root / "report.json") files.push_back(e.path());
    std::sort(files.begin(), files.end());

    json merged{{"schema_version", kSchemaVersion}, {"kind", "merged_report"}};
    json inventory = json::array();
    for (const fs::path& f : files) {
        const std::string rel = fs::relative(f, root).generic_string();
        if (f.extension() == ".json") {
            json j;
            try {
                j = json::parse(read_text(f));
            } catch (const json::parse_error& ex) {
                throw std::ios_base::failure(rel + ": " + ex.what());
            }
            if (!j.contains("schema_version") || j.at("schema_version") != kSchemaVersion)
                throw std::ios_base::failure(rel + ": missing or unsupported schema_version");
            if (f.filename() == "timing.json") continue;
            merged[rel] = std::move(j);
            inventory.push_back({{"file", rel}, {"type", "json"}});
        } else if (f.extension() == ".csv") {
            inventory.push_back({{"file", rel}, {"type", "csv"}, {"rows", validate_csv(f)}});
        }
    }
    // timings are merged last and apart from the deterministic payload
    json timings = json::object();
    for (const fs::path& f : files)
        if (f.filename() == "timing.json")
            timings[fs::relative(f, root).generic_string()] = json::parse(read_text(f)).at("runtime_seconds");
    merged["files"] = inventory;
    merged["timings"] = timings;
    write_text(root / "report.json", dump(merged));
    std::printf("report: %zu files parsed -> %s\n", files.size(), (root / "report.json").string().c_str());
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Mean-field game of production: solver, epsilon-Taylor cascade and remainder study"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    std::string out_dir;
    bool verbose = false;
    int threads = 1;
    app.add_option("--config", config_path, "flat key = value config file");
    app.add_option("--out", out_dir, "output directory (overrides output.dir)");
    app.add_flag("--verbose", verbose, "print iter,residual lines");
    app.add_option("--threads", threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
    const std::vector<std::pair<std::string, std::string>> subs = {
        {"solve", "solve the coupled system at params.epsilon"},
        {"cascade", "Taylor coefficients at epsilon = 0 up to cascade.K"},
        {"sweep", "Taylor remainder study over sweep.epsilons"},
        {"oracle", "Duhamel and affine-HJB oracle comparisons"},
        {"check", "acceptance suite"},
        {"report", "merge and re-parse every output under the output directory"},
    };
    for (const auto& [name, help] : subs) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    RunConfig cfg;
    try {
        cfg = config_path.empty() ? parse_config("") : parse_config(read_text(config_path));
        if (!out_dir.empty()) cfg.output_dir = out_dir;
    } catch (const InvalidInput& ex) {
        std::fprintf(stderr, "config error: %s\n", ex.what());
        return kExitConfig;
    } catch (const std::ios_base::failure& ex) {
        std::fprintf(stderr, "i/o error: %s\n", ex.what());
        return kExitIO;
    }

    try {
        if (cmd == "solve") return cmd_solve(cfg, verbose);
        if (cmd == "cascade") return cmd_cascade(cfg, verbose);
        if (cmd == "sweep") return cmd_sweep(cfg, threads, verbose);
        if (cmd == "oracle") return cmd_oracle(cfg);
        if (cmd == "check") return cmd_check(cfg, threads);
        return cmd_report(cfg);
    } catch (const Divergence& ex) {
        std::fprintf(stderr, "divergence: %s\n", ex.what());
        return kExitDivergence;
    } catch (const SingularSystem& ex) {
        std::fprintf(stderr, "solver failure: %s\n", ex.what());
        return kExitDivergence;
    } catch (const std::ios_base::failure& ex) {
        std::fprintf(stderr, "i/o error: %s\n", ex.what());
        return kExitIO;
    } catch (const fs::filesystem_error& ex) {
        std::fprintf(stderr, "i/o error: %s\n", ex.what());
        return kExitIO;
    } catch (const InvalidInput& ex) {
        std::fprintf(stderr, "config error: %s\n", ex.what());
        return kExitConfig;
    }
}

}  // namespace mfgsens
