#pragma once

#include "mfgsens/grid.hpp"
#include "mfgsens/mfg_solver.hpp"
#include "mfgsens/model.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mfgsens {

/// Everything a subcommand needs; filled from a flat `key = value` file.
struct RunConfig {
    ModelParams params;
    Discretization disc;
    SolveOptions opts;
    double mass_tail_tol = 3e-3;
    int cascade_K = 3;
    std::vector<double> sweep_epsilons{0.02, 0.04, 0.08};
    double sweep_solve_tol = 1e-11;
    std::filesystem::path output_dir = "out";

    void validate() const;
};

/// Parses the config text. Unknown or repeated keys, malformed values and violated
/// invariants throw InvalidInput naming the key. Missing keys keep their defaults.
RunConfig parse_config(const std::string& text);

/// The keys parse_config accepts, in documentation order.
const std::vector<std::string>& config_keys();

struct SweepRender {
    std::map<std::string, std::string> files;  ///< file name -> bytes
    bool complete = true;
    double runtime_seconds = 0.0;
};

/// Runs the remainder study and renders its outputs without touching the file system.
/// Timing is kept out of `files` so repeated renders are byte-identical.
SweepRender render_sweep(const RunConfig& cfg, int threads, bool verbose);

/// Exit codes of run_cli.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitIO = 4;

/// Entry point of the command-line tool.
int run_cli(int argc, const char* const* argv);

}  // namespace mfgsens
