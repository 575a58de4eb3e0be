#pragma once

#include "mfgsens/cascade.hpp"
#include "mfgsens/grid.hpp"
#include "mfgsens/mfg_solver.hpp"
#include "mfgsens/model.hpp"

#include <functional>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace mfgsens {

/// One-sided second-order stencils in epsilon from the base point 0.
/// k = 1: (-3 f0 + 4 f1 - f2) / (2 delta); k = 2: (2 f0 - 5 f1 + 4 f2 - f3) / delta^2.
double one_sided_derivative(int k, double delta, const std::function<double(double)>& f);

/// Stencil weights for one_sided_derivative (without the 1/delta^k factor).
std::vector<double> one_sided_weights(int k);

/// Finite-difference estimate of (d/de)^k (u, m) at epsilon = 0 from full solves.
std::pair<Field, Field> fd_derivative_oracle(const ModelParams& params, const Discretization& disc,
                                             const SolveOptions& opts, int k, double delta);

/// Least-squares slope of log(y) against log(x).
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

inline const std::vector<std::string>& norm_names() {
    static const std::vector<std::string> names{"sup_val", "sup_dx", "sup_dxx"};
    return names;
}

struct SensitivityReport {
    std::vector<double> epsilons;
    std::vector<int> orders;
    /// (field "u"|"m", k, epsilon index, norm name) -> remainder
    std::map<std::tuple<std::string, int, int, std::string>, double> errors;
    /// (field, k, norm name) -> fitted slope (NaN if fewer than 3 usable points)
    std::map<std::tuple<std::string, int, std::string>, double> slopes;
    /// Points per (field, k, norm) actually used in the fit.
    std::map<std::tuple<std::string, int, std::string>, int> fit_points;
    /// Remainders below this value are excluded from the fits.
    double noise_floor = 0.0;
    std::vector<double> coefficient_sup_norms;  ///< sup |u^(k)| per cascade order
    double log_epsilon0 = 0.0;
    double runtime_seconds = 0.0;
    bool complete = true;
    std::string failure;
};

/// Throws InvalidInput unless the list is finite, >= 0, strictly increasing and its positive
/// entries span a factor of at least 4.
void validate_epsilons(const std::vector<double>& epsilons);

struct StudyOptions {
    int threads = 1;
    /// The cascade is the exact epsilon-derivative of the discrete scheme, so the only floor
    /// under the remainders is solver noise. Study solves use min(opts.tol, solve_tol).
    double solve_tol = 1e-11;
};

/// opts with the tolerance tightened for a remainder study.
SolveOptions study_solve_options(const SolveOptions& opts, const StudyOptions& study);

/// Full solves at each epsilon compared against Taylor partial sums of `table`.
/// A solve failure yields complete = false and the partial report.
SensitivityReport remainder_study(const ModelParams& params, const Discretization& disc,
                                  const SolveOptions& opts, const std::vector<double>& epsilons,
                                  int K, const TaylorTable& table, const StudyOptions& study = {});

/// Convenience overload that builds the cascade first.
SensitivityReport remainder_study(const ModelParams& params, const Discretization& disc,
                                  const SolveOptions& opts, const std::vector<double>& epsilons,
                                  int K, const StudyOptions& study = {});

/// c = 4 (2 s^2 pi)^{-1/2}.
double heat_constant(double sigma);

/// C_0 = 384 c ln 2 (1 + |u_x^(0)|^2)^3.
double energy_constant(double sigma, double ux0_sup);

/// Natural log of the largest epsilon_0 with beta(epsilon_0) at the smallness bound, computed
/// from sup norms without leaving log space.
double estimate_log_epsilon0(double sigma, double T, double ux0_sup, double F0_sup);

/// Same, reading the sup norms off the order-0 fields.
double estimate_log_epsilon0(const Field& u0, const Field& F0, const ModelParams& params,
                             const Discretization& disc);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Exceptions are rethrown.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace mfgsens
