#pragma once

#include "mfgsens/grid.hpp"
#include "mfgsens/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mfgsens {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct Check {
    int id = 0;
    std::string name;
    std::function<CheckResult()> run;
};

/// Acceptance suite, one entry per criterion (ids 1..9). Determinism of the sweep output is
/// checked one level up, where the report is rendered.
const std::vector<Check>& acceptance_checks();

/// k-th derivative (k in 1..4) of a row-valued map at `at` by central differences with
/// Richardson extrapolation over steps h, h/2, h/4, h/8.
Row richardson_derivative(const std::function<Row(double)>& f, int k, double at, double h);

/// Sup error of solve_forward_fp against the exact image-pair heat solution started at
/// t0 = 0.25 from x0 = 3 (sigma = 1, L = 12, T = 1, Nx = Nt = N).
double image_pair_error(int N);

/// Coarse-grid comparison of the Duhamel oracle (image-pair problem without drift, and a
/// drift 0.7 plus localized source problem) against the exact solution and solve_forward_fp.
/// Errors are taken over x <= L/2, away from the truncation boundary the oracle ignores.
struct DuhamelComparison {
    double fp_vs_exact = 0.0;
    double duhamel_vs_exact = 0.0;
    double fp_vs_duhamel_drift = 0.0;
};
DuhamelComparison duhamel_comparison(int N);

/// Sup error of solve_backward_parabolic on an affine-in-x problem against its two-ODE
/// reduction integrated by fine RK4 (sigma = 1, r = 0.3, L = 12, T = 1, Nx = Nt = N).
double affine_oracle_error(int N);

/// Sup duality residual on a converged linearized solve around the default model.
double duality_residual_sup(int N);

/// Sources used by the duality and energy probes.
Field probe_Psi(const Discretization& disc);
Field probe_Phi(const Discretization& disc);

}  // namespace mfgsens
