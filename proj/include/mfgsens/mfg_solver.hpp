#pragma once

#include "mfgsens/grid.hpp"
#include "mfgsens/model.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mfgsens {

struct SolveOptions {
    double tol = 1e-8;
    int max_iter = 200;
    double damping = 0.5;
    /// Receives (iteration, residual) after every outer iteration when set.
    std::function<void(int, double)> on_iteration;

    void validate() const;
};

inline constexpr int kPolicyIterationCap = 30;

struct MFGSolution {
    Field u;
    Field m;
    Field F;
    Row eta;                        ///< Q(u_x m) per time node
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> history;    ///< residual per outer iteration
};

struct LinearizedSolution {
    Field w;
    Field mu;
    Row G;
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> history;
};

/// Result of the standalone HJB solve by policy iteration.
struct HJBSolution {
    Field u;
    Field F;
    int iterations = 0;
};

/// Solves v_t + (s^2/2) v_xx - r v + F^2 = 0 with F = A(t) - v_x / 2, v(., T) = u_T,
/// v(0, .) = 0 and v_x(L, .) = 0 by policy iteration (Newton on the quadratic term).
/// `F_guess`, if non-empty, seeds the first linearization.
HJBSolution solve_hjb(std::span<const double> A, const ModelParams& params,
                      const Discretization& disc, double inner_tol, const Field* F_guess = nullptr);

/// Coupled forward-backward system at params.epsilon by damped Picard iteration on (m, eta)
/// around policy-iteration HJB solves. Throws Divergence after opts.max_iter iterations.
MFGSolution solve_mfg(const ModelParams& params, const Discretization& disc,
                      const SolveOptions& opts);

/// Linear forward-backward system around `base` with sources Psi (backward) and Phi
/// (forward flux), solved as a Picard fixed point on (w, mu).
LinearizedSolution solve_linearized(const MFGSolution& base, const Field& Psi, const Field& Phi,
                                    double epsilon, const ModelParams& params,
                                    const Discretization& disc, const SolveOptions& opts);

/// Checks nonnegativity (>= -1e-10), mass <= 1 + 1e-8 and mass non-increasing within
/// `step_tol` per step. Returns an empty string on success, otherwise a description.
std::string check_density(const Field& m, double step_tol = 1e-8);

}  // namespace mfgsens
