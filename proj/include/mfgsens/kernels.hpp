#pragma once

#include "mfgsens/grid.hpp"

#include <span>

namespace mfgsens {

/// a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i; lower[0] and upper[n-1] are ignored.
struct TridiagonalSystem {
    Row lower;
    Row diag;
    Row upper;
    Row rhs;
};

inline constexpr double kPivotThreshold = 1e-14;

/// Thomas algorithm; throws SingularSystem when a pivot falls below kPivotThreshold.
Row thomas_solve(const TridiagonalSystem& sys);

/// Boundary data for the backward solver. The left end is always Dirichlet.
struct BoundarySpec {
    enum class Right { dirichlet, neumann_zero };

    Row left;                          ///< Nt+1 values
    Right right = Right::neumann_zero;
    Row right_values;                  ///< Nt+1 values when right == dirichlet

    static BoundarySpec homogeneous(const Discretization& disc);
    static BoundarySpec dirichlet(Row left, Row right);
    static BoundarySpec left_only(Row left);

    void validate(const Discretization& disc) const;
};

/// Crank-Nicolson solve of v_t + (s^2/2) v_xx + drift v_x - zeroth v + source = 0, backward
/// from `terminal` at T. Drift uses centered differences unless the cell Peclet number
/// |drift| dx / (s^2/2) exceeds 2, where it switches to first-order upwinding.
Field solve_backward_parabolic(const Field& drift, double zeroth, const Field& source,
                               std::span<const double> terminal, const BoundarySpec& bc,
                               const Discretization& disc, double sigma);

/// Crank-Nicolson solve of mu_t = (s^2/2) mu_xx + (drift mu)_x + (source_flux)_x forward
/// from `initial`, homogeneous Dirichlet at both ends. Both divergence terms are written
/// as differences of face fluxes, so the scheme is conservative.
Field solve_forward_fp(const Field& drift, const Field& source_flux,
                       std::span<const double> initial, const Discretization& disc, double sigma);

/// Heat kernel S(x, t) = (2 s^2 pi t)^{-1/2} exp(-x^2 / (2 s^2 t)) and its x-derivative.
double heat_kernel(double x, double t, double sigma);
double heat_kernel_dx(double x, double t, double sigma);

/// Independent evaluation of the same forward problem as solve_forward_fp through its
/// half-line integral representation: the odd-reflection kernel carries the previous
/// time level and the reflected kernel gradient carries drift*mu + source. Integrals in y
/// are taken exactly against the piecewise-linear interpolant of the nodal data, time
/// integrals by the midpoint rule. The right truncation boundary is ignored, so only
/// use it on data supported away from x = L. Cost is O(Nx^2) per step.
Field duhamel_propagate(const Field& drift, const Field& source,
                        std::span<const double> initial, const Discretization& disc, double sigma);

}  // namespace mfgsens
