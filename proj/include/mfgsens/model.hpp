#pragma once

#include "mfgsens/grid.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mfgsens {

/// Time weight xi(t) multiplying the competition parameter; must vanish at T.
struct TimeProfile {
    enum class Family { linear_decay, smooth_bump, constant_zero };

    Family family = Family::linear_decay;
    /// linear_decay: [scale] -> scale*(1 - t/T); smooth_bump: [scale] -> scale*sin^2(pi t/T).
    std::vector<double> params;

    double eval(double t, double T) const;
    void validate() const;

    static TimeProfile linear_decay(double scale = 1.0) { return {Family::linear_decay, {scale}}; }
    static TimeProfile smooth_bump(double scale = 1.0) { return {Family::smooth_bump, {scale}}; }
    static TimeProfile zero() { return {Family::constant_zero, {}}; }
};

/// Closed-form spatial profile used for the initial density and terminal cost.
struct FunctionSpec {
    enum class Family { gamma4_density, smooth_terminal, zero, affine, custom_table };

    Family family = Family::zero;
    /// gamma4_density: [theta]; smooth_terminal: [a] -> x exp(-a x^2);
    /// affine: [a, b] -> a + b x; custom_table: [x0, y0, x1, y1, ...] piecewise linear.
    std::vector<double> params;

    double eval(double x) const;
    Row sample(const Discretization& disc) const;
    void validate() const;

    static FunctionSpec gamma4(double theta = 1.0) { return {Family::gamma4_density, {theta}}; }
    static FunctionSpec smooth_terminal(double a = 1.0) { return {Family::smooth_terminal, {a}}; }
    static FunctionSpec zero() { return {Family::zero, {}}; }
    static FunctionSpec affine(double a, double b) { return {Family::affine, {a, b}}; }
};

std::string_view to_string(TimeProfile::Family f);
std::string_view to_string(FunctionSpec::Family f);
TimeProfile::Family parse_time_family(std::string_view s);
FunctionSpec::Family parse_function_family(std::string_view s);

struct ModelParams {
    double sigma = 1.0;
    double r = 0.3;
    double T = 1.0;
    double epsilon = 0.05;
    TimeProfile xi = TimeProfile::linear_decay();
    FunctionSpec M = FunctionSpec::gamma4();
    FunctionSpec uT = FunctionSpec::smooth_terminal();

    double xi_at(double t) const { return xi.eval(t, T); }

    /// Scalar and profile invariants; M may carry any mass in [0, 1].
    void validate() const;

    /// Full check including the probability-mass window of M on `disc`.
    void validate(const Discretization& disc, double mass_tail_tol) const;

    ModelParams with_epsilon(double eps) const {
        ModelParams p = *this;
        p.epsilon = eps;
        return p;
    }
};

/// k-th epsilon-derivatives of alpha(e) = 2/(2+e) and beta(e) = e/(2+e).
struct AlphaBeta {
    double alpha = 0.0;
    double beta = 0.0;
};

inline constexpr int kMaxDerivativeOrder = 12;

AlphaBeta eval_alpha_beta(double epsilon, int k);

/// Production rate F = (alpha(e xi) + beta(e xi) Q(u_x m) - u_x) / 2 on one time row.
Row eval_F(std::span<const double> ux_row, std::span<const double> m_row, double t, double epsilon,
           const ModelParams& params, const Discretization& disc);

/// Derivative rows (u_x^(j), m^(j)) of one time level, j = 0, 1, ...
struct OrderRows {
    std::span<const double> ux;
    std::span<const double> m;
};

/// F^(k) = known + coupling/2 * Q(u_x^(0) m^(k) + u_x^(k) m^(0)) - u_x^(k)/2.
///
/// `known` collects every term built from orders below k (it is constant in x);
/// `coupling` is beta(epsilon xi(t)).
struct FkSplit {
    Row known;
    double coupling = 0.0;
};

/// Requires k >= 1 and rows for orders 0..k-1.
FkSplit eval_F_k_split(int k, std::span<const OrderRows> rows, double t, double epsilon,
                       const ModelParams& params, const Discretization& disc);

/// Full F^(k) (k >= 0); needs rows for orders 0..k.
Row eval_F_k(int k, std::span<const OrderRows> rows, double t, double epsilon,
             const ModelParams& params, const Discretization& disc);

/// Sources of the order-k system with the order-k unknowns withheld.
struct SplitSources {
    Row J_known;
    Row K_known;
};

/// Requires k >= 1 and rows for orders 0..k-1.
SplitSources assemble_J_K(int k, std::span<const OrderRows> rows, double t, double epsilon,
                          const ModelParams& params, const Discretization& disc);

/// Binomial coefficient, exact for the orders used here.
double binomial(int n, int k);

}  // namespace mfgsens
