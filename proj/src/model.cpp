#include "mfgsens/model.hpp"

#include "mfgsens/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mfgsens {

namespace {

double param_or(const std::vector<double>& p, std::size_t i, double fallback) {
    return i < p.size() ? p[i] : fallback;
}

}  // namespace

double TimeProfile::eval(double t, double T) const {
    switch (family) {
    case Family::linear_decay:
        return param_or(params, 0, 1.0) * (1.0 - t / T);
    case Family::smooth_bump: {
        // measured from T so that the value there is exactly zero
        const double s = std::sin(std::numbers::pi * (T - t) / T);
        return param_or(params, 0, 1.0) * s * s;
    }
    case Family::constant_zero:
        return 0.0;
    }
    return 0.0;
}

void TimeProfile::validate() const {
    if (family == Family::constant_zero) return;
    const double scale = param_or(params, 0, 1.0);
    if (params.size() > 1) throw InvalidInput("xi: at most one parameter (scale)");
    if (!(scale >= 0.0 && scale <= 1.0)) throw InvalidInput("xi: scale must lie in [0, 1]");
}

double FunctionSpec::eval(double x) const {
    switch (family) {
    case Family::gamma4_density: {
        const double th = param_or(params, 0, 1.0);
        return x * x * x * std::exp(-x / th) / (6.0 * th * th * th * th);
    }
    case Family::smooth_terminal: {
        const double a = param_or(params, 0, 1.0);
        return x * std::exp(-a * x * x);
    }
    case Family::zero:
        return 0.0;
    case Family::affine:
        return param_or(params, 0, 0.0) + param_or(params, 1, 0.0) * x;
    case Family::custom_table: {
        const std::size_t n = params.size() / 2;
        if (n == 0) return 0.0;
        if (x <= params[0]) return params[1];
        for (std::size_t k = 1; k < n; ++k) {
            const double x1 = params[2 * k];
            if (x <= x1) {
                const double x0 = params[2 * k - 2];
                const double y0 = params[2 * k - 1];
                const double y1 = params[2 * k + 1];
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
            }
        }
        return params[2 * n - 1];
    }
    }
    return 0.0;
}

Row FunctionSpec::sample(const Discretization& disc) const {
    Row r(disc.nodes());
    for (int i = 0; i <= disc.Nx; ++i) r[i] = eval(disc.x(i));
    return r;
}

void FunctionSpec::validate() const {
    switch (family) {
    case Family::gamma4_density:
        if (!(param_or(params, 0, 1.0) > 0.0)) throw InvalidInput("gamma4_density: theta must be > 0");
        break;
    case Family::smooth_terminal:
        if (!(param_or(params, 0, 1.0) > 0.0)) throw InvalidInput("smooth_terminal: a must be > 0");
        break;
    case Family::custom_table:
        if (params.size() % 2 != 0 || params.size() < 4)
            throw InvalidInput("custom_table: needs an even list of at least two (x, y) pairs");
        for (std::size_t k = 2; k < params.size(); k += 2)
            if (!(params[k] > params[k - 2])) throw InvalidInput("custom_table: x must increase");
        break;
    default:
        break;
    }
    for (double p : params)
        if (!std::isfinite(p)) throw InvalidInput("function parameters must be finite");
}

std::string_view to_string(TimeProfile::Family f) {
    switch (f) {
    case TimeProfile::Family::linear_decay: return "linear_decay";
    case TimeProfile::Family::smooth_bump: return "smooth_bump";
    case TimeProfile::Family::constant_zero: return "constant_zero";
    }
    return "?";
}

std::string_view to_string(FunctionSpec::Family f) {
    switch (f) {
    case FunctionSpec::Family::gamma4_density: return "gamma4_density";
    case FunctionSpec::Family::smooth_terminal: return "smooth_terminal";
    case FunctionSpec::Family::zero: return "zero";
    case FunctionSpec::Family::affine: return "affine";
    case FunctionSpec::Family::custom_table: return "custom_table";
    }
    return "?";
}

TimeProfile::Family parse_time_family(std::string_view s) {
    for (auto f : {TimeProfile::Family::linear_decay, TimeProfile::Family::smooth_bump,
                   TimeProfile::Family::constant_zero})
        if (to_string(f) == s) return f;
    throw InvalidInput("unknown time profile family '" + std::string(s) + "'");
}

FunctionSpec::Family parse_function_family(std::string_view s) {
    for (auto f : {FunctionSpec::Family::gamma4_density, FunctionSpec::Family::smooth_terminal,
                   FunctionSpec::Family::zero, FunctionSpec::Family::affine,
                   FunctionSpec::Family::custom_table})
        if (to_string(f) == s) return f;
    throw InvalidInput("unknown function family '" + std::string(s) + "'");
}

void ModelParams::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidInput("params.sigma must be > 0");
    if (!(r > 0.0) || !std::isfinite(r)) throw InvalidInput("params.r must be > 0");
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("params.T must be > 0");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw InvalidInput("params.epsilon must be >= 0");
    xi.validate();
    M.validate();
    uT.validate();
    if (xi.eval(T, T) != 0.0) throw InvalidInput("params.xi must vanish at T");
    for (int k = 0; k <= 64; ++k) {
        const double v = xi.eval(T * k / 64.0, T);
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("params.xi must take values in [0, 1]");
    }
    if (M.eval(0.0) != 0.0) throw InvalidInput("params.M must vanish at x = 0");
    if (uT.eval(0.0) != 0.0) throw InvalidInput("params.uT must vanish at x = 0");
}

void ModelParams::validate(const Discretization& disc, double mass_tail_tol) const {
    validate();
    if (std::abs(disc.T - T) > 1e-12 * T) throw InvalidInput("disc.T differs from params.T");
    const Row m = M.sample(disc);
    for (double v : m)
        if (!(v >= 0.0)) throw InvalidInput("params.M must be nonnegative");
    const double mass = trapezoid(m, disc);
    if (mass > 1.0 + 1e-12) throw InvalidInput("params.M has mass > 1 on [0, L]");
    if (mass < 1.0 - mass_tail_tol)
        throw InvalidInput("params.M mass on [0, L] is below 1 - mass_tail_tol; increase disc.L");
}

AlphaBeta eval_alpha_beta(double epsilon, int k) {
    if (k < 0 || k > kMaxDerivativeOrder) throw InvalidInput("derivative order must be in [0, 12]");
    const double denom = 2.0 + epsilon;
    if (k == 0) return {2.0 / denom, epsilon / denom};
    double fact = 1.0;
    for (int j = 2; j <= k; ++j) fact *= j;
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const double a = 2.0 * sign * fact / std::pow(denom, k + 1);
    return {a, -a};
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double c = 1.0;
    for (int j = 1; j <= k; ++j) c = c * (n - k + j) / j;
    return std::round(c);
}

namespace {

void check_rows(std::span<const OrderRows> rows, std::size_t need, const Discretization& disc) {
    if (rows.size() < need) throw MissingOrder("lower-order rows missing");
    for (std::size_t j = 0; j < need; ++j)
        if (rows[j].ux.size() != disc.nodes() || rows[j].m.size() != disc.nodes())
            throw InvalidInput("order rows do not match the discretization");
}

double quad_product(std::span<const double> a, std::span<const double> b,
                    const Discretization& disc) {
    Row p(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i] * b[i];
    return trapezoid(p, disc);
}

}  // namespace

Row eval_F(std::span<const double> ux_row, std::span<const double> m_row, double t, double epsilon,
           const ModelParams& params, const Discretization& disc) {
    if (ux_row.size() != disc.nodes() || m_row.size() != disc.nodes())
        throw InvalidInput("eval_F: row lengths differ from Nx+1");
    const auto ab = eval_alpha_beta(epsilon * params.xi_at(t), 0);
    const double A = ab.alpha + ab.beta * quad_product(ux_row, m_row, disc);
    Row F(ux_row.size());
    for (std::size_t i = 0; i < F.size(); ++i) F[i] = 0.5 * (A - ux_row[i]);
    return F;
}

FkSplit eval_F_k_split(int k, std::span<const OrderRows> rows, double t, double epsilon,
                       const ModelParams& params, const Discretization& disc) {
    if (k < 1 || k > kMaxDerivativeOrder) throw InvalidInput("eval_F_k_split: k must be in [1, 12]");
    check_rows(rows, static_cast<std::size_t>(k), disc);
    const double xi = params.xi_at(t);
    const double e = epsilon * xi;

    double known = 0.5 * std::pow(xi, k) * eval_alpha_beta(e, k).alpha;
    for (int i = 0; i <= k; ++i) {
        const double bi = std::pow(xi, i) * eval_alpha_beta(e, i).beta;
        if (bi == 0.0) continue;
        for (int j = 0; j <= k - i; ++j) {
            const int l = k - i - j;
            if (i == 0 && (j == k || l == k)) continue;  // order-k terms are withheld
            known += 0.5 * binomial(k, i) * binomial(k - i, j) * bi *
                     quad_product(rows[j].ux, rows[l].m, disc);
        }
    }
    return {Row(disc.nodes(), known), eval_alpha_beta(e, 0).beta};
}

Row eval_F_k(int k, std::span<const OrderRows> rows, double t, double epsilon,
             const ModelParams& params, const Discretization& disc) {
    check_rows(rows, static_cast<std::size_t>(k) + 1, disc);
    if (k == 0) return eval_F(rows[0].ux, rows[0].m, t, epsilon, params, disc);
    FkSplit s = eval_F_k_split(k, rows, t, epsilon, params, disc);
    const double coupled = quad_product(rows[0].ux, rows[k].m, disc) +
                           quad_product(rows[k].ux, rows[0].m, disc);
    Row F = std::move(s.known);
    for (std::size_t i = 0; i < F.size(); ++i)
        F[i] += 0.5 * s.coupling * coupled - 0.5 * rows[k].ux[i];
    return F;
}

SplitSources assemble_J_K(int k, std::span<const OrderRows> rows, double t, double epsilon,
                          const ModelParams& params, const Discretization& disc) {
    if (k < 1 || k > kMaxDerivativeOrder) throw InvalidInput("assemble_J_K: k must be in [1, 12]");
    check_rows(rows, static_cast<std::size_t>(k), disc);
    std::vector<Row> F(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) F[j] = eval_F_k(j, rows.first(j + 1), t, epsilon, params, disc);
    const Row known = eval_F_k_split(k, rows, t, epsilon, params, disc).known;

    const std::size_t n = disc.nodes();
    SplitSources s{Row(n, 0.0), Row(n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        double J = 2.0 * F[0][i] * known[i];
        double K = known[i] * rows[0].m[i];
        for (int j = 1; j < k; ++j) {
            const double c = binomial(k, j);
            J += c * F[j][i] * F[k - j][i];
            K += c * F[j][i] * rows[k - j].m[i];
        }
        s.J_known[i] = J;
        s.K_known[i] = K;
    }
    return s;
}

}  // namespace mfgsens
