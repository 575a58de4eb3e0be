#include "mfgsens/kernels.hpp"

#include "mfgsens/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mfgsens {

Row thomas_solve(const TridiagonalSystem& sys) {
    const std::size_t n = sys.diag.size();
    if (n == 0 || sys.lower.size() != n || sys.upper.size() != n || sys.rhs.size() != n)
        throw InvalidInput("thomas_solve: inconsistent band lengths");
    Row c(n), d(n);
    double pivot = sys.diag[0];
    if (std::abs(pivot) < kPivotThreshold) throw SingularSystem("thomas_solve: zero pivot at row 0");
    c[0] = sys.upper[0] / pivot;
    d[0] = sys.rhs[0] / pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = sys.diag[i] - sys.lower[i] * c[i - 1];
        if (std::abs(pivot) < kPivotThreshold)
            throw SingularSystem("thomas_solve: zero pivot at row " + std::to_string(i));
        c[i] = (i + 1 < n) ? sys.upper[i] / pivot : 0.0;
        d[i] = (sys.rhs[i] - sys.lower[i] * d[i - 1]) / pivot;
    }
    Row x(n);
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

BoundarySpec BoundarySpec::homogeneous(const Discretization& disc) {
    return left_only(Row(disc.steps(), 0.0));
}

BoundarySpec BoundarySpec::dirichlet(Row left, Row right) {
    return {std::move(left), Right::dirichlet, std::move(right)};
}

BoundarySpec BoundarySpec::left_only(Row left) {
    return {std::move(left), Right::neumann_zero, {}};
}

void BoundarySpec::validate(const Discretization& disc) const {
    if (left.size() != disc.steps()) throw InvalidInput("boundary: left series needs Nt+1 values");
    if (right == Right::dirichlet && right_values.size() != disc.steps())
        throw InvalidInput("boundary: right series needs Nt+1 values");
}

namespace {

/// Three bands of a spatial operator at one time level.
struct Bands {
    Row a, b, c;
    explicit Bands(std::size_t n) : a(n, 0.0), b(n, 0.0), c(n, 0.0) {}

    double apply(std::span<const double> v, std::size_t i) const {
        double s = b[i] * v[i];
        if (i > 0) s += a[i] * v[i - 1];
        if (i + 1 < v.size()) s += c[i] * v[i + 1];
        return s;
    }
};

void require_disc(const Field& f, const Discretization& disc, const char* what) {
    if (!(f.disc() == disc)) throw InvalidInput(std::string(what) + " does not match the discretization");
}

/// (s^2/2) v_xx + drift v_x - zeroth v at interior nodes and, for a Neumann right end, at Nx.
Bands backward_operator(std::span<const double> drift, double zeroth, bool neumann,
                        const Discretization& disc, double sigma) {
    const std::size_t n = disc.nodes();
    const double h = disc.dx();
    const double diff = 0.5 * sigma * sigma;
    const double D = diff / (h * h);
    Bands L(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double d = drift[i];
        if (std::abs(d) * h / diff <= 2.0) {
            L.a[i] = D - 0.5 * d / h;
            L.b[i] = -2.0 * D - zeroth;
            L.c[i] = D + 0.5 * d / h;
        } else if (d > 0.0) {
            L.a[i] = D;
            L.b[i] = -2.0 * D - d / h - zeroth;
            L.c[i] = D + d / h;
        } else {
            L.a[i] = D - d / h;
            L.b[i] = -2.0 * D + d / h - zeroth;
            L.c[i] = D;
        }
    }
    if (neumann) {
        L.a[n - 1] = 2.0 * D;
        L.b[n - 1] = -2.0 * D - zeroth;
    }
    return L;
}

/// (s^2/2) mu_xx + (drift mu)_x in flux form; rows 0 and Nx are left empty (Dirichlet).
Bands forward_operator(std::span<const double> drift, const Discretization& disc, double sigma) {
    const std::size_t n = disc.nodes();
    const double h = disc.dx();
    const double diff = 0.5 * sigma * sigma;
    const double D = diff / (h * h);
    Bands M(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        M.a[i] = D;
        M.b[i] = -2.0 * D;
        M.c[i] = D;
    }
    // face between p and q = p + 1 carries flux wp mu_p + wq mu_q
    for (std::size_t p = 0; p + 1 < n; ++p) {
        const std::size_t q = p + 1;
        const double face = 0.5 * (drift[p] + drift[q]);
        double wp = 0.5 * drift[p];
        double wq = 0.5 * drift[q];
        if (std::abs(face) * h / diff > 2.0) {
            wp = face > 0.0 ? 0.0 : drift[p];
            wq = face > 0.0 ? drift[q] : 0.0;
        }
        if (p > 0) {
            M.b[p] += wp / h;
            M.c[p] += wq / h;
        }
        if (q + 1 < n) {
            M.a[q] -= wp / h;
            M.b[q] -= wq / h;
        }
    }
    return M;
}

/// Centered divergence of a nodal flux at interior nodes (face values are averages).
Row flux_divergence(std::span<const double> g, const Discretization& disc) {
    const std::size_t n = disc.nodes();
    Row out(n, 0.0);
    const double inv2h = 0.5 / disc.dx();
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (g[i + 1] - g[i - 1]) * inv2h;
    return out;
}

}  // namespace

Field solve_backward_parabolic(const Field& drift, double zeroth, const Field& source,
                               std::span<const double> terminal, const BoundarySpec& bc,
                               const Discretization& disc, double sigma) {
    require_disc(drift, disc, "drift");
    require_disc(source, disc, "source");
    bc.validate(disc);
    if (terminal.size() != disc.nodes()) throw InvalidInput("terminal row needs Nx+1 values");
    if (!(sigma > 0.0)) throw InvalidInput("sigma must be > 0");

    const bool neumann = bc.right == BoundarySpec::Right::neumann_zero;
    const std::size_t n = disc.nodes();
    const double half_dt = 0.5 * disc.dt();

    Field v(disc);
    std::copy(terminal.begin(), terminal.end(), v.row(disc.Nt).begin());
    v(disc.Nt, 0) = bc.left[disc.Nt];
    if (!neumann) v(disc.Nt, disc.Nx) = bc.right_values[disc.Nt];

    Bands L_next = backward_operator(drift.row(disc.Nt), zeroth, neumann, disc, sigma);
    TridiagonalSystem sys{Row(n), Row(n), Row(n), Row(n)};
    for (int step = disc.Nt - 1; step >= 0; --step) {
        Bands L_now = backward_operator(drift.row(step), zeroth, neumann, disc, sigma);
        auto next = v.row(step + 1);
        for (std::size_t i = 0; i < n; ++i) {
            sys.lower[i] = -half_dt * L_now.a[i];
            sys.diag[i] = 1.0 - half_dt * L_now.b[i];
            sys.upper[i] = -half_dt * L_now.c[i];
            sys.rhs[i] = next[i] + half_dt * L_next.apply(next, i) +
                         half_dt * (source(step, i) + source(step + 1, i));
        }
        sys.lower[0] = sys.upper[0] = 0.0;
        sys.diag[0] = 1.0;
        sys.rhs[0] = bc.left[step];
        if (!neumann) {
            sys.lower[n - 1] = sys.upper[n - 1] = 0.0;
            sys.diag[n - 1] = 1.0;
            sys.rhs[n - 1] = bc.right_values[step];
        }
        Row sol = thomas_solve(sys);
        std::copy(sol.begin(), sol.end(), v.row(step).begin());
        L_next = std::move(L_now);
    }
    return v;
}

Field solve_forward_fp(const Field& drift, const Field& source_flux,
                       std::span<const double> initial, const Discretization& disc, double sigma) {
    require_disc(drift, disc, "drift");
    require_disc(source_flux, disc, "source_flux");
    if (initial.size() != disc.nodes()) throw InvalidInput("initial row needs Nx+1 values");
    if (!(sigma > 0.0)) throw InvalidInput("sigma must be > 0");

    const std::size_t n = disc.nodes();
    const double half_dt = 0.5 * disc.dt();

    Field mu(disc);
    std::copy(initial.begin(), initial.end(), mu.row(0).begin());
    mu(0, 0) = 0.0;
    mu(0, disc.Nx) = 0.0;

    Bands M_prev = forward_operator(drift.row(0), disc, sigma);
    Row S_prev = flux_divergence(source_flux.row(0), disc);
    TridiagonalSystem sys{Row(n), Row(n), Row(n), Row(n)};
    for (int step = 1; step <= disc.Nt; ++step) {
        Bands M_now = forward_operator(drift.row(step), disc, sigma);
        Row S_now = flux_divergence(source_flux.row(step), disc);
        auto prev = mu.row(step - 1);
        for (std::size_t i = 0; i < n; ++i) {
            sys.lower[i] = -half_dt * M_now.a[i];
            sys.diag[i] = 1.0 - half_dt * M_now.b[i];
            sys.upper[i] = -half_dt * M_now.c[i];
            sys.rhs[i] = prev[i] + half_dt * M_prev.apply(prev, i) + half_dt * (S_prev[i] + S_now[i]);
        }
        for (std::size_t i : {std::size_t{0}, n - 1}) {
            sys.lower[i] = sys.upper[i] = 0.0;
            sys.diag[i] = 1.0;
            sys.rhs[i] = 0.0;
        }
        Row sol = thomas_solve(sys);
        std::copy(sol.begin(), sol.end(), mu.row(step).begin());
        M_prev = std::move(M_now);
        S_prev = std::move(S_now);
    }
    return mu;
}

double heat_kernel(double x, double t, double sigma) {
    const double var = sigma * sigma * t;
    return std::exp(-x * x / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

double heat_kernel_dx(double x, double t, double sigma) {
    return -x / (sigma * sigma * t) * heat_kernel(x, t, sigma);
}

namespace {

/// P(z_lo < Z < z_hi) for standard normal Z, without cancellation in the tails.
double normal_mass(double z_lo, double z_hi) {
    constexpr double r2 = std::numbers::sqrt2;
    if (z_lo >= 0.0) return 0.5 * (std::erfc(z_lo / r2) - std::erfc(z_hi / r2));
    if (z_hi <= 0.0) return 0.5 * (std::erfc(-z_hi / r2) - std::erfc(-z_lo / r2));
    return 1.0 - 0.5 * (std::erfc(-z_lo / r2) + std::erfc(z_hi / r2));
}

using Matrix = std::vector<Row>;

/// W[i][j]: weight of node j in the integral over [0, L] of the kernel at x_i against the
/// piecewise-linear interpolant. `gradient` selects S_x(x-y) + S_x(x+y), else S(x-y) - S(x+y).
Matrix kernel_weights(const Discretization& disc, double tau, double sigma, bool gradient) {
    const std::size_t n = disc.nodes();
    const double h = disc.dx();
    const double s = sigma * std::sqrt(tau);
    const double s2 = s * s;
    Matrix W(n, Row(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const double x = disc.x(static_cast<int>(i));
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const double a = disc.x(static_cast<int>(j));
            const double b = a + h;
            // direct image: integrals of S(x - y) and S(x - y) (y - a) over [a, b]
            const double I0 = normal_mass((x - b) / s, (x - a) / s);
            const double Sa = heat_kernel(x - a, tau, sigma);
            const double Sb = heat_kernel(x - b, tau, sigma);
            // reflected image: S(x + y)
            const double R0 = normal_mass((x + a) / s, (x + b) / s);
            const double Ra = heat_kernel(x + a, tau, sigma);
            const double Rb = heat_kernel(x + b, tau, sigma);
            if (!gradient) {
                const double I1 = s2 * (Sa - Sb) + (x - a) * I0;
                const double R1 = -s2 * (Rb - Ra) - (x + a) * R0;
                const double D0 = I0 - R0;
                const double D1 = I1 - R1;
                W[i][j] += D0 - D1 / h;
                W[i][j + 1] += D1 / h;
            } else {
                W[i][j] += Sa - Ra - I0 / h + R0 / h;
                W[i][j + 1] += -Sb + Rb + I0 / h - R0 / h;
            }
        }
    }
    return W;
}

Row apply(const Matrix& W, std::span<const double> v) {
    Row out(W.size(), 0.0);
    for (std::size_t i = 0; i < W.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) s += W[i][j] * v[j];
        out[i] = s;
    }
    return out;
}

}  // namespace

Field duhamel_propagate(const Field& drift, const Field& source, std::span<const double> initial,
                        const Discretization& disc, double sigma) {
    require_disc(drift, disc, "drift");
    require_disc(source, disc, "source");
    if (initial.size() != disc.nodes()) throw InvalidInput("initial row needs Nx+1 values");

    const double dt = disc.dt();
    const std::size_t n = disc.nodes();
    // gradient kernels by lag l: tau = (l + 1/2) dt
    std::vector<Matrix> K;
    K.reserve(disc.steps());
    for (int lag = 0; lag < disc.Nt; ++lag)
        K.push_back(kernel_weights(disc, (lag + 0.5) * dt, sigma, true));

    Field mu(disc);
    Row init(initial.begin(), initial.end());
    init[0] = 0.0;
    std::copy(init.begin(), init.end(), mu.row(0).begin());

    auto flux = [&](int step, std::span<const double> m) {
        Row f(n);
        for (std::size_t i = 0; i < n; ++i) {
            const int ii = static_cast<int>(i);
            f[i] = drift(step, ii) * m[i] + source(step, ii);
        }
        return f;
    };
    std::vector<Row> f_nodes{flux(0, mu.row(0))};

    for (int step = 1; step <= disc.Nt; ++step) {
        // known part: initial data carried to t_step plus every completed interval but the last
        Row known = apply(kernel_weights(disc, disc.t(step), sigma, false), init);
        for (int j = 0; j + 1 < step; ++j) {
            Row mid(n);
            for (std::size_t i = 0; i < n; ++i) mid[i] = 0.5 * (f_nodes[j][i] + f_nodes[j + 1][i]);
            const Row push = apply(K[step - j - 1], mid);
            for (std::size_t i = 0; i < n; ++i) known[i] += dt * push[i];
        }
        // last interval involves the unknown level; fixed-point sweeps settle it
        const Row& f_last = f_nodes[step - 1];
        Row next = known;
        Row mid = f_last;
        for (int sweep = 0; sweep < 4; ++sweep) {
            const Row push = apply(K[0], mid);
            for (std::size_t i = 0; i < n; ++i) next[i] = known[i] + dt * push[i];
            const Row f_next = flux(step, next);
            for (std::size_t i = 0; i < n; ++i) mid[i] = 0.5 * (f_last[i] + f_next[i]);
        }
        std::copy(next.begin(), next.end(), mu.row(step).begin());
        f_nodes.push_back(flux(step, next));
    }
    return mu;
}

}  // namespace mfgsens
