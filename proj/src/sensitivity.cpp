#include "mfgsens/sensitivity.hpp"

#include "mfgsens/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <thread>

namespace mfgsens {

std::vector<double> one_sided_weights(int k) {
    if (k == 1) return {-1.5, 2.0, -0.5};
    if (k == 2) return {2.0, -5.0, 4.0, -1.0};
    throw InvalidInput("one-sided stencils exist for k = 1, 2 only");
}

double one_sided_derivative(int k, double delta, const std::function<double(double)>& f) {
    const auto w = one_sided_weights(k);
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * f(static_cast<double>(j) * delta);
    return s / std::pow(delta, k);
}

std::pair<Field, Field> fd_derivative_oracle(const ModelParams& params, const Discretization& disc,
                                             const SolveOptions& opts, int k, double delta) {
    const auto w = one_sided_weights(k);
    if (!(delta > 0.0)) throw InvalidInput("fd_derivative_oracle: delta must be > 0");
    const double scale = 1.0 / std::pow(delta, k);
    Field u(disc), m(disc);
    for (std::size_t j = 0; j < w.size(); ++j) {
        const MFGSolution s = solve_mfg(params.with_epsilon(static_cast<double>(j) * delta), disc, opts);
        u.axpy(scale * w[j], s.u);
        m.axpy(scale * w[j], s.m);
    }
    return {std::move(u), std::move(m)};
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidInput("slope fit needs >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first;
    std::mutex mu;
    auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!first) first = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

void validate_epsilons(const std::vector<double>& eps) {
    if (eps.empty()) throw InvalidInput("sweep: epsilon list is empty");
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] >= 0.0) || !std::isfinite(eps[i]))
            throw InvalidInput("sweep: epsilons must be finite and >= 0");
        if (i > 0 && !(eps[i] > eps[i - 1]))
            throw InvalidInput("sweep: epsilons must be strictly increasing");
        if (eps[i] > 0.0) {
            lo = std::min(lo, eps[i]);
            hi = std::max(hi, eps[i]);
        }
    }
    if (!(hi >= 4.0 * lo)) throw InvalidInput("sweep: positive epsilons must span a factor >= 4");
}

namespace {

struct PointResult {
    std::optional<std::vector<NormTriple>> u_err;
    std::vector<NormTriple> m_err;
    double residual = 0.0;
    std::string failure;
};

}  // namespace

SolveOptions study_solve_options(const SolveOptions& opts, const StudyOptions& study) {
    if (!(study.solve_tol > 0.0)) throw InvalidInput("sweep: solve_tol must be > 0");
    SolveOptions tight = opts;
    tight.tol = std::min(opts.tol, study.solve_tol);
    return tight;
}

SensitivityReport remainder_study(const ModelParams& params, const Discretization& disc,
                                  const SolveOptions& user_opts, const std::vector<double>& epsilons,
                                  int K, const TaylorTable& table, const StudyOptions& study) {
    const auto start = std::chrono::steady_clock::now();
    const SolveOptions opts = study_solve_options(user_opts, study);
    validate_epsilons(epsilons);
    if (K < 0 || K > table.K) throw InvalidInput("sweep: K exceeds the cascade order");
    if (!(table.disc == disc)) throw InvalidInput("sweep: cascade grid differs");

    const int n_eps = static_cast<int>(epsilons.size());
    std::vector<PointResult> points(static_cast<std::size_t>(n_eps));
    parallel_for(n_eps, study.threads, [&](int e) {
        PointResult& pr = points[static_cast<std::size_t>(e)];
        const double eps = epsilons[static_cast<std::size_t>(e)];
        Field u, m;
        if (eps == 0.0) {
            // the decoupled order-0 problem is the full system at epsilon = 0
            u = table.u[0];
            m = table.m[0];
        } else {
            try {
                MFGSolution s = solve_mfg(params.with_epsilon(eps), disc, opts);
                pr.residual = s.residual;
                u = std::move(s.u);
                m = std::move(s.m);
            } catch (const std::exception& ex) {
                pr.failure = ex.what();
                return;
            }
        }
        std::vector<NormTriple> ue, me;
        for (int k = 0; k <= K; ++k) {
            auto [pu, pm] = taylor_eval(table, eps, k);
            ue.push_back(discrete_norms(u - pu));
            me.push_back(discrete_norms(m - pm));
        }
        pr.u_err = std::move(ue);
        pr.m_err = std::move(me);
    });

    SensitivityReport rep;
    rep.epsilons = epsilons;
    for (int k = 0; k <= K; ++k) rep.orders.push_back(k);
    double worst_residual = 0.0;
    for (int e = 0; e < n_eps; ++e) {
        const PointResult& pr = points[static_cast<std::size_t>(e)];
        if (!pr.u_err) {
            rep.complete = false;
            if (rep.failure.empty())
                rep.failure = "epsilon=" + std::to_string(epsilons[e]) + ": " + pr.failure;
            continue;
        }
        worst_residual = std::max(worst_residual, pr.residual);
        for (int k = 0; k <= K; ++k) {
            const NormTriple& nu = (*pr.u_err)[k];
            const NormTriple& nm = pr.m_err[k];
            const double uv[3] = {nu.sup_val, nu.sup_dx, nu.sup_dxx};
            const double mv[3] = {nm.sup_val, nm.sup_dx, nm.sup_dxx};
            for (int q = 0; q < 3; ++q) {
                rep.errors[{"u", k, e, norm_names()[q]}] = uv[q];
                rep.errors[{"m", k, e, norm_names()[q]}] = mv[q];
            }
        }
    }
    // iterates stop within tol of each other; with damping 1/2 the distance to the discrete
    // fixed point is of the same size, so remainders near it carry no order information
    rep.noise_floor = 100.0 * std::max(worst_residual, opts.tol);

    for (const char* field : {"u", "m"}) {
        for (int k = 0; k <= K; ++k) {
            for (const auto& nn : norm_names()) {
                std::vector<double> xs, ys;
                for (int e = 0; e < n_eps; ++e) {
                    auto it = rep.errors.find({field, k, e, nn});
                    if (it == rep.errors.end() || epsilons[e] == 0.0) continue;
                    if (!(it->second > rep.noise_floor)) continue;
                    xs.push_back(epsilons[e]);
                    ys.push_back(it->second);
                }
                rep.fit_points[{field, k, nn}] = static_cast<int>(xs.size());
                rep.slopes[{field, k, nn}] = xs.size() >= 3 ? fit_loglog_slope(xs, ys)
                                                            : std::numeric_limits<double>::quiet_NaN();
            }
        }
    }

    for (int k = 0; k <= table.K; ++k) rep.coefficient_sup_norms.push_back(sup_abs(table.u[k]));
    rep.log_epsilon0 = estimate_log_epsilon0(table.u[0], table.F0, table.base_params, disc);
    rep.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

SensitivityReport remainder_study(const ModelParams& params, const Discretization& disc,
                                  const SolveOptions& opts, const std::vector<double>& epsilons,
                                  int K, const StudyOptions& study) {
    const auto start = std::chrono::steady_clock::now();
    const TaylorTable table = build_cascade(params, disc, study_solve_options(opts, study), K);
    SensitivityReport rep = remainder_study(params, disc, opts, epsilons, K, table, study);
    rep.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

double heat_constant(double sigma) {
    return 4.0 / std::sqrt(2.0 * sigma * sigma * std::numbers::pi);
}

double energy_constant(double sigma, double ux0_sup) {
    const double g = 1.0 + ux0_sup * ux0_sup;
    return 384.0 * heat_constant(sigma) * std::numbers::ln2 * g * g * g;
}

double estimate_log_epsilon0(double sigma, double T, double ux0_sup, double F0_sup) {
    const double U2 = ux0_sup * ux0_sup;
    const double C0 = energy_constant(sigma, ux0_sup);
    const double spread = F0_sup * F0_sup + 0.75 * U2;
    const double log_cap = std::log(0.1);
    double log_bound = log_cap;
    if (spread > 0.0) {
        const double log_energy = std::log1p(3.0 * U2) - std::log(96.0) - 2.0 * C0 * T - std::log(spread);
        log_bound = std::min(log_energy, log_cap);
    }
    // beta(e) = e / (2 + e) inverts to e = 2B / (1 - B)
    if (log_bound > -30.0) return std::numbers::ln2 + log_bound - std::log1p(-std::exp(log_bound));
    return std::numbers::ln2 + log_bound;
}

double estimate_log_epsilon0(const Field& u0, const Field& F0, const ModelParams& params,
                             const Discretization& disc) {
    if (!(u0.disc() == disc) || !(F0.disc() == disc))
        throw InvalidInput("estimate_log_epsilon0: field shape mismatch");
    return estimate_log_epsilon0(params.sigma, params.T, sup_abs(diff_x(u0)), sup_abs(F0));
}

}  // namespace mfgsens
