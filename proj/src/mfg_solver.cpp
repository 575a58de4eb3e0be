#include "mfgsens/mfg_solver.hpp"

#include "mfgsens/errors.hpp"
#include "mfgsens/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfgsens {

void SolveOptions::validate() const {
    if (!(tol > 0.0)) throw InvalidInput("opts.tol must be > 0");
    if (max_iter < 1) throw InvalidInput("opts.max_iter must be >= 1");
    if (!(damping > 0.0 && damping <= 1.0)) throw InvalidInput("opts.damping must lie in (0, 1]");
}

namespace {

void require_params(const ModelParams& params, const Discretization& disc) {
    params.validate();
    disc.validate();
    if (std::abs(disc.T - params.T) > 1e-12 * params.T)
        throw InvalidInput("disc.T differs from params.T");
}

/// Q(a_x b) per time node.
Row coupling_integral(const Field& ux, const Field& b) {
    const auto& disc = ux.disc();
    Row out(disc.steps());
    Row prod(disc.nodes());
    for (int n = 0; n <= disc.Nt; ++n) {
        for (int i = 0; i <= disc.Nx; ++i) prod[i] = ux(n, i) * b(n, i);
        out[n] = trapezoid(prod, disc);
    }
    return out;
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return d;
}

/// A(t) = (alpha(e xi) + beta(e xi) eta(t)) / 2.
Row price_level(std::span<const double> eta, const ModelParams& params, const Discretization& disc) {
    Row A(disc.steps());
    for (int n = 0; n <= disc.Nt; ++n) {
        const auto ab = eval_alpha_beta(params.epsilon * params.xi_at(disc.t(n)), 0);
        A[n] = 0.5 * (ab.alpha + ab.beta * eta[n]);
    }
    return A;
}

Field production_rate(std::span<const double> A, const Field& ux) {
    const auto& disc = ux.disc();
    Field F(disc);
    for (int n = 0; n <= disc.Nt; ++n)
        for (int i = 0; i <= disc.Nx; ++i) F(n, i) = A[n] - 0.5 * ux(n, i);
    return F;
}

}  // namespace

HJBSolution solve_hjb(std::span<const double> A, const ModelParams& params,
                      const Discretization& disc, double inner_tol, const Field* F_guess) {
    if (A.size() != disc.steps()) throw InvalidInput("solve_hjb: A needs Nt+1 values");
    const Row terminal = params.uT.sample(disc);
    const BoundarySpec bc = BoundarySpec::homogeneous(disc);

    Field F_prev(disc);
    if (F_guess != nullptr && F_guess->disc() == disc) {
        F_prev = *F_guess;
    } else {
        const Row slope = diff_x(terminal, disc);
        for (int n = 0; n <= disc.Nt; ++n)
            for (int i = 0; i <= disc.Nx; ++i) F_prev(n, i) = A[n] - 0.5 * slope[i];
    }

    Field drift(disc), source(disc), v_old;
    std::vector<double> history;
    for (int it = 1; it <= kPolicyIterationCap; ++it) {
        for (int n = 0; n <= disc.Nt; ++n) {
            for (int i = 0; i <= disc.Nx; ++i) {
                const double f = F_prev(n, i);
                drift(n, i) = -f;
                source(n, i) = 2.0 * f * A[n] - f * f;
            }
        }
        Field v = solve_backward_parabolic(drift, params.r, source, terminal, bc, disc, params.sigma);
        Field F_new = production_rate(A, diff_x(v));
        if (it > 1) {
            const double change = sup_distance(v, v_old);
            history.push_back(change);
            if (change <= inner_tol) return {std::move(v), std::move(F_new), it};
        }
        v_old = std::move(v);
        F_prev = std::move(F_new);
    }
    throw Divergence("policy iteration did not reach tolerance in 30 iterations", history);
}

MFGSolution solve_mfg(const ModelParams& params, const Discretization& disc, const SolveOptions& opts) {
    require_params(params, disc);
    opts.validate();

    const double inner_tol = opts.tol / 10.0;
    const double theta = opts.damping;
    const Row M = params.M.sample(disc);
    const Field no_flux(disc);

    // initial iterate from the m-independent price (eta = 0)
    Row eta(disc.steps(), 0.0);
    HJBSolution hjb = solve_hjb(price_level(eta, params, disc), params, disc, inner_tol);
    Field u = std::move(hjb.u);
    Field F = std::move(hjb.F);
    Field m = solve_forward_fp(F, no_flux, M, disc, params.sigma);
    eta = coupling_integral(diff_x(u), m);

    MFGSolution sol;
    for (int it = 1; it <= opts.max_iter; ++it) {
        hjb = solve_hjb(price_level(eta, params, disc), params, disc, inner_tol, &F);
        Field m_new = solve_forward_fp(hjb.F, no_flux, M, disc, params.sigma);
        const Row eta_new = coupling_integral(diff_x(hjb.u), m_new);

        Field m_next = theta * std::move(m_new);
        m_next.axpy(1.0 - theta, m);
        Row eta_next(eta.size());
        for (std::size_t n = 0; n < eta.size(); ++n)
            eta_next[n] = theta * eta_new[n] + (1.0 - theta) * eta[n];

        const double res = std::max({mfgsens::sup_distance(hjb.u, u), mfgsens::sup_distance(m_next, m),
                                     sup_distance(eta_next, eta)});
        u = std::move(hjb.u);
        F = std::move(hjb.F);
        m = std::move(m_next);
        eta = std::move(eta_next);
        sol.history.push_back(res);
        if (opts.on_iteration) opts.on_iteration(it, res);
        if (!std::isfinite(res)) break;
        if (res <= opts.tol) {
            sol.iterations = it;
            sol.residual = res;
            sol.F = production_rate(price_level(eta, params, disc), diff_x(u));
            sol.u = std::move(u);
            sol.m = std::move(m);
            sol.eta = std::move(eta);
            if (auto bad = check_density(sol.m); !bad.empty())
                throw Divergence("accepted solve violates density invariant: " + bad, sol.history);
            return sol;
        }
    }
    std::ostringstream msg;
    msg << "coupled solve did not converge in " << opts.max_iter << " iterations (last residual "
        << (sol.history.empty() ? 0.0 : sol.history.back()) << ")";
    throw Divergence(msg.str(), sol.history);
}

LinearizedSolution solve_linearized(const MFGSolution& base, const Field& Psi, const Field& Phi,
                                    double epsilon, const ModelParams& params,
                                    const Discretization& disc, const SolveOptions& opts) {
    require_params(params, disc);
    opts.validate();
    for (const Field* f : {&base.u, &base.m, &base.F, &Psi, &Phi})
        if (!(f->disc() == disc)) throw InvalidInput("solve_linearized: field shape mismatch");
    if (!Psi.all_finite() || !Phi.all_finite()) throw InvalidInput("solve_linearized: sources must be finite");

    const Field ux0 = diff_x(base.u);
    const Field& m0 = base.m;
    const Field& F0 = base.F;

    Row coupling(disc.steps());
    bool coupled = false;
    for (int n = 0; n <= disc.Nt; ++n) {
        coupling[n] = eval_alpha_beta(epsilon * params.xi_at(disc.t(n)), 0).beta;
        coupled = coupled || coupling[n] != 0.0;
    }
    auto G_of = [&](const Field& mu, const Field& wx) {
        Row a = coupling_integral(ux0, mu);
        Row b = coupling_integral(wx, m0);
        for (int n = 0; n <= disc.Nt; ++n) a[n] = coupling[n] * (a[n] + b[n]);
        return a;
    };

    const Field drift_back = -1.0 * F0;
    const Row zero_row(disc.nodes(), 0.0);
    const BoundarySpec bc = BoundarySpec::homogeneous(disc);

    LinearizedSolution sol;
    Field w(disc), mu(disc);
    Field source(disc), flux(disc);
    for (int it = 1; it <= opts.max_iter; ++it) {
        const Row G_prev = G_of(mu, diff_x(w));
        for (int n = 0; n <= disc.Nt; ++n)
            for (int i = 0; i <= disc.Nx; ++i) source(n, i) = Psi(n, i) + F0(n, i) * G_prev[n];
        Field w_new = solve_backward_parabolic(drift_back, params.r, source, zero_row, bc, disc,
                                               params.sigma);
        const Field wx_new = diff_x(w_new);
        const Row G_new = G_of(mu, wx_new);
        for (int n = 0; n <= disc.Nt; ++n)
            for (int i = 0; i <= disc.Nx; ++i)
                flux(n, i) = Phi(n, i) + 0.5 * (G_new[n] - wx_new(n, i)) * m0(n, i);
        Field mu_new = solve_forward_fp(F0, flux, zero_row, disc, params.sigma);

        // the first sweep starts from zero, so it is taken undamped
        const double theta = it == 1 ? 1.0 : opts.damping;
        Field w_next = theta * std::move(w_new);
        w_next.axpy(1.0 - theta, w);
        Field mu_next = theta * std::move(mu_new);
        mu_next.axpy(1.0 - theta, mu);
        const double res = std::max(sup_distance(w_next, w), sup_distance(mu_next, mu));
        w = std::move(w_next);
        mu = std::move(mu_next);
        sol.history.push_back(res);
        if (opts.on_iteration) opts.on_iteration(it, res);

        if (!coupled || res <= opts.tol) {
            sol.iterations = it;
            sol.residual = coupled ? res : 0.0;
            sol.G = G_of(mu, diff_x(w));
            sol.w = std::move(w);
            sol.mu = std::move(mu);
            return sol;
        }
        if (!std::isfinite(res)) break;
    }
    throw Divergence("linearized solve did not converge", sol.history);
}

std::string check_density(const Field& m, double step_tol) {
    const auto& disc = m.disc();
    std::ostringstream msg;
    double prev_mass = 0.0;
    for (int n = 0; n <= disc.Nt; ++n) {
        auto row = m.row(n);
        const double lo = *std::min_element(row.begin(), row.end());
        if (lo < -1e-10) {
            msg << "density below -1e-10 (" << lo << ") at t=" << disc.t(n);
            return msg.str();
        }
        const double mass = trapezoid(row, disc);
        if (mass > 1.0 + 1e-8) {
            msg << "mass " << mass << " exceeds 1 at t=" << disc.t(n);
            return msg.str();
        }
        if (n > 0 && mass > prev_mass + step_tol) {
            msg << "mass increases by " << mass - prev_mass << " at t=" << disc.t(n);
            return msg.str();
        }
        prev_mass = mass;
    }
    return {};
}

}  // namespace mfgsens
