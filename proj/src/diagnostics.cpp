#include "mfgsens/diagnostics.hpp"

#include "mfgsens/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace mfgsens {

double DiagnosticSeries::sup() const noexcept { return sup_abs(values); }

namespace {

Row time_nodes(const Discretization& disc) {
    Row t(disc.steps());
    for (int n = 0; n <= disc.Nt; ++n) t[n] = disc.t(n);
    return t;
}

double time_trapezoid(std::span<const double> v, double dt) {
    double s = 0.5 * (v.front() + v.back());
    for (std::size_t n = 1; n + 1 < v.size(); ++n) s += v[n];
    return s * dt;
}

}  // namespace

DiagnosticSeries duality_residual(const MFGSolution& base, const LinearizedSolution& lin,
                                  const Field& Psi, const Field& Phi, const ModelParams& params,
                                  const Discretization& disc) {
    for (const Field* f : {&base.u, &base.m, &base.F, &lin.w, &lin.mu, &Psi, &Phi})
        if (!(f->disc() == disc)) throw InvalidInput("duality_residual: field shape mismatch");
    if (lin.G.size() != disc.steps()) throw InvalidInput("duality_residual: G needs Nt+1 values");

    const std::size_t nx = disc.nodes();
    const int Nt = disc.Nt;
    const double dt = disc.dt();
    Row pairing(disc.steps()), rhs(disc.steps()), integrand(nx), prod(nx);
    for (int n = 0; n <= Nt; ++n) {
        const double disc_factor = std::exp(-params.r * disc.t(n));
        const Row wx = diff_x(lin.w.row(n), disc);
        const double G = lin.G[n];
        for (std::size_t i = 0; i < nx; ++i) {
            const int ii = static_cast<int>(i);
            const double mu = lin.mu(n, ii);
            prod[i] = lin.w(n, ii) * mu;
            integrand[i] = base.F(n, ii) * G * mu + Psi(n, ii) * mu + Phi(n, ii) * wx[i] +
                           0.5 * wx[i] * (G - wx[i]) * base.m(n, ii);
        }
        pairing[n] = disc_factor * trapezoid(prod, disc);
        rhs[n] = disc_factor * trapezoid(integrand, disc);
    }

    DiagnosticSeries out{"duality_residual", time_nodes(disc), Row(disc.steps()), std::nullopt};
    for (int n = 0; n <= Nt; ++n) {
        double ddt;
        if (n == 0)
            ddt = (-3.0 * pairing[0] + 4.0 * pairing[1] - pairing[2]) / (2.0 * dt);
        else if (n == Nt)
            ddt = (3.0 * pairing[Nt] - 4.0 * pairing[Nt - 1] + pairing[Nt - 2]) / (2.0 * dt);
        else
            ddt = (pairing[n + 1] - pairing[n - 1]) / (2.0 * dt);
        out.values[n] = ddt + rhs[n];
    }
    return out;
}

MassMoment mass_and_moment(const Field& f, const Discretization& disc) {
    if (!(f.disc() == disc)) throw InvalidInput("mass_and_moment: field shape mismatch");
    const Row t = time_nodes(disc);
    MassMoment mm{{"mass", t, Row(disc.steps()), std::nullopt},
                  {"moment", t, Row(disc.steps()), std::nullopt},
                  {"l1", t, Row(disc.steps()), std::nullopt}};
    Row xa(disc.nodes()), a(disc.nodes());
    for (int n = 0; n <= disc.Nt; ++n) {
        auto row = f.row(n);
        for (int i = 0; i <= disc.Nx; ++i) {
            a[i] = std::abs(row[i]);
            xa[i] = disc.x(i) * a[i];
        }
        mm.mass.values[n] = trapezoid(row, disc);
        mm.moment.values[n] = trapezoid(xa, disc);
        mm.l1.values[n] = trapezoid(a, disc);
    }
    return mm;
}

DiagnosticSeries energy_series(const Field& w, const Field& m0, const ModelParams& params,
                               const Discretization& disc) {
    if (!(w.disc() == disc) || !(m0.disc() == disc))
        throw InvalidInput("energy_series: field shape mismatch");
    DiagnosticSeries out{"energy", time_nodes(disc), Row(disc.steps()), std::nullopt};
    Row integrand(disc.nodes());
    for (int n = 0; n <= disc.Nt; ++n) {
        const Row wx = diff_x(w.row(n), disc);
        for (int i = 0; i <= disc.Nx; ++i) integrand[i] = wx[i] * wx[i] * m0(n, i);
        out.values[n] = std::exp(-params.r * disc.t(n)) * trapezoid(integrand, disc);
    }
    out.total = time_trapezoid(out.values, disc.dt());
    return out;
}

void write_series_csv(std::ostream& os, const std::vector<DiagnosticSeries>& series) {
    os << "name,t,value\n";
    char buf[128];
    for (const auto& s : series) {
        for (std::size_t n = 0; n < s.values.size(); ++n) {
            std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", s.times[n], s.values[n]);
            os << s.name << buf;
        }
    }
}

}  // namespace mfgsens
