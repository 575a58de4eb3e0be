#include "mfgsens/errors.hpp"
#include "mfgsens/grid.hpp"
#include "mfgsens/model.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace mfgsens;

namespace {

Row sample(const Discretization& d, double (*f)(double)) {
    Row r(d.nodes());
    for (int i = 0; i <= d.Nx; ++i) r[static_cast<std::size_t>(i)] = f(d.x(i));
    return r;
}

double max_abs_diff(const Row& a, const Row& b) {
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
    return e;
}

}  // namespace

TEST_CASE("discretization validates counts and extent") {
    CHECK_THROWS_AS(Discretization::make(12, 1, 7, 20), InvalidInput);
    CHECK_THROWS_AS(Discretization::make(12, 1, 20, 7), InvalidInput);
    CHECK_THROWS_AS(Discretization::make(0, 1, 20, 20), InvalidInput);
    const auto d = Discretization::make(12, 2, 24, 40);
    CHECK(d.dx() == doctest::Approx(0.5));
    CHECK(d.dt() == doctest::Approx(0.05));
    CHECK(d.x(24) == doctest::Approx(12.0));
    CHECK(d.refined(2).Nx == 48);
}

TEST_CASE("trapezoid: constants, gamma density, zero row") {
    const auto d10 = Discretization::make(10, 1, 50, 8);
    CHECK(trapezoid(Row(d10.nodes(), 1.0), d10) == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(trapezoid(Row(d10.nodes(), 0.0), d10) == 0.0);

    const auto d = Discretization::make(12, 1, 240, 8);
    const double q = trapezoid(FunctionSpec::gamma4(1.0).sample(d), d);
    // tail of x^3 e^{-x} / 6 beyond 12 in closed form
    const double exact = 1.0 - std::exp(-12.0) * (1728.0 + 432.0 + 72.0 + 6.0) / 6.0;
    CHECK(q == doctest::Approx(0.9977).epsilon(2e-3));
    CHECK(std::abs(q - exact) < 1e-4);
}

TEST_CASE("trapezoid is linear and monotone") {
    const auto d = Discretization::make(5, 1, 40, 8);
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int trial = 0; trial < 20; ++trial) {
        Row f(d.nodes()), g(d.nodes()), h(d.nodes());
        const double a = U(gen), b = U(gen);
        for (std::size_t i = 0; i < f.size(); ++i) {
            f[i] = U(gen);
            g[i] = U(gen);
            h[i] = a * f[i] + b * g[i];
        }
        CHECK(trapezoid(h, d) == doctest::Approx(a * trapezoid(f, d) + b * trapezoid(g, d)).epsilon(1e-12));
        for (double& v : f) v = std::abs(v);
        CHECK(trapezoid(f, d) >= 0.0);
    }
    CHECK_THROWS_AS(trapezoid(Row(3, 1.0), d), InvalidInput);
}

TEST_CASE("diff_x is exact on affine and quadratic rows") {
    const auto d = Discretization::make(3, 1, 30, 8);
    const Row lin = sample(d, [](double x) { return 2.0 + x; });
    const Row quad = sample(d, [](double x) { return x * x; });
    const Row cst = sample(d, [](double) { return 4.2; });
    CHECK(max_abs_diff(diff_x(lin, d), Row(d.nodes(), 1.0)) < 1e-12);
    CHECK(max_abs_diff(diff_x(quad, d), sample(d, [](double x) { return 2.0 * x; })) < 1e-12);
    CHECK(max_abs_diff(diff_x(cst, d), Row(d.nodes(), 0.0)) < 1e-12);
}

TEST_CASE("diff_x converges at second order on sin") {
    auto err = [](int N) {
        const auto d = Discretization::make(3, 1, N, 8);
        return max_abs_diff(diff_x(sample(d, [](double x) { return std::sin(x); }), d),
                            sample(d, [](double x) { return std::cos(x); }));
    };
    CHECK(err(40) / err(80) >= 3.5);
    CHECK(err(80) / err(160) >= 3.5);
}

TEST_CASE("discrete_norms on reference fields") {
    const auto d = Discretization::make(12, 1, 240, 10);
    const NormTriple z = discrete_norms(Field(d));
    CHECK(z.sup_val == 0.0);
    CHECK(z.sup_dx == 0.0);
    CHECK(z.sup_dxx == 0.0);

    Field lin(d), bump(d);
    for (int n = 0; n <= d.Nt; ++n)
        for (int i = 0; i <= d.Nx; ++i) {
            lin(n, i) = d.x(i);
            bump(n, i) = d.x(i) * std::exp(-d.x(i) * d.x(i));
        }
    const NormTriple nl = discrete_norms(lin);
    CHECK(nl.sup_val == doctest::Approx(12.0));
    CHECK(nl.sup_dx == doctest::Approx(1.0));
    CHECK(nl.sup_dxx < 1e-10);
    CHECK(discrete_norms(bump).sup_val == doctest::Approx(1.0 / std::sqrt(2.0 * std::exp(1.0))).epsilon(1e-3));
}

TEST_CASE("discrete_norms is subadditive") {
    const auto d = Discretization::make(4, 1, 32, 8);
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int trial = 0; trial < 10; ++trial) {
        Field a(d), b(d);
        for (double& v : a.values()) v = U(gen);
        for (double& v : b.values()) v = U(gen);
        const NormTriple na = discrete_norms(a), nb = discrete_norms(b), ns = discrete_norms(a + b);
        CHECK(ns.sup_val <= na.sup_val + nb.sup_val + 1e-12);
        CHECK(ns.sup_dx <= na.sup_dx + nb.sup_dx + 1e-12);
        CHECK(ns.sup_dxx <= na.sup_dxx + nb.sup_dxx + 1e-12);
    }
}

TEST_CASE("field arithmetic and finiteness") {
    const auto d = Discretization::make(1, 1, 8, 8);
    Field a(d, 1.0), b(d, 2.0);
    CHECK(sup_distance(a + b, Field(d, 3.0)) == 0.0);
    CHECK(sup_distance(2.0 * a - b, Field(d)) == 0.0);
    a.axpy(0.5, b);
    CHECK(a(3, 4) == 2.0);
    CHECK(a.all_finite());
    a(0, 0) = std::nan("");
    CHECK_FALSE(a.all_finite());
    CHECK_THROWS_AS(a += Field(Discretization::make(1, 1, 16, 8)), InvalidInput);
}

TEST_CASE("refined sup finds an off-node peak") {
    const auto d = Discretization::make(4, 1, 20, 20);
    Field f(d);
    for (int n = 0; n <= d.Nt; ++n)
        for (int i = 0; i <= d.Nx; ++i) {
            const double x = d.x(i) - 1.93, t = d.t(n) - 0.47;
            f(n, i) = std::exp(-x * x - 4.0 * t * t);
        }
    CHECK(std::abs(sup_abs_refined(f) - 1.0) < std::abs(sup_abs(f) - 1.0) / 5.0);
    CHECK(sup_abs_refined(Field(d)) == 0.0);
}

TEST_CASE("field csv round trip is exact") {
    const auto d = Discretization::make(2, 1, 8, 8);
    Field f(d);
    for (int n = 0; n <= d.Nt; ++n)
        for (int i = 0; i <= d.Nx; ++i) f(n, i) = std::sin(0.1 + n * 0.37 + i * 1.13) / 3.0;
    std::stringstream ss;
    write_field_csv(ss, f);
    std::string header;
    std::getline(std::istringstream(ss.str()), header);
    CHECK(header == "t,x,value");
    const Field g = read_field_csv(ss, d);
    CHECK(sup_distance(f, g) == 0.0);
}
