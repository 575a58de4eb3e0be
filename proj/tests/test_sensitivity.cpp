#include "mfgsens/cascade.hpp"
#include "mfgsens/errors.hpp"
#include "mfgsens/sensitivity.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>

using namespace mfgsens;

namespace {

const Discretization kDefault;

const SensitivityReport& default_report() {
    static const SensitivityReport r = remainder_study(ModelParams{}, kDefault, SolveOptions{}, {0.0, 0.02, 0.04, 0.08}, 3);
    return r;
}

}  // namespace

TEST_CASE("one-sided stencils") {
    CHECK(one_sided_weights(1) == std::vector<double>{-1.5, 2.0, -0.5});
    CHECK(one_sided_weights(2) == std::vector<double>{2.0, -5.0, 4.0, -1.0});
    CHECK_THROWS_AS(one_sided_weights(3), InvalidInput);
    // exact up to degree 2 (k = 1) and degree 3 (k = 2)
    auto p2 = [](double e) { return 1.0 + 3.0 * e - 2.0 * e * e; };
    auto p3 = [](double e) { return 1.0 + 3.0 * e - 2.0 * e * e + 0.5 * e * e * e; };
    CHECK(one_sided_derivative(1, 0.1, p2) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(one_sided_derivative(2, 0.1, p3) == doctest::Approx(-4.0).epsilon(1e-12));
    auto beta = [](double e) { return e / (2.0 + e); };
    CHECK(std::abs(one_sided_derivative(1, 1e-3, beta) - 0.5) <= 1e-5);
}

TEST_CASE("stencil oracle vanishes when xi = 0") {
    ModelParams p;
    p.xi = TimeProfile::zero();
    for (int k : {1, 2}) {
        const auto [u, m] = fd_derivative_oracle(p, kDefault, SolveOptions{}, k, 0.02);
        CHECK(sup_abs(u) <= 1e-8);
        CHECK(sup_abs(m) <= 1e-8);
    }
    CHECK_THROWS_AS(fd_derivative_oracle(p, kDefault, SolveOptions{}, 3, 0.02), InvalidInput);
    CHECK_THROWS_AS(fd_derivative_oracle(p, kDefault, SolveOptions{}, 1, 0.0), InvalidInput);
}

TEST_CASE("stencil oracle is second order in delta") {
    SolveOptions o;
    o.tol = 1e-12;
    const ModelParams p;
    for (int k : {1, 2}) {
        const auto a = fd_derivative_oracle(p, kDefault, o, k, 0.04);
        const auto b = fd_derivative_oracle(p, kDefault, o, k, 0.02);
        const auto c = fd_derivative_oracle(p, kDefault, o, k, 0.01);
        CAPTURE(k);
        CHECK(sup_distance(a.first, b.first) / sup_distance(b.first, c.first) >= 3.0);
        CHECK(sup_distance(a.second, b.second) / sup_distance(b.second, c.second) >= 3.0);
    }
}

TEST_CASE("log-log slope of an exact power law") {
    CHECK(fit_loglog_slope({0.1, 0.2, 0.4}, {3e-3 * std::pow(0.1, 1.5), 3e-3 * std::pow(0.2, 1.5), 3e-3 * std::pow(0.4, 1.5)}) ==
          doctest::Approx(1.5));
    CHECK_THROWS_AS(fit_loglog_slope({1.0}, {1.0}), InvalidInput);
}

TEST_CASE("remainder study on defaults") {
    const SensitivityReport& r = default_report();
    CHECK(r.complete);
    CHECK(r.orders == std::vector<int>{0, 1, 2, 3});
    // every (field, k, epsilon, norm) is present
    CHECK(r.errors.size() == 2u * 4u * 4u * 3u);
    for (const char* f : {"u", "m"})
        for (int k = 0; k <= 3; ++k)
            for (const auto& nn : norm_names()) CHECK(r.errors.at({f, k, 0, nn}) == 0.0);

    CHECK(r.slopes.at({"u", 0, "sup_val"}) == doctest::Approx(1.0).epsilon(0.4));
    CHECK(r.slopes.at({"u", 1, "sup_val"}) == doctest::Approx(2.0).epsilon(0.2));
    const double s2 = r.slopes.at({"u", 2, "sup_val"});
    CHECK(s2 >= 2.4);
    CHECK(s2 <= 3.4);
    CHECK(r.fit_points.at({"u", 0, "sup_val"}) == 3);

    // higher partial sums approximate better at small epsilon
    for (const char* f : {"u", "m"})
        for (int e : {1, 2})
            for (const auto& nn : norm_names())
                for (int k = 0; k < 3; ++k) CHECK(r.errors.at({f, k + 1, e, nn}) <= r.errors.at({f, k, e, nn}));

    CHECK(r.coefficient_sup_norms.size() == 4);
    CHECK(r.noise_floor > 0.0);
    CHECK(r.noise_floor <= 100.0 * 1e-10);
    CHECK(std::isfinite(r.log_epsilon0));
    CHECK(r.log_epsilon0 < -100.0);
}

TEST_CASE("remainder study is independent of the worker count") {
    const ModelParams p;
    const auto d = Discretization::make(12, 1, 120, 120);
    const std::vector<double> eps{0.02, 0.04, 0.08};
    StudyOptions one, four;
    four.threads = 4;
    const SensitivityReport a = remainder_study(p, d, SolveOptions{}, eps, 2, one);
    const SensitivityReport b = remainder_study(p, d, SolveOptions{}, eps, 2, four);
    CHECK(a.errors == b.errors);
    CHECK(a.noise_floor == b.noise_floor);
}

TEST_CASE("remainder study input validation") {
    const ModelParams p;
    const auto d = Discretization::make(12, 1, 60, 60);
    const SolveOptions o;
    CHECK_THROWS_AS(remainder_study(p, d, o, {}, 1), InvalidInput);
    CHECK_THROWS_AS(remainder_study(p, d, o, {0.04, 0.02, 0.08}, 1), InvalidInput);
    CHECK_THROWS_AS(remainder_study(p, d, o, {-0.01, 0.02, 0.08}, 1), InvalidInput);
    CHECK_THROWS_AS(remainder_study(p, d, o, {0.02, 0.03, 0.05}, 1), InvalidInput);
    const TaylorTable t = build_cascade(p, d, o, 1);
    CHECK_THROWS_AS(remainder_study(p, d, o, {0.02, 0.04, 0.08}, 2, t), InvalidInput);
}

TEST_CASE("a failing full solve yields an incomplete report") {
    const ModelParams p;
    const auto d = Discretization::make(12, 1, 60, 60);
    const TaylorTable t = build_cascade(p, d, SolveOptions{}, 1);
    SolveOptions starved;
    starved.max_iter = 1;
    const SensitivityReport r = remainder_study(p, d, starved, {0.0, 0.02, 0.04, 0.08}, 1, t);
    CHECK_FALSE(r.complete);
    CHECK_FALSE(r.failure.empty());
    CHECK(r.errors.count({"u", 1, 0, "sup_val"}) == 1);
    CHECK(std::isnan(r.slopes.at({"u", 1, "sup_val"})));
}

TEST_CASE("epsilon0 constants and closed-form cases") {
    CHECK(heat_constant(1.0) == doctest::Approx(1.5958).epsilon(1e-4));
    // the 1/10 cap inverts beta to 2/9
    const double capped = estimate_log_epsilon0(1.0, 1e-6, 0.0, 0.01);
    CHECK(capped == doctest::Approx(std::log(2.0 / 9.0)).epsilon(1e-14));
    // ln(2/9); -2.1972 would be ln(1/9)
    CHECK(capped == doctest::Approx(-1.5041).epsilon(1e-4));

    const double C0 = energy_constant(1.0, 0.0);
    CHECK(C0 == doctest::Approx(384.0 * 4.0 / std::sqrt(2.0 * std::numbers::pi) * std::log(2.0)));
    CHECK(C0 == doctest::Approx(424.8).epsilon(1e-3));
    const double expect = std::log(2.0) + std::log(1.0 / 96.0) - 2.0 * C0;
    CHECK(estimate_log_epsilon0(1.0, 1.0, 0.0, 1.0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect == doctest::Approx(-853.36).epsilon(1e-4));
}

TEST_CASE("epsilon0 is monotone and never overflows") {
    for (double U : {0.0, 0.3, 1.0, 4.0})
        for (double T : {0.1, 1.0, 3.0}) {
            const double v = estimate_log_epsilon0(1.0, T, U, 0.5);
            CHECK(estimate_log_epsilon0(1.0, T, U * 1.5 + 0.1, 0.5) <= v);
            CHECK(estimate_log_epsilon0(1.0, T * 2.0, U, 0.5) <= v);
        }
    for (double U : {0.0, 1.0, 1e3}) {
        const double T = 1e6 / energy_constant(1.0, U);
        const double v = estimate_log_epsilon0(1.0, T, U, 0.5);
        CHECK(std::isfinite(v));
        CHECK(v < -1e6);
    }
}

TEST_CASE("epsilon0 from fields uses the sup norms of u_x and F") {
    const TaylorTable t = build_cascade(ModelParams{}, kDefault, SolveOptions{}, 0);
    const double from_fields = estimate_log_epsilon0(t.u[0], t.F0, t.base_params, kDefault);
    const double scalar = estimate_log_epsilon0(1.0, 1.0, sup_abs(diff_x(t.u[0])), sup_abs(t.F0));
    CHECK(from_fields == scalar);
}

TEST_CASE("parallel_for visits every index and rethrows") {
    std::vector<std::atomic<int>> hits(37);
    parallel_for(37, 4, [&](int i) { hits[static_cast<std::size_t>(i)]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(10, 3, [](int i) {
                        if (i == 7) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
}
