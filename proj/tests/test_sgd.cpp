#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sgdlab/sgd.hpp"

using namespace sgdlab;

namespace {
Problem quad() { return Problem{Family::quadratic, 1, 1.0, 0.5}; }

Vec vec1(double x) {
    Vec v(1);
    v[0] = x;
    return v;
}

Observable coord() { return coordinate_observable(0); }
}  // namespace

TEST_CASE("one gradient step by hand") {
    Vec x = vec1(1.0), xi = vec1(0.5), g(1);
    sgd_step(quad(), x, xi, 0.1, g);
    CHECK(x[0] == Catch::Approx(0.85).epsilon(1e-15));
    CHECK(g[0] == Catch::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("trajectories record x0 and every step") {
    Stream rng(1, 0);
    auto path = sgd_trajectory(quad(), vec1(1.0), 0.1, 50, rng);
    REQUIRE(path.size() == 51);
    CHECK(path[0][0] == 1.0);
    for (std::size_t k = 1; k < path.size(); ++k) {
        // increments are contraction plus bounded noise kick
        double pred = 0.9 * path[k - 1][0];
        CHECK(std::abs(path[k][0] - pred) <= 0.05 + 1e-15);
    }
}

TEST_CASE("ensemble mean of the coordinate matches the closed form") {
    // E X_n = (1 - eta mu)^n x0; at n = 10: 0.9^10
    ExpectationCurve c = expectation_curve(quad(), coord(), vec1(1.0), 0.1, 10, 65536, 42);
    REQUIRE(c.values.size() == 11);
    CHECK(c.values[0].value == 1.0);
    CHECK(c.values[0].std_error == 0.0);
    const Estimate& e = c.values[10];
    CHECK(e.n_samples == 65536);
    CHECK(e.std_error > 0.0);
    CHECK(e.std_error < 1e-3);
    CHECK(std::abs(e.value - 0.3486784401000001) < 4.0 * e.std_error);
}

TEST_CASE("ensemble second moment matches the closed form") {
    // E X_n^2 = r^n x0^2 + eta^2 s^2 (1 - r^n)/(1 - r), r = (1 - eta mu)^2
    ExpectationCurve c = expectation_curve(quad(), squared_norm_observable(), vec1(1.0), 0.1, 10,
                                           65536, 43);
    const Estimate& e = c.values[10];
    CHECK(std::abs(e.value - 0.13313485650385135) < 4.0 * e.std_error);
}

TEST_CASE("ensemble curves are bitwise identical across thread counts") {
    ExpectationCurve a = expectation_curve(quad(), coord(), vec1(0.7), 0.05, 20, 9000, 7, 1);
    ExpectationCurve b = expectation_curve(quad(), coord(), vec1(0.7), 0.05, 20, 9000, 7, 3);
    REQUIRE(a.values.size() == b.values.size());
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        CHECK(a.values[k].value == b.values[k].value);
        CHECK(a.values[k].std_error == b.values[k].std_error);
    }
}

TEST_CASE("endpoint estimator agrees with the curve and validates inputs") {
    Estimate e = estimate_U(quad(), coord(), vec1(1.0), 0.1, 5, 4000, 11);
    ExpectationCurve c = expectation_curve(quad(), coord(), vec1(1.0), 0.1, 5, 4000, 11);
    CHECK(e.value == c.values[5].value);
    CHECK(e.std_error == c.values[5].std_error);
    CHECK_THROWS_AS(estimate_U(quad(), coord(), vec1(1.0), 0.1, 5, 1, 11),
                    std::invalid_argument);
}

TEST_CASE("trap check refuses step sizes beyond the safe threshold") {
    CHECK_THROWS_WITH(trap_check(quad(), 2.0, 0.2, 10, 10, 0),
                      Catch::Matchers::ContainsSubstring("eta0") &&
                          Catch::Matchers::ContainsSubstring("force"));
}

TEST_CASE("no iterate escapes the ball at an admissible step size") {
    TrapReport r = trap_check(quad(), 2.0, 0.1, 2000, 2000, 5);
    CHECK(r.escapes == 0);
    CHECK(r.eta0 == Catch::Approx(0.16).epsilon(1e-12));
    CHECK(r.max_norm <= 2.0);
    CHECK(r.max_norm > 1.9);  // 2000 uniform draws crowd the boundary
}

TEST_CASE("escape counting tallies iterates, not paths") {
    // noise-free quadratic with eta = 3: x_{n+1} = -2 x_n, so iterate n escapes
    // B(0,2) exactly when |x_0| > 2^{1-n}; expected count per path is
    // P(>1) + P(>1/2) + P(>1/4) = 1/2 + 3/4 + 7/8 = 2.125
    Problem p{Family::quadratic, 1, 1.0, 0.0};
    TrapReport r = trap_check(p, 2.0, 3.0, 3, 4000, 9, 1, true);
    CHECK(r.escapes > 4000 * 2);       // far above one-per-path
    CHECK(r.escapes < 4000 * 3);       // but not every iterate
    CHECK(std::abs(static_cast<double>(r.escapes) - 4000 * 2.125) < 8.0 * std::sqrt(4000.0));
    CHECK(r.max_norm > 2.0);
    CHECK(r.max_norm <= 16.0 + 1e-12);

    TrapReport r3 = trap_check(p, 2.0, 3.0, 3, 4000, 9, 3, true);
    CHECK(r3.escapes == r.escapes);
    CHECK(r3.max_norm == r.max_norm);
}

TEST_CASE("uniform ball init spans the ball in higher dimension") {
    Problem p{Family::quadratic, 3, 1.0, 0.5};
    Stream rng(31, 0);
    Vec x(3);
    double maxr = 0.0, minr = 10.0, mean = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        detail::uniform_ball_into(3, 2.0, rng, x);
        double r = x.norm();
        REQUIRE(r <= 2.0 + 1e-12);
        maxr = std::max(maxr, r);
        minr = std::min(minr, r);
        mean += x[0];
    }
    CHECK(maxr > 1.99);
    CHECK(minr < 0.5);
    CHECK(std::abs(mean) / n < 4.0 * 1.0 / std::sqrt(static_cast<double>(n)));
}
