#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sgdlab/semigroup.hpp"
#include "sgdlab/sgd.hpp"

using namespace sgdlab;

namespace {
Problem quad() { return Problem{Family::quadratic, 1, 1.0, 0.5}; }
Problem trig() { return Problem{Family::trig, 1, 1.0, 2.0}; }

Vec vec1(double x) {
    Vec v(1);
    v[0] = x;
    return v;
}
}  // namespace

TEST_CASE("constants are fixed points of the transfer operator") {
    UniformGrid g = symmetric_grid(2.0, 129);
    TransferOperator S(quad(), g, 0.1);
    Vec ones = Vec::Constant(g.n, 3.25);
    Vec out = S.apply(ones);
    for (int i = 0; i < g.n; ++i) CHECK(out[i] == Catch::Approx(3.25).epsilon(1e-14));
}

TEST_CASE("linear observables contract exactly on the quadratic family") {
    // E[x - eta(mu x + xi)] = (1 - eta mu) x and cubic interpolation is exact
    // on linear data, so one application is the closed form to round-off
    UniformGrid g = symmetric_grid(2.0, 257);
    TransferOperator S(quad(), g, 0.1);
    Vec id = sample_on_grid(coordinate_observable(0), quad(), g);
    Vec out = S.apply(id);
    for (int i = 0; i < g.n; ++i)
        CHECK(out[i] == Catch::Approx(0.9 * g.x(i)).margin(1e-13));
}

TEST_CASE("iterated coordinate and squared norm match chain closed forms") {
    UniformGrid g = symmetric_grid(2.0, 257);  // spacing 2^-6, node at x = 1 exactly
    TransferOperator S(quad(), g, 0.1);
    int node = nearest_node(g, 1.0);
    REQUIRE(g.x(node) == 1.0);

    Vec u = S.iterate(sample_on_grid(coordinate_observable(0), quad(), g), 10);
    CHECK(u[node] == Catch::Approx(0.3486784401000001).margin(1e-12));

    Vec w = S.iterate(sample_on_grid(squared_norm_observable(), quad(), g), 10);
    CHECK(w[node] == Catch::Approx(0.13313485650385135).margin(1e-12));
}

TEST_CASE("the visitor sees the initial data and every epoch") {
    UniformGrid g = symmetric_grid(2.0, 65);
    TransferOperator S(quad(), g, 0.1);
    std::int64_t calls = 0;
    double sup_prev = 0.0;
    S.iterate(sample_on_grid(coordinate_observable(0), quad(), g), 7,
              [&](std::int64_t n, const Vec& u) {
                  double sup = u.cwiseAbs().maxCoeff();
                  if (n == 0) CHECK(sup == Catch::Approx(2.0).epsilon(1e-14));
                  if (n > 0) CHECK(sup <= sup_prev * (1.0 + 1e-12));
                  sup_prev = sup;
                  CHECK(n == calls);
                  ++calls;
              });
    CHECK(calls == 8);
}

TEST_CASE("grid transfer agrees with chain ensembles on the oscillatory family") {
    UniformGrid g = symmetric_grid(6.0, 2049);  // h = 3 * 2^-9, nodes at multiples
    TransferOperator S(trig(), g, 0.1);
    Vec u = S.iterate(sample_on_grid(coordinate_observable(0), trig(), g), 10);
    for (double x : {0.0, 0.75, -0.75, 1.5, -1.5}) {
        int node = nearest_node(g, x);
        REQUIRE(g.x(node) == x);
        Estimate e = estimate_U(trig(), coordinate_observable(0), vec1(x), 0.1, 10, 200000, 99);
        INFO("probe " << x);
        CHECK(std::abs(u[node] - e.value) < 4.0 * e.std_error);
    }
}

TEST_CASE("grid refinement no longer moves the answer") {
    Vec probes(5);
    probes << 0.0, 0.75, -0.75, 1.5, -1.5;
    double coarse[5], fine[5];
    for (int pass = 0; pass < 2; ++pass) {
        int n = pass == 0 ? 2049 : 4097;
        UniformGrid g = symmetric_grid(6.0, n);
        TransferOperator S(trig(), g, 0.05);
        Vec u = S.iterate(sample_on_grid(coordinate_observable(0), trig(), g), 400);
        for (int k = 0; k < 5; ++k)
            (pass == 0 ? coarse : fine)[k] = cubic_interp(g, u, probes[k]);
    }
    for (int k = 0; k < 5; ++k) CHECK(std::abs(fine[k] - coarse[k]) < 1e-8);
}

TEST_CASE("post-step points leaving the grid are refused at build time") {
    UniformGrid g = symmetric_grid(2.0, 65);
    CHECK_THROWS_AS(TransferOperator(quad(), g, 2.5), std::domain_error);
    CHECK_THROWS_WITH(TransferOperator(quad(), g, 2.5),
                      Catch::Matchers::ContainsSubstring("leaves the grid"));
}

TEST_CASE("quadrature node count is converged for the oscillatory family") {
    UniformGrid g = symmetric_grid(6.0, 1025);
    TransferOperator a(trig(), g, 0.1, 64);
    TransferOperator b(trig(), g, 0.1, 128);
    Vec u0 = sample_on_grid(coordinate_observable(0), trig(), g);
    Vec ua = a.iterate(u0, 50);
    Vec ub = b.iterate(u0, 50);
    CHECK((ua - ub).cwiseAbs().maxCoeff() < 1e-11);
}
