#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sgdlab/harness.hpp"

using namespace sgdlab;

namespace {
Problem quad() { return Problem{Family::quadratic, 1, 1.0, 0.5}; }
Problem trig() { return Problem{Family::trig, 1, 1.0, 2.0}; }
Problem dwell() { return Problem{Family::double_well, 1, 0.0, 0.5}; }
Cutoff qcut() { return Cutoff{2.0, 4.0}; }

WeakErrorOptions exact_opts() {
    WeakErrorOptions o;  // ou_exact vs closed_form defaults
    return o;
}
}  // namespace

TEST_CASE("closed-form chain expectations") {
    Observable co = coordinate_observable(0);
    CHECK(closed_form_U(quad(), co, 0.1, 10, 1.0) ==
          Catch::Approx(0.3486784401000001).epsilon(1e-14));
    CHECK(closed_form_U(quad(), squared_norm_observable(), 0.1, 10, 1.0) ==
          Catch::Approx(0.13313485650385135).epsilon(1e-13));
    // mean loss is half the second moment for mu = 1
    CHECK(closed_form_U(quad(), expected_loss_observable(), 0.1, 10, 1.0) ==
          Catch::Approx(0.5 * 0.13313485650385135).epsilon(1e-13));
    CHECK_THROWS_AS(closed_form_U(trig(), co, 0.1, 1, 1.0), std::invalid_argument);
}

TEST_CASE("closed-form diffusion expectations with and without correction") {
    Observable co = coordinate_observable(0);
    CHECK(closed_form_u(quad(), co, 0.1, true, 1.0, 1.0) ==
          Catch::Approx(std::exp(-1.05)).epsilon(1e-14));
    CHECK(closed_form_u(quad(), co, 0.1, false, 1.0, 1.0) ==
          Catch::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(closed_form_u(quad(), squared_norm_observable(), 0.1, true, 1.0, 1.0) ==
          Catch::Approx(0.1329033755356845).epsilon(1e-13));
}

TEST_CASE("weak error of the corrected pairing at a pinned configuration") {
    WeakErrorPoint pt = weak_error_point(quad(), qcut(), coordinate_observable(0), 0.1, 1.0,
                                         exact_opts());
    CHECK(pt.error == Catch::Approx(0.0012593090111552296).epsilon(1e-12));
    CHECK(pt.noise_budget == 0.0);
    CHECK(pt.usable);
}

TEST_CASE("error sup is monotone in the horizon") {
    WeakErrorOptions o = exact_opts();
    Observable co = coordinate_observable(0);
    double prev = 0.0;
    for (double T : {0.5, 1.0, 5.0, 20.0}) {
        WeakErrorPoint pt = weak_error_point(quad(), qcut(), co, 0.1, T, o);
        CHECK(pt.error >= prev - 1e-15);
        prev = pt.error;
    }
}

TEST_CASE("order fit over the pinned step ladder") {
    auto pts = weak_error_curve(quad(), qcut(), coordinate_observable(0),
                                {0.2, 0.1, 0.05, 0.025}, 50.0, exact_opts());
    OrderFit f = order_fit(pts);
    CHECK(f.slope == Catch::Approx(2.023759655711235).epsilon(1e-9));
    CHECK(f.r_squared == Catch::Approx(0.9999854845793704).epsilon(1e-9));
    CHECK_THROWS_AS(order_fit({pts[0], pts[1]}), std::invalid_argument);
}

TEST_CASE("dropping the drift correction degrades the order to one") {
    WeakErrorOptions o = exact_opts();
    o.corrected = false;
    auto pts = weak_error_curve(quad(), qcut(), coordinate_observable(0),
                                {0.2, 0.1, 0.05, 0.025}, 50.0, o);
    OrderFit f = order_fit(pts);
    CHECK(f.slope == Catch::Approx(1.0369854432447891).epsilon(1e-9));
}

TEST_CASE("grid transfer source doubles the sup through the wider node set") {
    WeakErrorOptions o = exact_opts();
    o.U_source = SourceKind::semigroup_grid;
    o.grid_points = 2049;
    WeakErrorPoint pt =
        weak_error_point(quad(), qcut(), coordinate_observable(0), 0.1, 1.0, o);
    // sup moves from the probes (|x| <= 1) to the grid edge node x = 2
    CHECK(pt.error == Catch::Approx(2.0 * 0.0012593090111552296).margin(1e-9));

    o.grid_sup = false;
    WeakErrorPoint probes_only =
        weak_error_point(quad(), qcut(), coordinate_observable(0), 0.1, 1.0, o);
    CHECK(probes_only.error == Catch::Approx(0.0012593090111552296).margin(1e-9));
}

TEST_CASE("pde source reproduces the exact-diffusion error curve") {
    WeakErrorOptions o = exact_opts();
    o.u_source = SourceKind::pde;
    WeakErrorPoint pde = weak_error_point(quad(), qcut(), coordinate_observable(0), 0.1, 1.0, o);
    WeakErrorPoint ou =
        weak_error_point(quad(), qcut(), coordinate_observable(0), 0.1, 1.0, exact_opts());
    CHECK(std::abs(pde.error - ou.error) / ou.error < 0.1);
}

TEST_CASE("probes must sit inside the confinement ball") {
    WeakErrorOptions o = exact_opts();
    o.probes = {0.0, 2.5};
    CHECK_THROWS_AS(weak_error_point(quad(), qcut(), coordinate_observable(0), 0.1, 1.0, o),
                    std::invalid_argument);
}

TEST_CASE("chain ensembles above the safe step size are refused") {
    WeakErrorOptions o = exact_opts();
    o.U_source = SourceKind::mc;
    CHECK_THROWS_AS(weak_error_point(quad(), qcut(), coordinate_observable(0), 0.2, 1.0, o),
                    std::domain_error);
}

TEST_CASE("noise budgets flag unusable points and empty curves") {
    WeakErrorOptions o = exact_opts();
    o.U_source = SourceKind::mc;
    o.mc_paths = 2000;  // noise floor far above the 1.3e-3 true error
    o.seed = 5;
    WeakErrorPoint pt = weak_error_point(quad(), qcut(), coordinate_observable(0), 0.1, 1.0, o);
    CHECK(pt.noise_budget > 0.0);
    CHECK_FALSE(pt.usable);
    CHECK_THROWS_AS(
        weak_error_curve(quad(), qcut(), coordinate_observable(0), {0.1}, 1.0, o),
        std::runtime_error);
}

TEST_CASE("uniformity ratios are exactly one on a saturated horizon") {
    UniformityResult r = uniformity_check(quad(), qcut(), coordinate_observable(0), 0.1,
                                          {5.0, 20.0, 20.0, 50.0}, exact_opts());
    REQUIRE(r.ratio.size() == 4);
    for (double v : r.ratio) CHECK(v == 1.0);
    CHECK_THROWS_AS(uniformity_check(quad(), qcut(), coordinate_observable(0), 0.1, {5.0, 1.0},
                                     exact_opts()),
                    std::invalid_argument);
}

TEST_CASE("one-step truncation defect follows the local error closed form") {
    auto r = truncation_check(quad(), qcut(), coordinate_observable(0), {0.2, 0.1, 0.05}, 0,
                              exact_opts());
    REQUIRE(r.residual.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        double eta = r.eta[k];
        double a = 1.0 + eta / 2.0;
        CHECK(r.residual[k] == Catch::Approx(std::abs(std::exp(-a * eta) - (1.0 - eta)))
                                   .epsilon(1e-10));
    }
    CHECK(r.fit.slope == Catch::Approx(2.968190466158738).epsilon(1e-6));
    CHECK_THROWS_AS(truncation_check(quad(), qcut(), coordinate_observable(0), {0.2, 0.1}, 0,
                                     exact_opts()),
                    std::invalid_argument);
}

TEST_CASE("horizon experiment runs the double well end to end") {
    WeakErrorOptions o;
    o.pde_n_x = 2049;
    auto hr = horizon_experiment(dwell(), Cutoff{1.5, 3.0}, expected_loss_observable(),
                                 {0.2, 0.1, 0.05}, 0.4, o);
    REQUIRE(hr.points.size() == 3);
    for (const HorizonPoint& pt : hr.points) {
        CHECK(pt.T_horizon == Catch::Approx(0.4 * std::log(1.0 / pt.eta)).epsilon(1e-12));
        CHECK_FALSE(pt.flagged);
        CHECK(pt.E_within > 0.0);
        CHECK(pt.E_beyond >= pt.E_within);
        CHECK(pt.escape_max_norm < 3.0);
        CHECK(pt.n_beyond >= 2 * pt.n_within - 1);
    }
    CHECK(std::isfinite(hr.within_fit.slope));
    CHECK_THROWS_AS(horizon_experiment(quad(), qcut(), expected_loss_observable(), {0.1}, 0.5,
                                       exact_opts()),
                    std::invalid_argument);
}
