// Acceptance gate: runs the pinned experiment configurations end to end and
// prints one PASS/FAIL line per criterion. Exits nonzero if any line fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "sgdlab/harness.hpp"
#include "sgdlab/kolmogorov.hpp"
#include "sgdlab/sde.hpp"

using namespace sgdlab;

namespace {

int g_failures = 0;

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void report(const std::string& id, bool ok, double seconds, const std::string& detail) {
    std::printf("%s %-38s (%6.1fs) %s\n", ok ? "PASS" : "FAIL", id.c_str(), seconds,
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

template <class Fn>
void criterion(const std::string& id, Fn&& fn) {
    double t0 = now_seconds();
    bool ok = false;
    std::string detail;
    try {
        ok = fn(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    report(id, ok, now_seconds() - t0, detail);
}

Problem quad() { return Problem{Family::quadratic, 1, 1.0, 0.5}; }
Problem osc() { return Problem{Family::trig, 1, 1.0, 2.0}; }
Problem dwell() { return Problem{Family::double_well, 1, 0.0, 0.5}; }
Cutoff qcut() { return Cutoff{2.0, 4.0}; }
Cutoff ocut() { return Cutoff{6.0, 12.0}; }
Cutoff wcut() { return Cutoff{1.5, 3.0}; }

const std::vector<double> kQuadEtas = {0.2, 0.1, 0.05, 0.025};
const std::vector<double> kOscEtas = {0.2, 0.1, 0.05};

WeakErrorOptions quad_opts() {
    WeakErrorOptions o;  // ou_exact against closed_form on probes {0, ±0.5, ±1}
    return o;
}

WeakErrorOptions osc_opts() {
    WeakErrorOptions o;
    o.u_source = SourceKind::pde;
    o.U_source = SourceKind::semigroup_grid;
    o.probes = {0.0, 0.75, -0.75, 1.5, -1.5};
    o.grid_points = 4097;
    o.pde_B = 13.0;
    o.pde_n_x = 4097;
    o.pde_dt = 1e-3;
    return o;
}

std::string fitline(const OrderFit& f) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "slope %.3f r2 %.5f", f.slope, f.r_squared);
    return buf;
}

}  // namespace

int main() {
    std::vector<WeakErrorPoint> c1_points;  // reused by the source-independence rerun

    criterion("1 second-order weak error", [&](std::string& d) {
        auto pts = weak_error_curve(quad(), qcut(), coordinate_observable(0), kQuadEtas, 50.0,
                                    quad_opts());
        OrderFit f = order_fit(pts);
        auto pts2 = weak_error_curve(quad(), qcut(), squared_norm_observable(), kQuadEtas, 50.0,
                                     quad_opts());
        OrderFit f2 = order_fit(pts2);
        c1_points = pts;
        d = "coordinate " + fitline(f) + "; squared_norm " + fitline(f2);
        return f.slope >= 1.9 && f.slope <= 2.1 && f.r_squared >= 0.999 && f2.slope >= 1.9 &&
               f2.slope <= 2.1;
    });

    criterion("2 horizon-uniform error", [&](std::string& d) {
        UniformityResult r = uniformity_check(quad(), qcut(), coordinate_observable(0), 0.1,
                                              {5.0, 20.0, 50.0}, quad_opts());
        char buf[96];
        std::snprintf(buf, sizeof buf, "E(20)/E(5) = %.4f, E(50)/E(5) = %.4f", r.ratio[1],
                      r.ratio[2]);
        d = buf;
        return r.ratio[1] <= 1.05 && r.ratio[2] <= 1.05;
    });

    criterion("3 oscillatory second order", [&](std::string& d) {
        auto pts = weak_error_curve(osc(), ocut(), expected_loss_observable(), kOscEtas, 20.0,
                                    osc_opts());
        OrderFit f = order_fit(pts);
        d = fitline(f);
        return f.slope >= 1.7 && f.slope <= 2.3;
    });

    criterion("4 uncorrected drift is first order", [&](std::string& d) {
        WeakErrorOptions o = quad_opts();
        o.corrected = false;
        auto pts = weak_error_curve(quad(), qcut(), coordinate_observable(0), kQuadEtas, 50.0, o);
        OrderFit f = order_fit(pts);
        d = fitline(f);
        return f.slope >= 0.8 && f.slope <= 1.2;
    });

    criterion("5 no escape from the trap ball", [&](std::string& d) {
        TrapReport r = trap_check(quad(), 2.0, 0.1, 10000, 100000, 2024);
        char buf[96];
        std::snprintf(buf, sizeof buf, "escapes %lld, max |X| %.6f",
                      static_cast<long long>(r.escapes), r.max_norm);
        d = buf;
        return r.escapes == 0;
    });

    criterion("6 third-order one-step defect", [&](std::string& d) {
        auto r = truncation_check(quad(), qcut(), coordinate_observable(0), kOscEtas, 0,
                                  quad_opts());
        d = fitline(r.fit);
        return r.fit.slope >= 2.7 && r.fit.slope <= 3.3;
    });

    criterion("7 moment envelope decay", [&](std::string& d) {
        SdeConfig cfg;
        cfg.eta = 0.1;
        cfg.h = 0.01;
        cfg.T = 20.0;
        cfg.x0 = Vec::Constant(1, 3.0);
        cfg.seed = 7;
        SdeCurve m = moment_curve(osc(), ocut(), cfg, 10000, 1);
        std::vector<double> vals;
        for (const Estimate& e : m.values) vals.push_back(e.value);
        EnvelopeFit f = fit_envelope(m.t, vals, 9.0);
        char buf[96];
        std::snprintf(buf, sizeof buf, "gamma %.3f, max excess %.3f%%", f.gamma,
                      100.0 * f.max_excess);
        d = buf;
        return f.gamma > 0.3 && f.max_excess <= 0.05;
    });

    criterion("8 derivative decay rates", [&](std::string& d) {
        PdeConfig qc;
        qc.B = 4.4;
        qc.n_x = 4097;
        qc.dt = 1e-3;
        qc.T = 5.0;
        qc.record_every = 20;
        ScalarField fq = solve_kolmogorov(quad(), qcut(), 0.1, coordinate_observable(0), qc);
        DecayFit dq = decay_fit(derivative_sup_series(fq, 1, 2.0), 1.0);

        PdeConfig tc;
        tc.B = 13.0;
        tc.n_x = 4097;
        tc.dt = 1e-3;
        tc.T = 5.0;
        tc.record_every = 20;
        ScalarField ft = solve_kolmogorov(osc(), ocut(), 0.1, coordinate_observable(0), tc);
        DecayFit dt_fit = decay_fit(derivative_sup_series(ft, 1, 6.0), 1.0);

        char buf[96];
        std::snprintf(buf, sizeof buf, "quadratic gamma %.4f (target 1.05), trig gamma %.4f",
                      dq.gamma, dt_fit.gamma);
        d = buf;
        return std::abs(dq.gamma - 1.05) <= 0.05 * 1.05 && dt_fit.gamma > 0.0;
    });

    criterion("9 diffusion stays confined", [&](std::string& d) {
        SdeConfig cfg;
        cfg.eta = 0.2;
        cfg.h = 1e-3;
        cfg.T = 50.0;
        cfg.x0 = Vec::Constant(1, 3.0);
        cfg.seed = 9;
        PathStats st = confinement_check(osc(), ocut(), cfg, 10000);
        char buf[128];
        std::snprintf(buf, sizeof buf, "exceedances %lld of %lld points, max |X| %.4f vs %.4f",
                      static_cast<long long>(st.exceedances),
                      static_cast<long long>(st.points), st.max_norm, st.threshold);
        d = buf;
        return st.exceedances == 0;
    });

    criterion("10 metastable horizon scaling", [&](std::string& d) {
        WeakErrorOptions o;
        o.grid_points = 4097;
        o.pde_B = 3.2;
        o.pde_n_x = 8193;
        o.pde_dt = 5e-4;
        HorizonResult hr = horizon_experiment(dwell(), wcut(), expected_loss_observable(),
                                              kQuadEtas, 0.5, o);
        bool dominated = true, unflagged = true;
        for (const HorizonPoint& pt : hr.points) {
            dominated = dominated && pt.E_beyond >= pt.E_within;
            unflagged = unflagged && !pt.flagged;
        }
        d = "within " + fitline(hr.within_fit) +
            (dominated ? ", beyond dominates" : ", beyond fell below within");
        if (!unflagged) d += ", escape flagged";
        return hr.within_fit.slope >= 1.7 && dominated && unflagged;
    });

    criterion("11 source independence", [&](std::string& d) {
        // (a) swapping the exact diffusion for the solved field moves no point by 10%
        WeakErrorOptions o = quad_opts();
        o.u_source = SourceKind::pde;
        auto pde_pts =
            weak_error_curve(quad(), qcut(), coordinate_observable(0), kQuadEtas, 50.0, o);
        double worst = 0.0;
        for (std::size_t k = 0; k < pde_pts.size(); ++k)
            worst = std::max(worst, std::abs(pde_pts[k].error - c1_points[k].error) /
                                        c1_points[k].error);

        // (b) chain ensembles against the grid transfer, probe set only, at the
        // coarsest oscillatory step where the error clears the noise floor
        WeakErrorOptions grid = osc_opts();
        grid.grid_sup = false;
        WeakErrorPoint gp = weak_error_point(osc(), ocut(), expected_loss_observable(), 0.2,
                                             20.0, grid);
        WeakErrorOptions mc = osc_opts();
        mc.grid_sup = false;
        mc.U_source = SourceKind::mc;
        mc.mc_paths = 1000000;
        mc.seed = 11;
        WeakErrorPoint mp = weak_error_point(osc(), ocut(), expected_loss_observable(), 0.2,
                                             20.0, mc);
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "pde shift max %.2f%%; |E_mc - E_grid| = %.2e vs budget %.2e%s",
                      100.0 * worst, std::abs(mp.error - gp.error), mp.noise_budget,
                      mp.usable ? "" : " (budget-limited point)");
        d = buf;
        return worst < 0.10 && std::abs(mp.error - gp.error) <= mp.noise_budget;
    });

    std::printf("%s: %d criterion(s) failed\n", g_failures == 0 ? "ALL PASS" : "GATE FAILED",
                g_failures);
    return g_failures == 0 ? 0 : 1;
}
