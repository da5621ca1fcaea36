#pragma once

// Quantitative experiments: weak-error curves between the chain expectation
// U^n(x) and the diffusion-side u(x, n eta) with sup over epochs and a probe
// set, order fits, uniformity-in-time ratios, one-step truncation order, and
// the nonconvex log-horizon study.
//
// Either side can come from closed forms, the grid semigroup, the PDE solver,
// or Monte Carlo; Monte Carlo points carry a noise budget (4 x max standard
// error) and are flagged unusable when the budget is not well below the
// measured error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgdlab/cutoff.hpp"
#include "sgdlab/fitting.hpp"
#include "sgdlab/interp.hpp"
#include "sgdlab/kolmogorov.hpp"
#include "sgdlab/observables.hpp"
#include "sgdlab/problems.hpp"
#include "sgdlab/sde.hpp"
#include "sgdlab/semigroup.hpp"
#include "sgdlab/sgd.hpp"

namespace sgdlab {

enum class SourceKind { closed_form, semigroup_grid, mc, pde, ou_exact };

inline std::string source_name(SourceKind s) {
    switch (s) {
        case SourceKind::closed_form: return "closed_form";
        case SourceKind::semigroup_grid: return "semigroup_grid";
        case SourceKind::mc: return "mc";
        case SourceKind::pde: return "pde";
        case SourceKind::ou_exact: return "ou_exact";
    }
    return "?";
}

inline SourceKind source_from_name(const std::string& name) {
    if (name == "closed_form") return SourceKind::closed_form;
    if (name == "semigroup_grid") return SourceKind::semigroup_grid;
    if (name == "mc") return SourceKind::mc;
    if (name == "pde") return SourceKind::pde;
    if (name == "ou_exact") return SourceKind::ou_exact;
    throw std::invalid_argument("unknown source: " + name);
}

using OrderFit = LineFit;

struct WeakErrorPoint {
    double eta = 0.0;
    double T = 0.0;
    double error = 0.0;
    SourceKind u_source = SourceKind::ou_exact;
    SourceKind U_source = SourceKind::closed_form;
    double noise_budget = 0.0;  // 4 x max standard error across epochs/probes
    bool usable = true;         // false when an mc source's budget is not < error/5
};

struct WeakErrorOptions {
    SourceKind u_source = SourceKind::ou_exact;
    SourceKind U_source = SourceKind::closed_form;
    std::vector<double> probes = {-1.0, -0.5, 0.0, 0.5, 1.0};
    bool corrected = true;  // false drops the eta-order drift correction everywhere
    bool grid_sup = true;   // include sup over grid nodes |x| <= R for grid-based U
    int grid_points = 4097;
    double grid_half_width = 0.0;  // 0 -> cutoff R
    int noise_nodes = 64;
    std::int64_t mc_paths = 1000000;  // chain ensembles (U_source = mc)
    std::int64_t u_mc_paths = 100000; // diffusion ensembles (u_source = mc)
    double pde_B = 0.0;  // 0 -> R2 + max(0.4, 0.05 R2)
    int pde_n_x = 4097;
    double pde_dt = 1e-3;
    PdeScheme pde_scheme = PdeScheme::crank_nicolson;
    std::uint64_t seed = 0;
    int threads = 1;
};

// --- closed-form chain expectations (quadratic family) ----------------------

inline double closed_form_U(const Problem& p, const Observable& phi, double eta, std::int64_t n,
                            double x) {
    if (p.family != Family::quadratic || p.d != 1)
        throw std::invalid_argument("closed_form_U: available for the 1-D quadratic family only");
    double r = 1.0 - eta * p.mu;
    auto second_moment = [&]() {
        double r2n = std::pow(r * r, static_cast<double>(n));
        double den = 1.0 - r * r;
        double var = std::abs(den) < 1e-14
                         ? static_cast<double>(n) * eta * eta * p.s * p.s
                         : eta * eta * p.s * p.s * (1.0 - r2n) / den;
        return r2n * x * x + var;
    };
    switch (phi.kind) {
        case ObservableKind::coordinate:
            return std::pow(r, static_cast<double>(n)) * x;
        case ObservableKind::squared_norm:
            return second_moment();
        case ObservableKind::expected_loss:
            return 0.5 * p.mu * second_moment();
        default:
            throw std::invalid_argument("closed_form_U: unsupported observable");
    }
}

// diffusion-side closed form for the quadratic family; corrected=false uses
// the plain gradient-flow drift rate
inline double closed_form_u(const Problem& p, const Observable& phi, double eta, bool corrected,
                            double t, double x) {
    if (p.family != Family::quadratic || p.d != 1)
        throw std::invalid_argument("closed_form_u: available for the 1-D quadratic family only");
    double a = corrected ? p.mu + eta * p.mu * p.mu / 2.0 : p.mu;
    auto second_moment = [&]() {
        double e2 = std::exp(-2.0 * a * t);
        return e2 * x * x + eta * p.s * p.s / (2.0 * a) * (1.0 - e2);
    };
    switch (phi.kind) {
        case ObservableKind::coordinate:
            return std::exp(-a * t) * x;
        case ObservableKind::squared_norm:
            return second_moment();
        case ObservableKind::expected_loss:
            return 0.5 * p.mu * second_moment();
        default:
            throw std::invalid_argument("closed_form_u: unsupported observable");
    }
}

// --- weak-error machinery ---------------------------------------------------

struct SupSeries {
    double eta = 0.0;
    std::vector<double> sup;    // sup over eval points of |U^n - u(., n eta)|, index n
    double noise_budget = 0.0;
    bool mc_involved = false;
};

namespace detail {

// cubic stencils for a fixed query list into a snapshot sequence
class FieldProbe {
public:
    FieldProbe() = default;
    FieldProbe(const ScalarField* f, const std::vector<double>& xs) : f_(f) {
        st_.reserve(xs.size());
        for (double x : xs) st_.push_back(cubic_stencil(f->grid, x));
    }
    double at(std::size_t time_idx, std::size_t query_idx) const {
        return cubic_eval(f_->fields[time_idx], st_[query_idx]);
    }

private:
    const ScalarField* f_ = nullptr;
    std::vector<CubicStencil> st_;
};

inline PdeConfig pde_config_for(const Cutoff& c, double eta, double T_run,
                                const WeakErrorOptions& o) {
    PdeConfig cfg;
    cfg.B = o.pde_B > 0.0 ? o.pde_B : c.R2 + std::max(0.4, 0.05 * c.R2);
    cfg.n_x = o.pde_n_x;
    cfg.dt = o.pde_dt;
    cfg.T = T_run;
    cfg.scheme = o.pde_scheme;
    cfg.corrected = o.corrected;
    auto k = static_cast<std::int64_t>(std::llround(eta / o.pde_dt));
    if (k < 1 || std::abs(static_cast<double>(k) * o.pde_dt - eta) > 1e-9 * eta)
        throw std::invalid_argument("weak_error: pde_dt must divide eta");
    cfg.record_every = static_cast<int>(k);
    return cfg;
}

}  // namespace detail

// Per-epoch sup over the eval set of |U^n - u(., n eta)| for n = 0..T/eta.
inline SupSeries weak_error_series(const Problem& p, const Cutoff& c, const Observable& phi,
                                   double eta, double T, const WeakErrorOptions& o) {
    validate(p);
    validate(c);
    if (p.d != 1) throw std::invalid_argument("weak_error: 1-D families only");
    if (!(eta > 0.0)) throw std::invalid_argument("weak_error: eta must be > 0");
    if (o.probes.empty()) throw std::invalid_argument("weak_error: need at least one probe");
    for (double x : o.probes)
        if (std::abs(x) > c.R * (1.0 + 1e-12))
            throw std::invalid_argument("weak_error: probes must lie in B(0,R)");
    if (o.U_source == SourceKind::mc) {
        Constants k = constants(p, c.R);
        if (eta > k.eta0)
            throw std::domain_error("weak_error: eta exceeds eta0 = " + std::to_string(k.eta0) +
                                    ", Monte Carlo chains are not confined");
    }

    auto n_epochs = static_cast<std::int64_t>(std::floor(T / eta + 1e-9));
    std::size_t n_out = static_cast<std::size_t>(n_epochs) + 1;

    // evaluation points: probes first, then grid nodes inside B(0,R)
    std::vector<double> xs = o.probes;
    UniformGrid sgrid;
    bool use_grid = o.U_source == SourceKind::semigroup_grid;
    std::size_t n_probes = xs.size();
    std::vector<int> grid_nodes;
    if (use_grid) {
        double hw = o.grid_half_width > 0.0 ? o.grid_half_width : c.R;
        sgrid = symmetric_grid(hw, o.grid_points);
        if (o.grid_sup && o.u_source != SourceKind::mc) {
            for (int i = 0; i < sgrid.n; ++i)
                if (std::abs(sgrid.x(i)) <= c.R * (1.0 + 1e-12)) {
                    grid_nodes.push_back(i);
                    xs.push_back(sgrid.x(i));
                }
        }
    }

    // u side: evaluator over (epoch, query index)
    SupSeries out;
    out.eta = eta;
    out.sup.assign(n_out, 0.0);
    double u_budget = 0.0;

    ScalarField pde_field;
    detail::FieldProbe pde_probe;
    std::vector<SdeCurve> u_curves;
    std::function<double(std::int64_t, std::size_t)> u_at;
    switch (o.u_source) {
        case SourceKind::ou_exact:
        case SourceKind::closed_form:
            u_at = [&, xs](std::int64_t n, std::size_t qi) {
                return closed_form_u(p, phi, eta, o.corrected, static_cast<double>(n) * eta,
                                     xs[qi]);
            };
            break;
        case SourceKind::pde: {
            PdeConfig cfg = detail::pde_config_for(c, eta, static_cast<double>(n_epochs) * eta, o);
            pde_field = solve_kolmogorov(p, c, eta, phi, cfg);
            if (pde_field.fields.size() != n_out)
                throw std::runtime_error("weak_error: pde snapshot count mismatch");
            pde_probe = detail::FieldProbe(&pde_field, xs);
            u_at = [&](std::int64_t n, std::size_t qi) {
                return pde_probe.at(static_cast<std::size_t>(n), qi);
            };
            break;
        }
        case SourceKind::mc: {
            double h_target = std::min(eta * eta / 10.0, 0.01 * eta);
            auto k = static_cast<std::int64_t>(std::ceil(eta / h_target - 1e-9));
            SdeConfig cfg;
            cfg.eta = eta;
            cfg.h = eta / static_cast<double>(k);
            cfg.T = static_cast<double>(n_epochs) * eta;
            cfg.seed = o.seed + 1;
            cfg.corrected = o.corrected;
            cfg.x0 = Vec(1);
            u_curves.reserve(xs.size());
            for (double x : xs) {
                cfg.x0[0] = x;
                u_curves.push_back(estimate_u_mc(p, c, phi, cfg, o.u_mc_paths, o.threads));
                for (const Estimate& e : u_curves.back().values)
                    u_budget = std::max(u_budget, e.std_error);
            }
            u_at = [&](std::int64_t n, std::size_t qi) {
                return u_curves[qi].values[static_cast<std::size_t>(n)].value;
            };
            out.mc_involved = true;
            break;
        }
        default:
            throw std::invalid_argument("weak_error: unsupported u source");
    }

    // U side drives the epoch loop
    double U_budget = 0.0;
    switch (o.U_source) {
        case SourceKind::closed_form: {
            for (std::int64_t n = 0; n <= n_epochs; ++n) {
                double s = 0.0;
                for (std::size_t qi = 0; qi < xs.size(); ++qi)
                    s = std::max(s, std::abs(closed_form_U(p, phi, eta, n, xs[qi]) - u_at(n, qi)));
                out.sup[static_cast<std::size_t>(n)] = s;
            }
            break;
        }
        case SourceKind::semigroup_grid: {
            TransferOperator S(p, sgrid, eta, o.noise_nodes);
            std::vector<CubicStencil> probe_st;
            probe_st.reserve(n_probes);
            for (std::size_t qi = 0; qi < n_probes; ++qi)
                probe_st.push_back(cubic_stencil(sgrid, o.probes[qi]));
            Vec u0 = sample_on_grid(phi, p, sgrid);
            S.iterate(u0, n_epochs, [&](std::int64_t n, const Vec& field) {
                double s = 0.0;
                for (std::size_t qi = 0; qi < n_probes; ++qi)
                    s = std::max(s, std::abs(cubic_eval(field, probe_st[qi]) - u_at(n, qi)));
                for (std::size_t j = 0; j < grid_nodes.size(); ++j)
                    s = std::max(
                        s, std::abs(field[grid_nodes[j]] - u_at(n, n_probes + j)));
                out.sup[static_cast<std::size_t>(n)] = s;
            });
            break;
        }
        case SourceKind::mc: {
            for (std::size_t qi = 0; qi < xs.size(); ++qi) {
                Vec x0(1);
                x0[0] = xs[qi];
                ExpectationCurve curve = expectation_curve(p, phi, x0, eta, n_epochs, o.mc_paths,
                                                           o.seed, o.threads);
                for (std::int64_t n = 0; n <= n_epochs; ++n) {
                    const Estimate& e = curve.values[static_cast<std::size_t>(n)];
                    U_budget = std::max(U_budget, e.std_error);
                    auto& s = out.sup[static_cast<std::size_t>(n)];
                    s = std::max(s, std::abs(e.value - u_at(n, qi)));
                }
            }
            out.mc_involved = true;
            break;
        }
        default:
            throw std::invalid_argument("weak_error: unsupported U source");
    }

    out.noise_budget = 4.0 * std::max(u_budget, U_budget);
    return out;
}

inline double sup_up_to(const SupSeries& s, double T) {
    auto n = static_cast<std::int64_t>(std::floor(T / s.eta + 1e-9));
    n = std::min<std::int64_t>(n, static_cast<std::int64_t>(s.sup.size()) - 1);
    double m = 0.0;
    for (std::int64_t k = 0; k <= n; ++k) m = std::max(m, s.sup[static_cast<std::size_t>(k)]);
    return m;
}

inline WeakErrorPoint weak_error_point(const Problem& p, const Cutoff& c, const Observable& phi,
                                       double eta, double T, const WeakErrorOptions& o) {
    SupSeries s = weak_error_series(p, c, phi, eta, T, o);
    WeakErrorPoint pt;
    pt.eta = eta;
    pt.T = T;
    pt.error = sup_up_to(s, T);
    pt.u_source = o.u_source;
    pt.U_source = o.U_source;
    pt.noise_budget = s.noise_budget;
    pt.usable = !s.mc_involved || s.noise_budget < pt.error / 5.0;
    return pt;
}

inline std::vector<WeakErrorPoint> weak_error_curve(const Problem& p, const Cutoff& c,
                                                    const Observable& phi,
                                                    const std::vector<double>& eta_list, double T,
                                                    const WeakErrorOptions& o) {
    if (eta_list.empty()) throw std::invalid_argument("weak_error_curve: empty eta list");
    std::vector<WeakErrorPoint> pts;
    pts.reserve(eta_list.size());
    bool any_usable = false;
    for (double eta : eta_list) {
        pts.push_back(weak_error_point(p, c, phi, eta, T, o));
        any_usable = any_usable || pts.back().usable;
    }
    if (!any_usable)
        throw std::runtime_error("weak_error_curve: every point exceeded its noise budget");
    return pts;
}

inline OrderFit order_fit(const std::vector<WeakErrorPoint>& pts) {
    std::vector<double> es, errs;
    for (const WeakErrorPoint& pt : pts)
        if (pt.usable) {
            es.push_back(pt.eta);
            errs.push_back(pt.error);
        }
    if (es.size() < 3) throw std::invalid_argument("order_fit: need >= 3 usable points");
    return fit_loglog(es, errs);
}

// --- uniformity in time -----------------------------------------------------

struct UniformityResult {
    double eta = 0.0;
    std::vector<double> T;
    std::vector<double> error;
    std::vector<double> ratio;  // error(T_k) / error(T_1)
};

inline UniformityResult uniformity_check(const Problem& p, const Cutoff& c, const Observable& phi,
                                         double eta, const std::vector<double>& T_list,
                                         const WeakErrorOptions& o) {
    if (T_list.size() < 2) throw std::invalid_argument("uniformity_check: need >= 2 horizons");
    for (std::size_t k = 1; k < T_list.size(); ++k)
        if (T_list[k] < T_list[k - 1])
            throw std::invalid_argument("uniformity_check: horizons must be nondecreasing");
    SupSeries s = weak_error_series(p, c, phi, eta, T_list.back(), o);
    UniformityResult out;
    out.eta = eta;
    double base = 0.0;
    for (std::size_t k = 0; k < T_list.size(); ++k) {
        double e = sup_up_to(s, T_list[k]);
        out.T.push_back(T_list[k]);
        out.error.push_back(e);
        if (k == 0) base = e;
        out.ratio.push_back(base > 0.0 ? e / base : 1.0);
    }
    return out;
}

// --- one-step truncation order ----------------------------------------------

struct TruncationResult {
    std::vector<double> eta;
    std::vector<double> residual;  // sup over probes of |S u^n - u^{n+1}|
    OrderFit fit;
    std::int64_t n_probe = 0;
};

// Applies the grid transfer operator once to the diffusion-side snapshot
// u(., n_probe eta) and measures the defect against u(., (n_probe+1) eta).
inline TruncationResult truncation_check(const Problem& p, const Cutoff& c, const Observable& phi,
                                         const std::vector<double>& eta_list,
                                         std::int64_t n_probe, const WeakErrorOptions& o) {
    validate(p);
    validate(c);
    if (p.d != 1) throw std::invalid_argument("truncation_check: 1-D families only");
    if (eta_list.size() < 3) throw std::invalid_argument("truncation_check: need >= 3 step sizes");
    if (n_probe < 0) throw std::invalid_argument("truncation_check: n_probe must be >= 0");
    if (o.probes.empty()) throw std::invalid_argument("truncation_check: need probes");

    TruncationResult out;
    out.n_probe = n_probe;
    double hw = o.grid_half_width > 0.0 ? o.grid_half_width : c.R;
    UniformGrid g = symmetric_grid(hw, o.grid_points);
    for (double eta : eta_list) {
        double t_n = static_cast<double>(n_probe) * eta;
        Vec un(g.n);
        for (int i = 0; i < g.n; ++i)
            un[i] = closed_form_u(p, phi, eta, o.corrected, t_n, g.x(i));
        TransferOperator S(p, g, eta, o.noise_nodes);
        Vec sun = S.apply(un);
        double res = 0.0;
        for (double x : o.probes) {
            double lhs = cubic_interp(g, sun, x);
            double rhs = closed_form_u(p, phi, eta, o.corrected, t_n + eta, x);
            res = std::max(res, std::abs(lhs - rhs));
        }
        out.eta.push_back(eta);
        out.residual.push_back(res);
    }
    out.fit = fit_loglog(out.eta, out.residual);
    return out;
}

// --- nonconvex log horizon --------------------------------------------------

struct HorizonPoint {
    double eta = 0.0;
    double T_horizon = 0.0;  // beta ln(1/eta)
    std::int64_t n_within = 0;
    std::int64_t n_beyond = 0;
    double E_within = 0.0;
    double E_beyond = 0.0;  // sup over the doubled horizon
    double escape_max_norm = 0.0;
    bool flagged = false;  // a probe chain left B(0,2R) within the horizon
};

struct HorizonResult {
    double beta = 0.0;
    std::vector<HorizonPoint> points;
    OrderFit within_fit;  // over unflagged points
};

inline HorizonResult horizon_experiment(const Problem& p, const Cutoff& c, const Observable& phi,
                                        const std::vector<double>& eta_list, double beta,
                                        const WeakErrorOptions& o,
                                        std::int64_t escape_paths = 1000) {
    validate(p);
    validate(c);
    if (p.family != Family::double_well)
        throw std::invalid_argument("horizon_experiment: double_well family required");
    if (beta < 0.0) throw std::invalid_argument("horizon_experiment: beta must be >= 0");
    if (eta_list.size() < 3) throw std::invalid_argument("horizon_experiment: need >= 3 step sizes");

    WeakErrorOptions opts = o;
    opts.u_source = SourceKind::pde;
    opts.U_source = SourceKind::semigroup_grid;
    if (opts.grid_half_width <= 0.0) opts.grid_half_width = 2.0 * c.R;

    HorizonResult out;
    out.beta = beta;
    double wall = 2.0 * c.R;
    for (double eta : eta_list) {
        if (!(eta > 0.0) || eta >= 1.0)
            throw std::invalid_argument("horizon_experiment: need 0 < eta < 1");
        HorizonPoint pt;
        pt.eta = eta;
        pt.T_horizon = beta * std::log(1.0 / eta);
        pt.n_within = static_cast<std::int64_t>(std::floor(pt.T_horizon / eta + 1e-9));
        pt.n_beyond = static_cast<std::int64_t>(std::floor(2.0 * pt.T_horizon / eta + 1e-9));
        if (pt.n_beyond > 0) {
            SupSeries s =
                weak_error_series(p, c, phi, eta, static_cast<double>(pt.n_beyond) * eta, opts);
            pt.E_within = sup_up_to(s, static_cast<double>(pt.n_within) * eta);
            pt.E_beyond = sup_up_to(s, static_cast<double>(pt.n_beyond) * eta);
        }

        // empirical guard: probe chains must stay in B(0,2R) through the horizon
        double worst2 = 0.0;
        bool escaped = false;
        Vec x(1), xi(1), g(1);
        for (std::int64_t i = 0; i < escape_paths; ++i) {
            Stream rng(opts.seed, static_cast<std::uint64_t>(i));
            detail::uniform_ball_into(1, c.R, rng, x);
            for (std::int64_t n = 0; n < pt.n_within; ++n) {
                sample_noise_into(p, rng, xi);
                sgd_step(p, x, xi, eta, g);
                double q = x.squaredNorm();
                if (q > worst2) worst2 = q;
                if (q > wall * wall) escaped = true;
            }
        }
        pt.escape_max_norm = std::sqrt(worst2);
        pt.flagged = escaped;
        out.points.push_back(pt);
    }

    std::vector<double> es, errs;
    for (const HorizonPoint& pt : out.points)
        if (!pt.flagged && pt.E_within > 0.0) {
            es.push_back(pt.eta);
            errs.push_back(pt.E_within);
        }
    if (es.size() < 3)
        throw std::runtime_error("horizon_experiment: fewer than 3 unflagged points");
    out.within_fit = fit_loglog(es, errs);
    return out;
}

}  // namespace sgdlab
