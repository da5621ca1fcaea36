#pragma once

// Euler-Maruyama simulation of the drift-corrected diffusion
//   dX = -(grad fbar(X) + eta/4 grad |grad fbar(X)|^2) dt + sqrt(eta Lambda(X)) dW
// with the tapered diffusion Lambda, an exact Ornstein-Uhlenbeck oracle for
// the quadratic family, per-epoch ensemble curves, and moment envelopes.
//
// All built-in noise covariances are isotropic, so the ensemble kernel uses
// the scalar root taper(|x|) * sqrt(sup-eigenvalue); em_step goes through the
// full matrix square root.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sgdlab/accum.hpp"
#include "sgdlab/cutoff.hpp"
#include "sgdlab/observables.hpp"
#include "sgdlab/problems.hpp"
#include "sgdlab/rng.hpp"

namespace sgdlab {

struct SdeConfig {
    double eta = 0.1;
    double h = 0.01;  // substep; must divide eta exactly
    double T = 1.0;
    Vec x0;
    std::uint64_t seed = 0;
    bool corrected = true;  // false drops the eta-order drift correction
};

inline std::int64_t substeps_per_epoch(const SdeConfig& cfg) {
    if (!(cfg.eta > 0.0)) throw std::invalid_argument("sde: eta must be > 0");
    if (!(cfg.h > 0.0) || cfg.h > cfg.eta * (1.0 + 1e-12))
        throw std::invalid_argument("sde: substep h must satisfy 0 < h <= eta");
    auto k = static_cast<std::int64_t>(std::llround(cfg.eta / cfg.h));
    if (k < 1 || std::abs(static_cast<double>(k) * cfg.h - cfg.eta) > 1e-9 * cfg.eta)
        throw std::invalid_argument("sde: h must divide eta exactly");
    return k;
}

inline void validate(const Problem& p, const SdeConfig& cfg) {
    validate(p);
    substeps_per_epoch(cfg);
    if (cfg.T < 0.0) throw std::invalid_argument("sde: T must be >= 0");
    if (cfg.x0.size() != p.d) throw std::invalid_argument("sde: x0 dimension mismatch");
}

inline Vec modified_drift(const Problem& p, const Vec& x, double eta) {
    return -(grad_mean(p, x) + eta * correction_drift(p, x));
}

namespace detail {

inline double drift1(const Problem& p, double x, double eta, bool corrected) {
    switch (p.family) {
        case Family::quadratic:
        case Family::trig:
            return corrected ? -(p.mu + eta * p.mu * p.mu / 2.0) * x : -p.mu * x;
        case Family::double_well: {
            double g = x * x * x - x;
            return corrected ? -(g + eta * g * (3.0 * x * x - 1.0) / 2.0) : -g;
        }
    }
    throw std::invalid_argument("drift1: unknown family");
}

}  // namespace detail

inline Vec em_step(const Problem& p, const Cutoff& c, const Vec& x, double eta, double h,
                   const Vec& dW) {
    return x + h * modified_drift(p, x, eta) + std::sqrt(eta) * (diffusion_sqrt(p, c, x) * dW);
}

// classic fourth-order Runge-Kutta on the (optionally corrected) mean flow;
// reference for the zero-noise limit
inline Vec ode_flow(const Problem& p, const Vec& x0, double eta, double t, int n_steps,
                    bool corrected = true) {
    validate(p);
    if (n_steps < 1) throw std::invalid_argument("ode_flow: n_steps must be >= 1");
    double dt = t / n_steps;
    auto f = [&](const Vec& x) -> Vec {
        return corrected ? modified_drift(p, x, eta) : Vec(-grad_mean(p, x));
    };
    Vec x = x0;
    for (int i = 0; i < n_steps; ++i) {
        Vec k1 = f(x);
        Vec k2 = f(x + 0.5 * dt * k1);
        Vec k3 = f(x + 0.5 * dt * k2);
        Vec k4 = f(x + dt * k3);
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x;
}

// --- exact oracle (quadratic family, 1-D) -----------------------------------

struct OuParams {
    double a = 0.0;             // drift rate mu + eta mu^2 / 2
    double diffusion_sq = 0.0;  // eta s^2
};

inline OuParams ou_params(double mu, double eta, double s_sq) {
    if (!(mu > 0.0)) throw std::invalid_argument("ou: mu must be > 0");
    if (eta < 0.0 || s_sq < 0.0) throw std::invalid_argument("ou: eta, s^2 must be >= 0");
    return {mu + eta * mu * mu / 2.0, eta * s_sq};
}

inline double ou_exact(double mu, double eta, double s_sq, double x0, double t,
                       ObservableKind kind) {
    OuParams q = ou_params(mu, eta, s_sq);
    switch (kind) {
        case ObservableKind::coordinate:
            return std::exp(-q.a * t) * x0;
        case ObservableKind::squared_norm: {
            double e2 = std::exp(-2.0 * q.a * t);
            return e2 * x0 * x0 + q.diffusion_sq / (2.0 * q.a) * (1.0 - e2);
        }
        default:
            throw std::invalid_argument("ou_exact: unsupported observable");
    }
}

// --- ensemble curves --------------------------------------------------------

struct PathStats {
    double threshold = std::numeric_limits<double>::infinity();
    std::int64_t points = 0;       // substep states examined (x0 included once per path)
    std::int64_t exceedances = 0;  // states with |X| > threshold
    double max_norm = 0.0;
};

struct SdeCurve {
    std::vector<double> t;         // epoch times n*eta
    std::vector<Estimate> values;  // ensemble estimate of f(X) per epoch
    PathStats stats;
};

namespace detail {

template <class F>
SdeCurve sde_curve(const Problem& p, const Cutoff& c, const SdeConfig& cfg, std::int64_t n_paths,
                   int threads, double threshold, F&& f) {
    validate(p, cfg);
    validate(c);
    if (n_paths < 1) throw std::invalid_argument("sde: n_paths must be >= 1");
    if (cfg.x0.norm() > c.R * (1.0 + 1e-12))
        throw std::invalid_argument("sde: x0 must lie in B(0,R)");

    std::int64_t k = substeps_per_epoch(cfg);
    double h = cfg.eta / static_cast<double>(k);
    double sqrt_h = std::sqrt(h);
    double sqrt_eta = std::sqrt(cfg.eta);
    double s_root = std::sqrt(noise_cov_sup(p));
    auto n_epochs = static_cast<std::int64_t>(std::floor(cfg.T / cfg.eta + 1e-9));
    std::size_t n_out = static_cast<std::size_t>(n_epochs) + 1;
    double thr2 = threshold * threshold;

    std::int64_t n_blocks = (n_paths + kEnsembleBlock - 1) / kEnsembleBlock;
    std::vector<std::vector<double>> bsum(static_cast<std::size_t>(n_blocks));
    std::vector<std::vector<double>> bsq(static_cast<std::size_t>(n_blocks));
    std::vector<std::int64_t> bexceed(static_cast<std::size_t>(n_blocks), 0);
    std::vector<std::int64_t> bpoints(static_cast<std::size_t>(n_blocks), 0);
    std::vector<double> bmax(static_cast<std::size_t>(n_blocks), 0.0);

    bool d1 = (p.d == 1);
    for_each_block(
        n_paths, kEnsembleBlock, threads, [&](std::int64_t b, std::int64_t lo, std::int64_t hi) {
            std::vector<PairwiseSum> s(n_out), s2(n_out);
            std::int64_t exceed = 0, points = 0;
            double worst = 0.0;
            Vec x(p.d), drift(p.d);
            for (std::int64_t i = lo; i < hi; ++i) {
                Stream rng(cfg.seed, static_cast<std::uint64_t>(i));
                x = cfg.x0;
                double q = x.squaredNorm();
                ++points;
                if (q > worst) worst = q;
                if (q > thr2) ++exceed;
                double v = f(x);
                s[0].add(v);
                s2[0].add(v * v);
                for (std::int64_t n = 1; n <= n_epochs; ++n) {
                    for (std::int64_t sub = 0; sub < k; ++sub) {
                        if (d1) {
                            double xv = x[0];
                            double w = taper(c, std::abs(xv)) * s_root;
                            x[0] = xv + h * detail::drift1(p, xv, cfg.eta, cfg.corrected) +
                                   sqrt_eta * w * sqrt_h * rng.normal();
                        } else {
                            double w = taper(c, x.norm()) * s_root;
                            drift.noalias() = -grad_mean(p, x);
                            if (cfg.corrected) drift.noalias() -= cfg.eta * correction_drift(p, x);
                            double coef = sqrt_eta * w * sqrt_h;
                            for (int j = 0; j < p.d; ++j) x[j] += h * drift[j] + coef * rng.normal();
                        }
                        q = x.squaredNorm();
                        ++points;
                        if (q > worst) worst = q;
                        if (q > thr2) ++exceed;
                    }
                    v = f(x);
                    s[static_cast<std::size_t>(n)].add(v);
                    s2[static_cast<std::size_t>(n)].add(v * v);
                }
            }
            auto& rs = bsum[static_cast<std::size_t>(b)];
            auto& rq = bsq[static_cast<std::size_t>(b)];
            rs.resize(n_out);
            rq.resize(n_out);
            for (std::size_t n = 0; n < n_out; ++n) {
                rs[n] = s[n].total();
                rq[n] = s2[n].total();
            }
            bexceed[static_cast<std::size_t>(b)] = exceed;
            bpoints[static_cast<std::size_t>(b)] = points;
            bmax[static_cast<std::size_t>(b)] = worst;
        });

    SdeCurve curve;
    curve.t.resize(n_out);
    curve.values.resize(n_out);
    std::vector<double> col(static_cast<std::size_t>(n_blocks));
    std::vector<double> col2(static_cast<std::size_t>(n_blocks));
    for (std::size_t n = 0; n < n_out; ++n) {
        curve.t[n] = static_cast<double>(n) * cfg.eta;
        for (std::size_t b = 0; b < static_cast<std::size_t>(n_blocks); ++b) {
            col[b] = bsum[b][n];
            col2[b] = bsq[b][n];
        }
        curve.values[n] = estimate_from_sums(pairwise_total(col), pairwise_total(col2), n_paths);
    }
    curve.stats.threshold = threshold;
    for (std::size_t b = 0; b < static_cast<std::size_t>(n_blocks); ++b) {
        curve.stats.points += bpoints[b];
        curve.stats.exceedances += bexceed[b];
        if (bmax[b] > curve.stats.max_norm) curve.stats.max_norm = bmax[b];
    }
    curve.stats.max_norm = std::sqrt(curve.stats.max_norm);
    return curve;
}

}  // namespace detail

// single path recorded at every epoch time n*eta
inline std::vector<Vec> simulate_sde(const Problem& p, const Cutoff& c, const SdeConfig& cfg) {
    validate(p, cfg);
    validate(c);
    if (cfg.x0.norm() > c.R * (1.0 + 1e-12))
        throw std::invalid_argument("sde: x0 must lie in B(0,R)");
    std::int64_t k = substeps_per_epoch(cfg);
    double h = cfg.eta / static_cast<double>(k);
    double sqrt_h = std::sqrt(h);
    double sqrt_eta = std::sqrt(cfg.eta);
    double s_root = std::sqrt(noise_cov_sup(p));
    auto n_epochs = static_cast<std::int64_t>(std::floor(cfg.T / cfg.eta + 1e-9));

    Stream rng(cfg.seed, 0);
    std::vector<Vec> path;
    path.reserve(static_cast<std::size_t>(n_epochs) + 1);
    Vec x = cfg.x0, drift(p.d);
    path.push_back(x);
    for (std::int64_t n = 1; n <= n_epochs; ++n) {
        for (std::int64_t sub = 0; sub < k; ++sub) {
            if (p.d == 1) {
                double xv = x[0];
                double w = taper(c, std::abs(xv)) * s_root;
                x[0] = xv + h * detail::drift1(p, xv, cfg.eta, cfg.corrected) +
                       sqrt_eta * w * sqrt_h * rng.normal();
            } else {
                double w = taper(c, x.norm()) * s_root;
                drift.noalias() = -grad_mean(p, x);
                if (cfg.corrected) drift.noalias() -= cfg.eta * correction_drift(p, x);
                double coef = sqrt_eta * w * sqrt_h;
                for (int j = 0; j < p.d; ++j) x[j] += h * drift[j] + coef * rng.normal();
            }
        }
        path.push_back(x);
    }
    return path;
}

// ensemble mean of phi(X_t) at every epoch
inline SdeCurve estimate_u_mc(const Problem& p, const Cutoff& c, const Observable& obs,
                              const SdeConfig& cfg, std::int64_t n_paths, int threads = 1) {
    if (n_paths < 2) throw std::invalid_argument("estimate_u_mc: n_paths must be >= 2");
    return detail::sde_curve(p, c, cfg, n_paths, threads,
                             std::numeric_limits<double>::infinity(),
                             [&](const Vec& x) { return eval(obs, p, x); });
}

// ensemble moments E |X_t|^{2m} at every epoch
inline SdeCurve moment_curve(const Problem& p, const Cutoff& c, const SdeConfig& cfg,
                             std::int64_t n_paths, int m, int threads = 1) {
    if (n_paths < 100) throw std::invalid_argument("moment_curve: n_paths must be >= 100");
    if (m < 0) throw std::invalid_argument("moment_curve: order must be >= 0");
    return detail::sde_curve(p, c, cfg, n_paths, threads,
                             std::numeric_limits<double>::infinity(),
                             [&](const Vec& x) { return std::pow(x.squaredNorm(), m); });
}

// counts substep states beyond R2 plus a one-step overshoot allowance
inline PathStats confinement_check(const Problem& p, const Cutoff& c, const SdeConfig& cfg,
                                   std::int64_t n_paths, int threads = 1,
                                   double tol_mult = 10.0) {
    std::int64_t k = substeps_per_epoch(cfg);
    double h = cfg.eta / static_cast<double>(k);
    double threshold =
        c.R2 + tol_mult * std::sqrt(cfg.eta * noise_cov_sup(p)) * std::sqrt(h);
    SdeCurve curve = detail::sde_curve(p, c, cfg, n_paths, threads, threshold,
                                       [](const Vec& x) { return x.squaredNorm(); });
    return curve.stats;
}

}  // namespace sgdlab
