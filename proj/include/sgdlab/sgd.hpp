#pragma once

// The discrete chain X_{n+1} = X_n - eta * grad f(X_n; xi_n) with fresh noise
// each step, plus Monte Carlo estimation of E phi(X_n) along whole epochs and
// a confinement check for the safe step-size threshold.
//
// Ensemble reductions use fixed 4096-path blocks merged in block order, so
// results are bit-identical for any thread count.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sgdlab/accum.hpp"
#include "sgdlab/observables.hpp"
#include "sgdlab/problems.hpp"
#include "sgdlab/rng.hpp"

namespace sgdlab {

// one update in place; g is scratch of size p.d
inline void sgd_step(const Problem& p, Vec& x, const Vec& xi, double eta, Vec& g) {
    grad_sample_into(p, x, xi, g);
    x.noalias() -= eta * g;
}

inline std::vector<Vec> sgd_trajectory(const Problem& p, const Vec& x0, double eta,
                                       std::int64_t n_steps, Stream& rng) {
    validate(p);
    if (!(eta > 0.0)) throw std::invalid_argument("sgd_trajectory: eta must be > 0");
    std::vector<Vec> path;
    path.reserve(static_cast<std::size_t>(n_steps) + 1);
    Vec x = x0, xi(p.d), g(p.d);
    path.push_back(x);
    for (std::int64_t n = 0; n < n_steps; ++n) {
        sample_noise_into(p, rng, xi);
        sgd_step(p, x, xi, eta, g);
        path.push_back(x);
    }
    return path;
}

struct ExpectationCurve {
    double eta = 0.0;
    std::vector<Estimate> values;  // values[n] estimates E phi(X_n)
};

// E phi(X_n) for every n in 0..n_steps from n_paths independent chains.
// Path i draws from Stream(seed, i); output is independent of thread count.
inline ExpectationCurve expectation_curve(const Problem& p, const Observable& obs,
                                          const Vec& x0, double eta, std::int64_t n_steps,
                                          std::int64_t n_paths, std::uint64_t seed,
                                          int threads = 1) {
    validate(p);
    if (!(eta > 0.0)) throw std::invalid_argument("expectation_curve: eta must be > 0");
    if (n_steps < 0) throw std::invalid_argument("expectation_curve: n_steps must be >= 0");
    if (n_paths < 1) throw std::invalid_argument("expectation_curve: n_paths must be >= 1");

    std::size_t n_out = static_cast<std::size_t>(n_steps) + 1;
    std::int64_t n_blocks = (n_paths + kEnsembleBlock - 1) / kEnsembleBlock;
    std::vector<std::vector<double>> bsum(static_cast<std::size_t>(n_blocks));
    std::vector<std::vector<double>> bsq(static_cast<std::size_t>(n_blocks));

    for_each_block(n_paths, kEnsembleBlock, threads,
                   [&](std::int64_t b, std::int64_t lo, std::int64_t hi) {
                       std::vector<PairwiseSum> s(n_out), s2(n_out);
                       Vec x(p.d), xi(p.d), g(p.d);
                       for (std::int64_t i = lo; i < hi; ++i) {
                           Stream rng(seed, static_cast<std::uint64_t>(i));
                           x = x0;
                           double v = eval(obs, p, x);
                           s[0].add(v);
                           s2[0].add(v * v);
                           for (std::int64_t n = 1; n <= n_steps; ++n) {
                               sample_noise_into(p, rng, xi);
                               sgd_step(p, x, xi, eta, g);
                               v = eval(obs, p, x);
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
                   });

    ExpectationCurve curve;
    curve.eta = eta;
    curve.values.resize(n_out);
    std::vector<double> col(static_cast<std::size_t>(n_blocks));
    std::vector<double> col2(static_cast<std::size_t>(n_blocks));
    for (std::size_t n = 0; n < n_out; ++n) {
        for (std::size_t b = 0; b < static_cast<std::size_t>(n_blocks); ++b) {
            col[b] = bsum[b][n];
            col2[b] = bsq[b][n];
        }
        curve.values[n] = estimate_from_sums(pairwise_total(col), pairwise_total(col2), n_paths);
    }
    return curve;
}

// Single-horizon estimate of E phi(X_n); cheaper than the full curve when only
// the endpoint matters.
inline Estimate estimate_U(const Problem& p, const Observable& obs, const Vec& x0, double eta,
                           std::int64_t n_steps, std::int64_t n_paths, std::uint64_t seed,
                           int threads = 1) {
    validate(p);
    if (!(eta > 0.0)) throw std::invalid_argument("estimate_U: eta must be > 0");
    if (n_paths < 2) throw std::invalid_argument("estimate_U: n_paths must be >= 2");

    std::int64_t n_blocks = (n_paths + kEnsembleBlock - 1) / kEnsembleBlock;
    std::vector<double> bsum(static_cast<std::size_t>(n_blocks));
    std::vector<double> bsq(static_cast<std::size_t>(n_blocks));

    for_each_block(n_paths, kEnsembleBlock, threads,
                   [&](std::int64_t b, std::int64_t lo, std::int64_t hi) {
                       PairwiseSum s, s2;
                       Vec x(p.d), xi(p.d), g(p.d);
                       for (std::int64_t i = lo; i < hi; ++i) {
                           Stream rng(seed, static_cast<std::uint64_t>(i));
                           x = x0;
                           for (std::int64_t n = 0; n < n_steps; ++n) {
                               sample_noise_into(p, rng, xi);
                               sgd_step(p, x, xi, eta, g);
                           }
                           double v = eval(obs, p, x);
                           s.add(v);
                           s2.add(v * v);
                       }
                       bsum[static_cast<std::size_t>(b)] = s.total();
                       bsq[static_cast<std::size_t>(b)] = s2.total();
                   });

    return estimate_from_sums(pairwise_total(bsum), pairwise_total(bsq), n_paths);
}

// --- confinement ------------------------------------------------------------

struct TrapReport {
    double eta = 0.0;
    double eta0 = 0.0;
    double R = 0.0;
    std::int64_t n_paths = 0;
    std::int64_t n_steps = 0;
    std::int64_t escapes = 0;  // iterates with |X_n| > R
    double max_norm = 0.0;     // sup of |X_n| over all paths and steps
};

namespace detail {

// uniform draw from the closed ball of radius R, d >= 1
inline void uniform_ball_into(int d, double R, Stream& rng, Vec& x) {
    if (d == 1) {
        x[0] = R * (2.0 * rng.uniform() - 1.0);
        return;
    }
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (int i = 0; i < d; ++i) {
            x[i] = rng.normal();
            norm2 += x[i] * x[i];
        }
    } while (norm2 == 0.0);
    double r = R * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    x *= r / std::sqrt(norm2);
}

}  // namespace detail

// Start n_paths chains uniformly in B(0,R) and count any exit beyond radius R.
// Refuses eta above the safe threshold unless force is set.
inline TrapReport trap_check(const Problem& p, double R, double eta, std::int64_t n_steps,
                             std::int64_t n_paths, std::uint64_t seed, int threads = 1,
                             bool force = false) {
    validate(p);
    if (!(eta > 0.0)) throw std::invalid_argument("trap_check: eta must be > 0");
    Constants c = constants(p, R);
    if (eta > c.eta0 && !force)
        throw std::domain_error("trap_check: eta exceeds safe threshold eta0 = " +
                                std::to_string(c.eta0) + " (pass force to run anyway)");

    std::int64_t n_blocks = (n_paths + kEnsembleBlock - 1) / kEnsembleBlock;
    std::vector<std::int64_t> besc(static_cast<std::size_t>(n_blocks), 0);
    std::vector<double> bmax(static_cast<std::size_t>(n_blocks), 0.0);
    double R2 = R * R;

    for_each_block(n_paths, kEnsembleBlock, threads,
                   [&](std::int64_t b, std::int64_t lo, std::int64_t hi) {
                       std::int64_t escapes = 0;
                       double worst = 0.0;
                       Vec x(p.d), xi(p.d), g(p.d);
                       for (std::int64_t i = lo; i < hi; ++i) {
                           Stream rng(seed, static_cast<std::uint64_t>(i));
                           detail::uniform_ball_into(p.d, R, rng, x);
                           double peak = x.squaredNorm();
                           for (std::int64_t n = 0; n < n_steps; ++n) {
                               sample_noise_into(p, rng, xi);
                               sgd_step(p, x, xi, eta, g);
                               double q = x.squaredNorm();
                               if (q > peak) peak = q;
                               if (q > R2) ++escapes;
                           }
                           if (peak > worst) worst = peak;
                       }
                       besc[static_cast<std::size_t>(b)] = escapes;
                       bmax[static_cast<std::size_t>(b)] = worst;
                   });

    TrapReport rep;
    rep.eta = eta;
    rep.eta0 = c.eta0;
    rep.R = R;
    rep.n_paths = n_paths;
    rep.n_steps = n_steps;
    for (std::size_t b = 0; b < static_cast<std::size_t>(n_blocks); ++b) {
        rep.escapes += besc[b];
        if (bmax[b] > rep.max_norm) rep.max_norm = bmax[b];
    }
    rep.max_norm = std::sqrt(rep.max_norm);
    return rep;
}

}  // namespace sgdlab
