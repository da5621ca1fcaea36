#pragma once

// Random-loss families with analytic gradients, gradient-noise covariance,
// and the confinement constants that bound the safe step size.
//
// Built-ins:
//   quadratic  : f(x;xi) = (mu/2)|x|^2 + xi.x,  xi = +-s per coordinate
//   trig (1-D) : f(x;th) = (mu/2)x^2 + s sin(x+th),  th uniform on [0,2pi);
//                every sample loss is nonconvex for s > mu, the mean is not
//   double_well: f(x;xi) = (x^2-1)^2/4 + xi x,  xi = +-s; mean loss nonconvex

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgdlab/accum.hpp"
#include "sgdlab/quadrature.hpp"
#include "sgdlab/rng.hpp"

namespace sgdlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Family { quadratic, trig, double_well };

inline std::string family_name(Family f) {
    switch (f) {
        case Family::quadratic: return "quadratic";
        case Family::trig: return "trig";
        case Family::double_well: return "double_well";
    }
    return "?";
}

inline Family family_from_name(const std::string& name) {
    if (name == "quadratic") return Family::quadratic;
    if (name == "trig") return Family::trig;
    if (name == "double_well") return Family::double_well;
    throw std::invalid_argument("unknown loss family: " + name);
}

struct Problem {
    Family family = Family::quadratic;
    int d = 1;
    double mu = 1.0;
    double s = 0.0;
};

inline void validate(const Problem& p) {
    if (p.d < 1) throw std::invalid_argument("problem: dimension must be >= 1");
    if (p.s < 0.0) throw std::invalid_argument("problem: noise scale must be >= 0");
    switch (p.family) {
        case Family::quadratic:
            if (!(p.mu > 0.0)) throw std::invalid_argument("problem: mu must be > 0");
            break;
        case Family::trig:
            if (!(p.mu > 0.0)) throw std::invalid_argument("problem: mu must be > 0");
            if (p.d != 1) throw std::invalid_argument("problem: trig family is 1-D");
            break;
        case Family::double_well:
            if (p.d != 1) throw std::invalid_argument("problem: double_well family is 1-D");
            break;
    }
}

// mean loss is mu-strongly convex for quadratic/trig only
inline bool mean_strongly_convex(const Problem& p) {
    return p.family != Family::double_well;
}

// --- gradients -------------------------------------------------------------

inline Vec grad_sample(const Problem& p, const Vec& x, const Vec& xi) {
    switch (p.family) {
        case Family::quadratic:
            return p.mu * x + xi;
        case Family::trig: {
            Vec g(1);
            g[0] = p.mu * x[0] + p.s * std::cos(x[0] + xi[0]);
            return g;
        }
        case Family::double_well: {
            Vec g(1);
            double v = x[0];
            g[0] = v * v * v - v + xi[0];
            return g;
        }
    }
    throw std::invalid_argument("grad_sample: unknown family");
}

// allocation-free variant for hot loops; g must have size p.d
inline void grad_sample_into(const Problem& p, const Vec& x, const Vec& xi, Vec& g) {
    switch (p.family) {
        case Family::quadratic:
            g.noalias() = p.mu * x + xi;
            return;
        case Family::trig:
            g[0] = p.mu * x[0] + p.s * std::cos(x[0] + xi[0]);
            return;
        case Family::double_well: {
            double v = x[0];
            g[0] = v * v * v - v + xi[0];
            return;
        }
    }
    throw std::invalid_argument("grad_sample_into: unknown family");
}

inline Vec grad_mean(const Problem& p, const Vec& x) {
    switch (p.family) {
        case Family::quadratic:
        case Family::trig:
            return p.mu * x;
        case Family::double_well: {
            Vec g(1);
            double v = x[0];
            g[0] = v * v * v - v;
            return g;
        }
    }
    throw std::invalid_argument("grad_mean: unknown family");
}

// (1/4) grad |grad fbar|^2 of the mean loss
inline Vec correction_drift(const Problem& p, const Vec& x) {
    switch (p.family) {
        case Family::quadratic:
        case Family::trig:
            return (p.mu * p.mu / 2.0) * x;
        case Family::double_well: {
            Vec g(1);
            double v = x[0];
            g[0] = (v * v * v - v) * (3.0 * v * v - 1.0) / 2.0;
            return g;
        }
    }
    throw std::invalid_argument("correction_drift: unknown family");
}

inline double expected_loss(const Problem& p, const Vec& x) {
    switch (p.family) {
        case Family::quadratic:
        case Family::trig:
            return 0.5 * p.mu * x.squaredNorm();
        case Family::double_well: {
            double w = x[0] * x[0] - 1.0;
            return w * w / 4.0;
        }
    }
    throw std::invalid_argument("expected_loss: unknown family");
}

// --- noise law -------------------------------------------------------------

inline Vec sample_noise(const Problem& p, Stream& rng) {
    switch (p.family) {
        case Family::quadratic: {
            Vec xi(p.d);
            for (int i = 0; i < p.d; ++i) xi[i] = p.s * rng.rademacher();
            return xi;
        }
        case Family::trig: {
            Vec xi(1);
            xi[0] = 6.283185307179586476925286766559 * rng.uniform();
            return xi;
        }
        case Family::double_well: {
            Vec xi(1);
            xi[0] = p.s * rng.rademacher();
            return xi;
        }
    }
    throw std::invalid_argument("sample_noise: unknown family");
}

// allocation-free variant for hot loops; xi must have size p.d
inline void sample_noise_into(const Problem& p, Stream& rng, Vec& xi) {
    switch (p.family) {
        case Family::quadratic:
            for (int i = 0; i < p.d; ++i) xi[i] = p.s * rng.rademacher();
            return;
        case Family::trig:
            xi[0] = 6.283185307179586476925286766559 * rng.uniform();
            return;
        case Family::double_well:
            xi[0] = p.s * rng.rademacher();
            return;
    }
    throw std::invalid_argument("sample_noise_into: unknown family");
}

struct NoiseRule {
    std::vector<Vec> nodes;
    std::vector<double> weights;
};

// exact quadrature over the noise law (finite sum, or Gauss-Legendre over the
// angle for the trig family)
inline NoiseRule noise_rule(const Problem& p, int trig_nodes = 64) {
    NoiseRule rule;
    switch (p.family) {
        case Family::quadratic: {
            if (p.d > 20) throw std::invalid_argument("noise_rule: 2^d nodes impractical, use MC");
            std::size_t count = std::size_t{1} << p.d;
            double w = 1.0 / static_cast<double>(count);
            for (std::size_t mask = 0; mask < count; ++mask) {
                Vec xi(p.d);
                for (int i = 0; i < p.d; ++i)
                    xi[i] = (mask >> i) & 1u ? p.s : -p.s;
                rule.nodes.push_back(xi);
                rule.weights.push_back(w);
            }
            return rule;
        }
        case Family::trig: {
            QuadRule q = averaged_rule(trig_nodes, 0.0, 6.283185307179586476925286766559);
            for (std::size_t i = 0; i < q.nodes.size(); ++i) {
                Vec xi(1);
                xi[0] = q.nodes[i];
                rule.nodes.push_back(xi);
                rule.weights.push_back(q.weights[i]);
            }
            return rule;
        }
        case Family::double_well: {
            Vec lo(1), hi(1);
            lo[0] = -p.s;
            hi[0] = p.s;
            rule.nodes = {lo, hi};
            rule.weights = {0.5, 0.5};
            return rule;
        }
    }
    throw std::invalid_argument("noise_rule: unknown family");
}

// --- gradient-noise covariance ---------------------------------------------

inline Mat noise_cov(const Problem& p, const Vec& /*x*/) {
    switch (p.family) {
        case Family::quadratic:
            return p.s * p.s * Mat::Identity(p.d, p.d);
        case Family::trig:
            return (p.s * p.s / 2.0) * Mat::Identity(1, 1);
        case Family::double_well:
            return (p.s * p.s) * Mat::Identity(1, 1);
    }
    throw std::invalid_argument("noise_cov: unknown family");
}

inline Mat noise_cov_mc(const Problem& p, const Vec& x, std::int64_t m, std::uint64_t seed) {
    if (m < 2) throw std::invalid_argument("noise_cov_mc: m >= 2 required");
    int d = p.d;
    std::vector<PairwiseSum> sum(static_cast<std::size_t>(d));
    std::vector<PairwiseSum> outer(static_cast<std::size_t>(d) * d);
    for (std::int64_t i = 0; i < m; ++i) {
        Stream rng(seed, static_cast<std::uint64_t>(i));
        Vec g = grad_sample(p, x, sample_noise(p, rng));
        for (int a = 0; a < d; ++a) {
            sum[static_cast<std::size_t>(a)].add(g[a]);
            for (int b = 0; b < d; ++b)
                outer[static_cast<std::size_t>(a) * d + b].add(g[a] * g[b]);
        }
    }
    Vec mean(d);
    for (int a = 0; a < d; ++a) mean[a] = sum[static_cast<std::size_t>(a)].total() / m;
    Mat cov(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            double s2 = outer[static_cast<std::size_t>(a) * d + b].total();
            cov(a, b) = (s2 - m * mean[a] * mean[b]) / static_cast<double>(m - 1);
        }
    return 0.5 * (cov + cov.transpose());
}

// --- confinement constants -------------------------------------------------

struct Constants {
    double nu = 0.0;
    double L = 0.0;
    double M1 = 0.0;   // sup of |grad_sample| on B(0,L)
    double M2 = 0.0;   // sup on B(0,R)
    double eta0 = 0.0; // min{(R-L)/M1, 2 nu L^2 / M2^2}
};

namespace detail {

// sup over [0,r] of |x^3 - x|
inline double cubic_sup(double r) {
    double interior = 2.0 / (3.0 * std::sqrt(3.0));
    double edge = std::abs(r * r * r - r);
    return (r >= 1.0 / std::sqrt(3.0)) ? std::max(interior, edge) : edge;
}

// smallest L with r^3 - (1+nu) r - s >= 0 for all r >= L (bisection)
inline double double_well_radius(double nu, double s) {
    auto g = [&](double r) { return r * r * r - (1.0 + nu) * r - s; };
    double lo = std::sqrt((1.0 + nu) / 3.0);  // local minimum of g
    double hi = 2.0 + s;
    while (g(hi) <= 0.0) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-10; ++i) {
        double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }
    return hi;
}

}  // namespace detail

inline Constants constants(const Problem& p, double R) {
    Constants c;
    double rd = std::sqrt(static_cast<double>(p.d));
    switch (p.family) {
        case Family::quadratic:
            c.nu = p.mu / 2.0;
            c.L = 2.0 * p.s * rd / p.mu;
            c.M1 = p.mu * c.L + p.s * rd;
            c.M2 = p.mu * R + p.s * rd;
            break;
        case Family::trig:
            c.nu = p.mu / 2.0;
            c.L = 2.0 * p.s / p.mu;
            c.M1 = p.mu * c.L + p.s;
            c.M2 = p.mu * R + p.s;
            break;
        case Family::double_well:
            c.nu = 0.25;
            c.L = detail::double_well_radius(c.nu, p.s);
            c.M1 = detail::cubic_sup(c.L) + p.s;
            c.M2 = detail::cubic_sup(R) + p.s;
            break;
        default:
            throw std::invalid_argument("constants: unknown family");
    }
    if (R <= c.L)
        throw std::domain_error("constants: R must exceed the confinement radius L = " +
                                std::to_string(c.L));
    c.eta0 = std::min((R - c.L) / c.M1, 2.0 * c.nu * c.L * c.L / (c.M2 * c.M2));
    return c;
}

// largest eigenvalue of the noise covariance, constant in x for built-ins
inline double noise_cov_sup(const Problem& p) {
    switch (p.family) {
        case Family::quadratic: return p.s * p.s;
        case Family::trig: return p.s * p.s / 2.0;
        case Family::double_well: return p.s * p.s;
    }
    throw std::invalid_argument("noise_cov_sup: unknown family");
}

}  // namespace sgdlab
