#pragma once

// 1-D finite-difference solution of the backward equation
//   u_t = -(grad fbar + eta/4 grad |grad fbar|^2) u_x + (eta/2) Lambda(x) u_xx
// on [-B, B] with B beyond the diffusion support, so the boundary rows are
// pure inward advection and need no boundary data.
//
// Advection uses central differences where the cell Peclet number allows and
// first-order upwind elsewhere; both schemes share one precomputed tridiagonal
// operator whose rows sum to zero, so constants are preserved exactly and the
// discrete max principle is enforced per recorded step.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgdlab/cutoff.hpp"
#include "sgdlab/fitting.hpp"
#include "sgdlab/interp.hpp"
#include "sgdlab/observables.hpp"
#include "sgdlab/problems.hpp"

namespace sgdlab {

enum class PdeScheme { crank_nicolson, explicit_euler };

struct PdeConfig {
    double B = 0.0;  // domain half-width, must exceed the cutoff R2
    int n_x = 4097;
    double dt = 1e-3;
    double T = 1.0;
    PdeScheme scheme = PdeScheme::crank_nicolson;
    int record_every = 10;  // snapshot stride in time steps
    bool corrected = true;  // false drops the eta-order drift correction
};

struct ScalarField {
    UniformGrid grid;
    std::vector<double> times;
    std::vector<Vec> fields;  // fields[k] sampled on grid at times[k]
};

namespace detail {

struct Tridiag {
    std::vector<double> lo, di, up;  // (Lu)_i = lo_i u_{i-1} + di_i u_i + up_i u_{i+1}
};

// stationary generator rows; rows sum to zero
inline Tridiag assemble_generator(const Problem& p, const Cutoff& c, double eta, bool corrected,
                                  const UniformGrid& g) {
    Tridiag L;
    L.lo.assign(static_cast<std::size_t>(g.n), 0.0);
    L.di.assign(static_cast<std::size_t>(g.n), 0.0);
    L.up.assign(static_cast<std::size_t>(g.n), 0.0);
    double h = g.h();
    Vec xv(1);
    for (int i = 0; i < g.n; ++i) {
        double x = g.x(i);
        xv[0] = x;
        double b = -(grad_mean(p, xv)[0] + (corrected ? eta * correction_drift(p, xv)[0] : 0.0));
        double D = 0.5 * eta * diffusion1(p, c, x);
        std::size_t k = static_cast<std::size_t>(i);
        if (i == 0) {
            if (b < 0.0)
                throw std::runtime_error("pde: drift must point inward at the left boundary");
            L.di[k] -= b / h;
            L.up[k] += b / h;
            continue;
        }
        if (i == g.n - 1) {
            if (b > 0.0)
                throw std::runtime_error("pde: drift must point inward at the right boundary");
            L.lo[k] -= b / h;
            L.di[k] += b / h;
            continue;
        }
        L.lo[k] += D / (h * h);
        L.di[k] -= 2.0 * D / (h * h);
        L.up[k] += D / (h * h);
        if (std::abs(b) * h <= 2.0 * D) {
            L.lo[k] -= b / (2.0 * h);
            L.up[k] += b / (2.0 * h);
        } else if (b > 0.0) {
            L.di[k] -= b / h;
            L.up[k] += b / h;
        } else {
            L.lo[k] -= b / h;
            L.di[k] += b / h;
        }
    }
    return L;
}

// prefactored Thomas solve for (I - (dt/2) L) x = rhs
class CrankNicolsonSolver {
public:
    CrankNicolsonSolver(const Tridiag& L, double dt) : L_(L), dt_(dt) {
        std::size_t n = L.di.size();
        a_.resize(n);
        b_.resize(n);
        c_.resize(n);
        cp_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            a_[i] = -0.5 * dt * L.lo[i];
            b_[i] = 1.0 - 0.5 * dt * L.di[i];
            c_[i] = -0.5 * dt * L.up[i];
        }
        den_.resize(n);
        den_[0] = b_[0];
        cp_[0] = c_[0] / den_[0];
        for (std::size_t i = 1; i < n; ++i) {
            den_[i] = b_[i] - a_[i] * cp_[i - 1];
            cp_[i] = c_[i] / den_[i];
        }
    }

    void step(Vec& u, Vec& scratch) const {
        std::size_t n = L_.di.size();
        // rhs = (I + (dt/2) L) u
        scratch.resize(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            double acc = u[static_cast<Eigen::Index>(i)] * (1.0 + 0.5 * dt_ * L_.di[i]);
            if (i > 0) acc += 0.5 * dt_ * L_.lo[i] * u[static_cast<Eigen::Index>(i - 1)];
            if (i + 1 < n) acc += 0.5 * dt_ * L_.up[i] * u[static_cast<Eigen::Index>(i + 1)];
            scratch[static_cast<Eigen::Index>(i)] = acc;
        }
        // forward sweep
        scratch[0] /= den_[0];
        for (std::size_t i = 1; i < n; ++i)
            scratch[static_cast<Eigen::Index>(i)] =
                (scratch[static_cast<Eigen::Index>(i)] -
                 a_[i] * scratch[static_cast<Eigen::Index>(i - 1)]) /
                den_[i];
        // back substitution
        u[static_cast<Eigen::Index>(n - 1)] = scratch[static_cast<Eigen::Index>(n - 1)];
        for (std::size_t i = n - 1; i-- > 0;)
            u[static_cast<Eigen::Index>(i)] =
                scratch[static_cast<Eigen::Index>(i)] - cp_[i] * u[static_cast<Eigen::Index>(i + 1)];
    }

private:
    Tridiag L_;
    double dt_;
    std::vector<double> a_, b_, c_, cp_, den_;
};

}  // namespace detail

inline void validate(const Cutoff& c, const PdeConfig& cfg) {
    validate(c);
    if (!(cfg.B > c.R2)) throw std::invalid_argument("pde: B must exceed R2");
    if (cfg.n_x < 16) throw std::invalid_argument("pde: n_x must be >= 16");
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("pde: dt must be > 0");
    if (cfg.T < 0.0) throw std::invalid_argument("pde: T must be >= 0");
    if (cfg.record_every < 1) throw std::invalid_argument("pde: record_every must be >= 1");
}

inline ScalarField solve_kolmogorov(const Problem& p, const Cutoff& c, double eta,
                                    const Observable& phi, const PdeConfig& cfg) {
    validate(p);
    validate(c, cfg);
    if (p.d != 1) throw std::invalid_argument("pde: 1-D only");
    if (!(eta >= 0.0)) throw std::invalid_argument("pde: eta must be >= 0");

    UniformGrid g = symmetric_grid(cfg.B, cfg.n_x);
    detail::Tridiag L = detail::assemble_generator(p, c, eta, cfg.corrected, g);

    double h = g.h();
    double max_lambda = 0.0, max_b = 0.0;
    for (int i = 0; i < g.n; ++i) {
        max_lambda = std::max(max_lambda, diffusion1(p, c, g.x(i)));
        Vec xv(1);
        xv[0] = g.x(i);
        double b =
            -(grad_mean(p, xv)[0] + (cfg.corrected ? eta * correction_drift(p, xv)[0] : 0.0));
        max_b = std::max(max_b, std::abs(b));
    }
    if (cfg.scheme == PdeScheme::explicit_euler) {
        if (eta * max_lambda > 0.0 && cfg.dt > h * h / (eta * max_lambda))
            throw std::invalid_argument("pde: explicit scheme unstable, need dt <= h^2/(eta max Lambda)");
        if (max_b > 0.0 && cfg.dt > h / max_b)
            throw std::invalid_argument("pde: explicit scheme unstable, need dt <= h/max|drift|");
    }

    auto n_steps = static_cast<std::int64_t>(std::llround(cfg.T / cfg.dt));
    if (std::abs(static_cast<double>(n_steps) * cfg.dt - cfg.T) > 1e-9 * std::max(cfg.T, 1.0))
        throw std::invalid_argument("pde: dt must divide T");

    Vec u(g.n);
    for (int i = 0; i < g.n; ++i) u[i] = eval1(phi, p, g.x(i));

    ScalarField field;
    field.grid = g;
    field.times.push_back(0.0);
    field.fields.push_back(u);

    double max_u = u.maxCoeff(), min_u = u.minCoeff();
    auto check_extrema = [&](const Vec& v, double t) {
        double slack = 1e-9 * std::max(1.0, std::max(std::abs(max_u), std::abs(min_u)));
        double mx = v.maxCoeff(), mn = v.minCoeff();
        if (mx > max_u + slack || mn < min_u - slack)
            throw std::runtime_error("pde: max principle violated at t = " + std::to_string(t));
        max_u = std::min(max_u, mx);
        min_u = std::max(min_u, mn);
    };

    detail::CrankNicolsonSolver cn(L, cfg.dt);
    Vec scratch(g.n), next(g.n);
    for (std::int64_t step = 1; step <= n_steps; ++step) {
        if (cfg.scheme == PdeScheme::crank_nicolson) {
            cn.step(u, scratch);
        } else {
            std::size_t n = static_cast<std::size_t>(g.n);
            for (std::size_t i = 0; i < n; ++i) {
                double acc = L.di[i] * u[static_cast<Eigen::Index>(i)];
                if (i > 0) acc += L.lo[i] * u[static_cast<Eigen::Index>(i - 1)];
                if (i + 1 < n) acc += L.up[i] * u[static_cast<Eigen::Index>(i + 1)];
                next[static_cast<Eigen::Index>(i)] = u[static_cast<Eigen::Index>(i)] + cfg.dt * acc;
            }
            u.swap(next);
        }
        if (step % cfg.record_every == 0 || step == n_steps) {
            double t = static_cast<double>(step) * cfg.dt;
            check_extrema(u, t);
            field.times.push_back(t);
            field.fields.push_back(u);
        }
    }
    return field;
}

// --- derivative diagnostics -------------------------------------------------

struct GridSlice {
    UniformGrid grid;
    Vec values;
};

namespace detail {

inline std::size_t time_index(const ScalarField& f, double t) {
    double best = 1e300;
    std::size_t at = 0;
    for (std::size_t k = 0; k < f.times.size(); ++k) {
        double d = std::abs(f.times[k] - t);
        if (d < best) {
            best = d;
            at = k;
        }
    }
    if (best > 1e-9 * std::max(1.0, std::abs(t)))
        throw std::invalid_argument("u_derivative: time not on the field's time grid");
    return at;
}

}  // namespace detail

// central finite differences of order J in {1,2} on the nodes with |x| <= R
inline GridSlice u_derivative(const ScalarField& f, double t, int order, double R) {
    if (order != 1 && order != 2)
        throw std::invalid_argument("u_derivative: order must be 1 or 2");
    if (!(R > 0.0) || R > f.grid.half_width())
        throw std::invalid_argument("u_derivative: need 0 < R <= domain half-width");
    std::size_t k = detail::time_index(f, t);
    const Vec& u = f.fields[k];
    double h = f.grid.h();
    int first = std::max(1, static_cast<int>(std::ceil((-R - f.grid.lo) / h - 1e-12)));
    int last = std::min(f.grid.n - 2, static_cast<int>(std::floor((R - f.grid.lo) / h + 1e-12)));
    if (last < first) throw std::invalid_argument("u_derivative: no interior nodes in B(0,R)");
    GridSlice slice;
    slice.grid = UniformGrid{f.grid.x(first), f.grid.x(last), last - first + 1};
    slice.values.resize(last - first + 1);
    for (int i = first; i <= last; ++i) {
        double v = order == 1 ? (u[i + 1] - u[i - 1]) / (2.0 * h)
                              : (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
        slice.values[i - first] = v;
    }
    return slice;
}

struct DecaySeries {
    std::vector<double> t;
    std::vector<double> sup;  // sup over B(0,R) of |d^J u|
};

inline DecaySeries derivative_sup_series(const ScalarField& f, int order, double R) {
    DecaySeries out;
    out.t.reserve(f.times.size());
    out.sup.reserve(f.times.size());
    for (double t : f.times) {
        GridSlice s = u_derivative(f, t, order, R);
        out.t.push_back(t);
        out.sup.push_back(s.values.cwiseAbs().maxCoeff());
    }
    return out;
}

// exponential-envelope fit of a sup-derivative series; see fit_exp_decay
inline DecayFit decay_fit(const DecaySeries& series, double t_min = 1.0) {
    return fit_exp_decay(series.t, series.sup, t_min);
}

}  // namespace sgdlab
