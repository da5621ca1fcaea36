#pragma once

// Local 4-point Lagrange (cubic) interpolation on uniform grids.

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace sgdlab {

struct UniformGrid {
    double lo = -1.0;
    double hi = 1.0;
    int n = 2;

    double h() const { return (hi - lo) / (n - 1); }
    double x(int i) const { return lo + i * h(); }
    double half_width() const { return 0.5 * (hi - lo); }
};

inline UniformGrid symmetric_grid(double half_width, int n_points) {
    if (n_points < 16) throw std::invalid_argument("grid needs >= 16 points");
    if (!(half_width > 0.0)) throw std::invalid_argument("grid half-width must be positive");
    return UniformGrid{-half_width, half_width, n_points};
}

struct CubicStencil {
    int base = 0;
    double w[4] = {0, 0, 0, 0};
};

// Stencil for query q; q may sit within a round-off sliver outside [lo,hi].
inline CubicStencil cubic_stencil(const UniformGrid& g, double q) {
    double h = g.h();
    double slack = 16.0 * (std::abs(g.lo) + std::abs(g.hi)) * 1e-16 + 1e-300;
    if (q < g.lo - slack || q > g.hi + slack)
        throw std::domain_error("interpolation query outside the grid");
    q = std::min(std::max(q, g.lo), g.hi);
    double s = (q - g.lo) / h;
    int cell = static_cast<int>(std::floor(s));
    cell = std::min(std::max(cell, 0), g.n - 2);
    int base = std::min(std::max(cell - 1, 0), g.n - 4);
    double t = s - base;
    CubicStencil st;
    st.base = base;
    double t1 = t - 1.0, t2 = t - 2.0, t3 = t - 3.0;
    st.w[0] = -t1 * t2 * t3 / 6.0;
    st.w[1] = t * t2 * t3 / 2.0;
    st.w[2] = -t * t1 * t3 / 2.0;
    st.w[3] = t * t1 * t2 / 6.0;
    return st;
}

inline double cubic_eval(const Eigen::VectorXd& values, const CubicStencil& st) {
    return st.w[0] * values[st.base] + st.w[1] * values[st.base + 1] +
           st.w[2] * values[st.base + 2] + st.w[3] * values[st.base + 3];
}

inline double cubic_interp(const UniformGrid& g, const Eigen::VectorXd& values, double q) {
    return cubic_eval(values, cubic_stencil(g, q));
}

}  // namespace sgdlab
