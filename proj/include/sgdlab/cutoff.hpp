#pragma once

// Smooth compactly supported diffusion coefficient: the gradient-noise
// covariance inside |x| <= R, tapered to zero across [R, R2] by a C-infinity
// partition-of-unity bridge, identically zero beyond R2.

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "sgdlab/problems.hpp"

namespace sgdlab {

struct Cutoff {
    double R = 1.0;
    double R2 = 2.0;
};

inline void validate(const Cutoff& c) {
    if (!(c.R > 0.0)) throw std::invalid_argument("cutoff: R must be > 0");
    if (!(c.R2 > c.R)) throw std::invalid_argument("cutoff: R2 must exceed R");
}

namespace detail {
inline double bridge_g(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
}

// 1 on [0,R], 0 on [R2,inf), smooth monotone bridge between
inline double taper(const Cutoff& c, double r) {
    if (r <= c.R) return 1.0;
    if (r >= c.R2) return 0.0;
    double tau = (r - c.R) / (c.R2 - c.R);
    double a = detail::bridge_g(1.0 - tau);
    double b = detail::bridge_g(tau);
    return a / (a + b);
}

// taper(|x|)^2 * covariance; equals the covariance bitwise inside B(0,R)
inline Mat diffusion(const Problem& p, const Cutoff& c, const Vec& x) {
    double w = taper(c, x.norm());
    return (w * w) * noise_cov(p, x);
}

// taper(|x|) * symmetric PSD square root of the covariance
inline Mat diffusion_sqrt(const Problem& p, const Cutoff& c, const Vec& x) {
    double w = taper(c, x.norm());
    Mat cov = noise_cov(p, x);
    if (p.d == 1) {
        if (cov(0, 0) < -1e-10) throw std::runtime_error("diffusion_sqrt: covariance not PSD");
        Mat root(1, 1);
        root(0, 0) = w * std::sqrt(std::max(cov(0, 0), 0.0));
        return root;
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
    Vec lam = eig.eigenvalues();
    for (int i = 0; i < lam.size(); ++i) {
        if (lam[i] < -1e-10) throw std::runtime_error("diffusion_sqrt: covariance not PSD");
        lam[i] = std::sqrt(std::max(lam[i], 0.0));
    }
    return w * (eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose());
}

// scalar shortcuts for the 1-D solvers
inline double diffusion1(const Problem& p, const Cutoff& c, double x) {
    double w = taper(c, std::abs(x));
    return w * w * noise_cov_sup(p);
}

}  // namespace sgdlab
