#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sgdlab {

struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Legendre nodes/weights on [-1,1], Newton iteration on P_n.
inline QuadRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1");
    QuadRule q;
    q.nodes.resize(n);
    q.weights.resize(n);
    const double pi = 3.14159265358979323846;
    int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 1; j <= n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        q.nodes[i] = -z;
        q.nodes[n - 1 - i] = z;
        double w = 2.0 / ((1.0 - z * z) * dp * dp);
        q.weights[i] = w;
        q.weights[n - 1 - i] = w;
    }
    return q;
}

// Same rule mapped to [a,b] with weights normalized to sum to 1 (an average).
inline QuadRule averaged_rule(int n, double a, double b) {
    QuadRule gl = gauss_legendre(n);
    QuadRule q;
    q.nodes.resize(gl.nodes.size());
    q.weights.resize(gl.weights.size());
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double wsum = 0.0;
    for (double w : gl.weights) wsum += w;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        q.nodes[i] = mid + half * gl.nodes[i];
        q.weights[i] = gl.weights[i] / wsum;
    }
    return q;
}

}  // namespace sgdlab
