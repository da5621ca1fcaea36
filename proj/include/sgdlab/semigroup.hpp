#pragma once

// Deterministic 1-D evolution of U^n(x) = E_x phi(X_n) on a uniform grid:
// one application averages cubic interpolants of the current field at the
// post-step points x - eta * grad f(x; xi) over the exact noise law.
//
// The stencil plan is precomputed once; building it verifies that every
// query stays inside the grid, so interpolation never extrapolates.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sgdlab/interp.hpp"
#include "sgdlab/observables.hpp"
#include "sgdlab/problems.hpp"

namespace sgdlab {

inline Vec sample_on_grid(const Observable& obs, const Problem& p, const UniformGrid& g) {
    Vec u(g.n);
    for (int i = 0; i < g.n; ++i) u[i] = eval1(obs, p, g.x(i));
    return u;
}

inline int nearest_node(const UniformGrid& g, double x) {
    int i = static_cast<int>(std::lround((x - g.lo) / g.h()));
    return std::min(std::max(i, 0), g.n - 1);
}

class TransferOperator {
public:
    TransferOperator(const Problem& p, const UniformGrid& grid, double eta, int noise_nodes = 64)
        : problem_(p), grid_(grid), eta_(eta) {
        validate(p);
        if (p.d != 1) throw std::invalid_argument("transfer operator: 1-D only");
        if (!(eta > 0.0)) throw std::invalid_argument("transfer operator: eta must be > 0");
        NoiseRule rule = noise_rule(p, noise_nodes);
        std::size_t K = rule.nodes.size();
        k_ = K;
        base_.resize(static_cast<std::size_t>(grid.n) * K);
        w_.resize(static_cast<std::size_t>(grid.n) * K * 4);
        Vec x(1);
        double slack = 16.0 * (std::abs(grid.lo) + std::abs(grid.hi)) * 1e-16;
        for (int i = 0; i < grid.n; ++i) {
            x[0] = grid.x(i);
            for (std::size_t k = 0; k < K; ++k) {
                double q = x[0] - eta * grad_sample(p, x, rule.nodes[k])[0];
                if (q < grid.lo - slack || q > grid.hi + slack)
                    throw std::domain_error(
                        "transfer operator: post-step point leaves the grid; "
                        "reduce eta or enlarge the grid");
                CubicStencil st = cubic_stencil(grid, q);
                std::size_t at = (static_cast<std::size_t>(i) * K + k);
                base_[at] = st.base;
                for (int j = 0; j < 4; ++j) w_[at * 4 + j] = rule.weights[k] * st.w[j];
            }
        }
    }

    const UniformGrid& grid() const { return grid_; }
    double eta() const { return eta_; }

    void apply(const Vec& in, Vec& out) const {
        if (in.size() != grid_.n) throw std::invalid_argument("apply: field/grid size mismatch");
        out.resize(grid_.n);
        for (int i = 0; i < grid_.n; ++i) {
            double acc = 0.0;
            std::size_t row = static_cast<std::size_t>(i) * k_;
            for (std::size_t k = 0; k < k_; ++k) {
                std::size_t at = row + k;
                int b = base_[at];
                const double* w = &w_[at * 4];
                acc += w[0] * in[b] + w[1] * in[b + 1] + w[2] * in[b + 2] + w[3] * in[b + 3];
            }
            out[i] = acc;
        }
    }

    Vec apply(const Vec& in) const {
        Vec out;
        apply(in, out);
        return out;
    }

    // n applications starting from u; visit(step, field) is called at step 0
    // and after each application.  Enforces the max principle per step.
    template <class Visit>
    Vec iterate(Vec u, std::int64_t n, Visit&& visit) const {
        double sup = u.cwiseAbs().maxCoeff();
        visit(std::int64_t{0}, static_cast<const Vec&>(u));
        Vec next(grid_.n);
        for (std::int64_t step = 1; step <= n; ++step) {
            apply(u, next);
            u.swap(next);
            double sup_next = u.cwiseAbs().maxCoeff();
            if (sup_next > sup + 1e-9 * std::max(1.0, sup))
                throw std::runtime_error("transfer operator: sup norm grew under iteration");
            sup = std::min(sup, sup_next);
            visit(step, static_cast<const Vec&>(u));
        }
        return u;
    }

    Vec iterate(Vec u, std::int64_t n) const {
        return iterate(std::move(u), n, [](std::int64_t, const Vec&) {});
    }

private:
    Problem problem_;
    UniformGrid grid_;
    double eta_;
    std::size_t k_ = 0;
    std::vector<int> base_;
    std::vector<double> w_;
};

}  // namespace sgdlab
