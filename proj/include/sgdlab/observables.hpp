#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgdlab/problems.hpp"

namespace sgdlab {

enum class ObservableKind { coordinate, squared_norm, expected_loss, custom_polynomial };

struct Observable {
    ObservableKind kind = ObservableKind::coordinate;
    int index = 0;                     // coordinate
    std::vector<double> coefficients;  // custom_polynomial, in x[0]
};

inline Observable coordinate_observable(int i = 0) { return {ObservableKind::coordinate, i, {}}; }
inline Observable squared_norm_observable() { return {ObservableKind::squared_norm, 0, {}}; }
inline Observable expected_loss_observable() { return {ObservableKind::expected_loss, 0, {}}; }

inline std::string observable_name(const Observable& o) {
    switch (o.kind) {
        case ObservableKind::coordinate: return "coordinate";
        case ObservableKind::squared_norm: return "squared_norm";
        case ObservableKind::expected_loss: return "expected_loss";
        case ObservableKind::custom_polynomial: return "custom_polynomial";
    }
    return "?";
}

inline double eval(const Observable& o, const Problem& p, const Vec& x) {
    switch (o.kind) {
        case ObservableKind::coordinate:
            if (o.index < 0 || o.index >= x.size())
                throw std::invalid_argument("observable: coordinate index out of range");
            return x[o.index];
        case ObservableKind::squared_norm:
            return x.squaredNorm();
        case ObservableKind::expected_loss:
            return expected_loss(p, x);
        case ObservableKind::custom_polynomial: {
            double acc = 0.0;
            for (std::size_t k = o.coefficients.size(); k-- > 0;)
                acc = acc * x[0] + o.coefficients[k];
            return acc;
        }
    }
    throw std::invalid_argument("observable: unknown kind");
}

// 1-D shortcut used by the grid solvers
inline double eval1(const Observable& o, const Problem& p, double x) {
    Vec v(1);
    v[0] = x;
    return eval(o, p, v);
}

}  // namespace sgdlab
