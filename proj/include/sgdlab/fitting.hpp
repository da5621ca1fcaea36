#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace sgdlab {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

inline LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::size_t n = xs.size();
    if (n != ys.size() || n < 2) throw std::invalid_argument("fit_line: need >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    double dn = static_cast<double>(n);
    double den = dn * sxx - sx * sx;
    if (den == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = (dn * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / dn;
    double ss_tot = syy - sy * sy / dn;
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = ys[i] - (f.intercept + f.slope * xs[i]);
        ss_res += r * r;
    }
    f.r_squared = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

// log-log regression, e.g. error vs step size
inline LineFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::vector<double> lx(xs.size()), ly(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] <= 0.0 || ys[i] <= 0.0)
            throw std::invalid_argument("fit_loglog: nonpositive data");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    return fit_line(lx, ly);
}

struct DecayFit {
    double C = 0.0;
    double gamma = 0.0;
    double residual = 0.0;  // rms of log residuals on the fit window
    bool truncated = false; // series hit zero and was cut short
};

// Fits sup-norm series ~ C e^{-gamma t} on t >= t_min.
inline DecayFit fit_exp_decay(const std::vector<double>& ts, const std::vector<double>& vals,
                              double t_min = 1.0) {
    if (ts.size() != vals.size()) throw std::invalid_argument("fit_exp_decay: size mismatch");
    DecayFit out;
    std::vector<double> t, lv;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ts[i] < t_min) continue;
        if (vals[i] <= 0.0) {
            out.truncated = true;
            break;
        }
        t.push_back(ts[i]);
        lv.push_back(std::log(vals[i]));
    }
    if (t.size() < 10) throw std::invalid_argument("fit_exp_decay: need >= 10 points past the transient");
    LineFit f = fit_line(t, lv);
    out.C = std::exp(f.intercept);
    out.gamma = -f.slope;
    double ss = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double r = lv[i] - (f.intercept + f.slope * t[i]);
        ss += r * r;
    }
    out.residual = std::sqrt(ss / static_cast<double>(t.size()));
    return out;
}

struct EnvelopeFit {
    double C = 0.0;
    double gamma = 0.0;
    double max_excess = 0.0;  // max over points of value/envelope - 1
};

// Bounding envelope C(1 + amp e^{-gamma t}) over a moment curve: for each
// candidate gamma the minimal admissible C is max_k m_k/(1 + amp e^{-gamma t_k});
// the reported gamma is the largest whose C stays within 2% of the overall
// minimum, i.e. the fastest decay rate compatible with the tightest constant.
inline EnvelopeFit fit_envelope(const std::vector<double>& ts, const std::vector<double>& ms,
                                double amp) {
    if (ts.size() != ms.size() || ts.size() < 3)
        throw std::invalid_argument("fit_envelope: need >= 3 points");
    auto c_for = [&](double g) {
        double c = 0.0;
        for (std::size_t k = 0; k < ts.size(); ++k) {
            double envelope = 1.0 + amp * std::exp(-g * ts[k]);
            c = std::max(c, ms[k] / envelope);
        }
        return c;
    };
    const int n_grid = 600;
    const double g_lo = 1e-3, g_hi = 50.0;
    double c_min = 0.0;
    std::vector<double> gs(n_grid), cs(n_grid);
    for (int i = 0; i < n_grid; ++i) {
        double g = g_lo * std::pow(g_hi / g_lo, static_cast<double>(i) / (n_grid - 1));
        gs[i] = g;
        cs[i] = c_for(g);
        c_min = (i == 0) ? cs[i] : std::min(c_min, cs[i]);
    }
    EnvelopeFit out;
    for (int i = n_grid - 1; i >= 0; --i) {
        if (cs[i] <= 1.02 * c_min) {
            out.gamma = gs[i];
            out.C = cs[i];
            break;
        }
    }
    double excess = -1.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        double envelope = out.C * (1.0 + amp * std::exp(-out.gamma * ts[k]));
        excess = std::max(excess, ms[k] / envelope - 1.0);
    }
    out.max_excess = excess;
    return out;
}

}  // namespace sgdlab
