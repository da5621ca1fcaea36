#pragma once

// Experiment dispatch: a Config in, artifact bytes out. Everything except the
// manifest (which embeds wall time) is a pure function of the config, so
// reruns with the same config and seed produce byte-identical CSV/JSON files.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "sgdlab/config.hpp"
#include "sgdlab/sde.hpp"
#include "sgdlab/sgd.hpp"
#include "sgdlab/version.hpp"

namespace sgdlab {

inline std::string fmt17(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

struct RunOutput {
    std::vector<std::pair<std::string, std::string>> tables;  // csv filename -> bytes
    nlohmann::json results;
    bool check_failed = false;  // a checked assertion failed -> exit 1
};

namespace detail {

class CsvBuilder {
public:
    explicit CsvBuilder(const std::string& header) : out_(header + "\n") {}
    CsvBuilder& col(double v) {
        sep();
        out_ += fmt17(v);
        return *this;
    }
    CsvBuilder& col(std::int64_t v) {
        sep();
        out_ += std::to_string(v);
        return *this;
    }
    CsvBuilder& col(const std::string& s) {
        sep();
        out_ += s;
        return *this;
    }
    void endrow() {
        out_ += '\n';
        first_ = true;
    }
    std::string take() { return std::move(out_); }

private:
    void sep() {
        if (!first_) out_ += ',';
        first_ = false;
    }
    std::string out_;
    bool first_ = true;
};

inline nlohmann::json fit_json(const LineFit& f) {
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}};
}

inline PdeConfig pde_config_of(const Config& c, int target_records) {
    PdeConfig pc;
    pc.B = c.B != 0.0 ? c.B : c.R2 + std::max(0.4, 0.05 * c.R2);
    pc.n_x = c.n_x;
    pc.dt = c.dt;
    pc.T = c.T;
    pc.scheme = c.scheme == "explicit" ? PdeScheme::explicit_euler : PdeScheme::crank_nicolson;
    pc.corrected = c.corrected;
    if (c.record_every > 0) {
        pc.record_every = c.record_every;
    } else {
        std::int64_t n = std::llround(c.T / c.dt);
        pc.record_every = static_cast<int>(std::max<std::int64_t>(1, n / target_records));
    }
    return pc;
}

inline SdeConfig sde_config_of(const Config& c) {
    SdeConfig sc;
    sc.eta = c.eta;
    sc.h = c.h > 0.0 ? c.h : c.eta / 10.0;
    sc.T = c.T;
    sc.x0 = x0_of(c);
    sc.seed = c.seed;
    sc.corrected = c.corrected;
    return sc;
}

inline std::string state_header(const std::string& lead, int d) {
    std::string h = lead;
    for (int i = 0; i < d; ++i) h += ",x_" + std::to_string(i);
    return h;
}

inline RunOutput run_weak_error(const Config& c, bool require_fit) {
    Cutoff cut = cutoff_of(c);
    Observable phi = observable_of(c);
    WeakErrorOptions o = weak_error_options_of(c);
    std::vector<WeakErrorPoint> pts =
        weak_error_curve(c.problem, cut, phi, eta_list_of(c), c.T, o);

    CsvBuilder t("eta,T,error,u_source,U_source,noise_budget,flags");
    nlohmann::json jp = nlohmann::json::array();
    int usable = 0;
    for (const WeakErrorPoint& pt : pts) {
        t.col(pt.eta)
            .col(pt.T)
            .col(pt.error)
            .col(source_name(pt.u_source))
            .col(source_name(pt.U_source))
            .col(pt.noise_budget)
            .col(std::string(pt.usable ? "ok" : "unusable"));
        t.endrow();
        jp.push_back({{"eta", pt.eta},
                      {"T", pt.T},
                      {"error", pt.error},
                      {"u_source", source_name(pt.u_source)},
                      {"U_source", source_name(pt.U_source)},
                      {"noise_budget", pt.noise_budget},
                      {"usable", pt.usable}});
        usable += pt.usable ? 1 : 0;
    }
    RunOutput out;
    out.tables.emplace_back("weak_error.csv", t.take());
    out.results["points"] = jp;
    if (usable >= 3)
        out.results["fit"] = fit_json(order_fit(pts));
    else if (require_fit)
        order_fit(pts);  // throws naming the >= 3 usable points requirement
    return out;
}

inline RunOutput run_uniformity(const Config& c) {
    if (c.T_list.size() < 2)
        throw std::invalid_argument("config key numerics.T_list: need at least two horizons");
    UniformityResult r = uniformity_check(c.problem, cutoff_of(c), observable_of(c), c.eta,
                                          c.T_list, weak_error_options_of(c));
    CsvBuilder t("eta,T,error,ratio");
    double max_ratio = 0.0;
    for (std::size_t k = 0; k < r.T.size(); ++k) {
        t.col(r.eta).col(r.T[k]).col(r.error[k]).col(r.ratio[k]);
        t.endrow();
        max_ratio = std::max(max_ratio, r.ratio[k]);
    }
    RunOutput out;
    out.tables.emplace_back("uniformity.csv", t.take());
    out.results = {{"eta", r.eta},
                   {"T", r.T},
                   {"error", r.error},
                   {"ratio", r.ratio},
                   {"max_ratio", max_ratio}};
    return out;
}

inline RunOutput run_truncation(const Config& c) {
    TruncationResult r = truncation_check(c.problem, cutoff_of(c), observable_of(c),
                                          eta_list_of(c), c.n_probe, weak_error_options_of(c));
    CsvBuilder t("eta,residual");
    for (std::size_t k = 0; k < r.eta.size(); ++k) {
        t.col(r.eta[k]).col(r.residual[k]);
        t.endrow();
    }
    RunOutput out;
    out.tables.emplace_back("truncation.csv", t.take());
    out.results = {{"fit", fit_json(r.fit)}, {"n_probe", r.n_probe}};
    return out;
}

inline RunOutput run_trap_check(const Config& c) {
    std::int64_t n_steps = c.n_steps > 0 ? c.n_steps : 10000;
    TrapReport r =
        trap_check(c.problem, c.R, c.eta, n_steps, c.M, c.seed, c.threads, c.force);
    CsvBuilder t("eta,eta0,R,n_paths,n_steps,escapes,max_norm");
    t.col(r.eta).col(r.eta0).col(r.R).col(r.n_paths).col(r.n_steps).col(r.escapes).col(
        r.max_norm);
    t.endrow();
    RunOutput out;
    out.tables.emplace_back("trap.csv", t.take());
    out.results = {{"eta", r.eta},
                   {"eta0", r.eta0},
                   {"escapes", r.escapes},
                   {"max_norm", r.max_norm},
                   {"trapped", r.escapes == 0}};
    // with force past eta0 the run is report-only; below eta0 escapes fail it
    out.check_failed = r.escapes > 0 && r.eta <= r.eta0;
    return out;
}

inline RunOutput run_derivative_decay(const Config& c) {
    PdeConfig pc = pde_config_of(c, 256);
    ScalarField f = solve_kolmogorov(c.problem, cutoff_of(c), c.eta, observable_of(c), pc);
    DecaySeries s = derivative_sup_series(f, c.order, c.R);
    DecayFit fit = decay_fit(s, c.t_min);
    CsvBuilder t("t,sup_derivative");
    for (std::size_t k = 0; k < s.t.size(); ++k) {
        t.col(s.t[k]).col(s.sup[k]);
        t.endrow();
    }
    RunOutput out;
    out.tables.emplace_back("decay.csv", t.take());
    out.results = {{"C", fit.C},
                   {"gamma", fit.gamma},
                   {"residual", fit.residual},
                   {"truncated", fit.truncated},
                   {"order", c.order},
                   {"t_min", c.t_min},
                   {"gamma_positive", fit.gamma > 0.0}};
    return out;
}

inline RunOutput run_moments(const Config& c) {
    SdeConfig sc = sde_config_of(c);
    SdeCurve m = moment_curve(c.problem, cutoff_of(c), sc, c.M, c.m, c.threads);
    double amp = c.amp > 0.0 ? c.amp : std::pow(sc.x0.squaredNorm(), c.m);
    std::vector<double> vals;
    vals.reserve(m.values.size());
    CsvBuilder t("t,value,std_error");
    for (std::size_t k = 0; k < m.t.size(); ++k) {
        vals.push_back(m.values[k].value);
        t.col(m.t[k]).col(m.values[k].value).col(m.values[k].std_error);
        t.endrow();
    }
    EnvelopeFit fit = fit_envelope(m.t, vals, amp);
    RunOutput out;
    out.tables.emplace_back("moments.csv", t.take());
    out.results = {{"C", fit.C},
                   {"gamma", fit.gamma},
                   {"max_excess", fit.max_excess},
                   {"amp", amp},
                   {"m", c.m},
                   {"gamma_positive", fit.gamma > 0.0}};
    return out;
}

inline RunOutput run_horizon(const Config& c) {
    HorizonResult hr = horizon_experiment(c.problem, cutoff_of(c), observable_of(c),
                                          eta_list_of(c), c.beta, weak_error_options_of(c),
                                          c.escape_paths);
    CsvBuilder t("eta,T_horizon,n_within,n_beyond,E_within,E_beyond,escape_max_norm,flags");
    nlohmann::json jp = nlohmann::json::array();
    bool beyond_dominates = true;
    for (const HorizonPoint& pt : hr.points) {
        t.col(pt.eta)
            .col(pt.T_horizon)
            .col(pt.n_within)
            .col(pt.n_beyond)
            .col(pt.E_within)
            .col(pt.E_beyond)
            .col(pt.escape_max_norm)
            .col(std::string(pt.flagged ? "escaped" : "ok"));
        t.endrow();
        jp.push_back({{"eta", pt.eta},
                      {"T_horizon", pt.T_horizon},
                      {"n_within", pt.n_within},
                      {"n_beyond", pt.n_beyond},
                      {"E_within", pt.E_within},
                      {"E_beyond", pt.E_beyond},
                      {"escape_max_norm", pt.escape_max_norm},
                      {"flagged", pt.flagged}});
        if (!pt.flagged && pt.E_beyond < pt.E_within) beyond_dominates = false;
    }
    RunOutput out;
    out.tables.emplace_back("horizon.csv", t.take());
    out.results = {{"beta", hr.beta},
                   {"within_fit", fit_json(hr.within_fit)},
                   {"points", jp},
                   {"beyond_dominates", beyond_dominates}};
    return out;
}

inline RunOutput run_simulate_sgd(const Config& c) {
    std::int64_t n_steps = c.n_steps > 0 ? c.n_steps : 100;
    Stream rng(c.seed, 0);
    std::vector<Vec> path = sgd_trajectory(c.problem, x0_of(c), c.eta, n_steps, rng);
    CsvBuilder t(state_header("step", c.problem.d));
    for (std::size_t k = 0; k < path.size(); ++k) {
        t.col(static_cast<std::int64_t>(k));
        for (int i = 0; i < c.problem.d; ++i) t.col(path[k][i]);
        t.endrow();
    }
    RunOutput out;
    out.tables.emplace_back("path.csv", t.take());
    std::vector<double> fin(path.back().data(), path.back().data() + c.problem.d);
    out.results = {{"n_steps", n_steps}, {"final", fin}};
    return out;
}

inline RunOutput run_simulate_sde(const Config& c) {
    SdeConfig sc = sde_config_of(c);
    std::vector<Vec> path = simulate_sde(c.problem, cutoff_of(c), sc);
    CsvBuilder t(state_header("t", c.problem.d));
    for (std::size_t k = 0; k < path.size(); ++k) {
        t.col(static_cast<double>(k) * sc.eta);
        for (int i = 0; i < c.problem.d; ++i) t.col(path[k][i]);
        t.endrow();
    }
    RunOutput out;
    out.tables.emplace_back("path.csv", t.take());
    std::vector<double> fin(path.back().data(), path.back().data() + c.problem.d);
    out.results = {{"n_epochs", static_cast<std::int64_t>(path.size()) - 1}, {"final", fin}};
    return out;
}

inline RunOutput run_solve_pde(const Config& c) {
    PdeConfig pc = pde_config_of(c, 50);
    ScalarField f = solve_kolmogorov(c.problem, cutoff_of(c), c.eta, observable_of(c), pc);
    CsvBuilder t("t,x,u");
    for (std::size_t k = 0; k < f.times.size(); ++k)
        for (int i = 0; i < f.grid.n; ++i) {
            t.col(f.times[k]).col(f.grid.x(i)).col(f.fields[k][i]);
            t.endrow();
        }
    RunOutput out;
    out.tables.emplace_back("solution.csv", t.take());
    out.results = {{"n_times", f.times.size()},
                   {"n_x", f.grid.n},
                   {"B", pc.B},
                   {"t_final", f.times.back()}};
    return out;
}

}  // namespace detail

inline RunOutput run_experiment(const Config& c) {
    if (c.experiment == "weak-error") return detail::run_weak_error(c, false);
    if (c.experiment == "order-fit") return detail::run_weak_error(c, true);
    if (c.experiment == "uniformity") return detail::run_uniformity(c);
    if (c.experiment == "truncation") return detail::run_truncation(c);
    if (c.experiment == "trap-check") return detail::run_trap_check(c);
    if (c.experiment == "derivative-decay") return detail::run_derivative_decay(c);
    if (c.experiment == "moments") return detail::run_moments(c);
    if (c.experiment == "horizon") return detail::run_horizon(c);
    if (c.experiment == "simulate-sgd") return detail::run_simulate_sgd(c);
    if (c.experiment == "simulate-sde") return detail::run_simulate_sde(c);
    if (c.experiment == "solve-pde") return detail::run_solve_pde(c);
    throw std::invalid_argument("config key experiment: unknown experiment \"" + c.experiment +
                                "\"");
}

inline void write_text_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + path.string());
}

inline void write_artifacts(const Config& c, const RunOutput& out, double wall_seconds) {
    namespace fs = std::filesystem;
    fs::path dir(c.out_dir);
    fs::create_directories(dir);
    bool want_csv = false, want_json = false;
    for (const std::string& f : c.formats) {
        want_csv = want_csv || f == "csv";
        want_json = want_json || f == "json";
    }
    if (want_csv)
        for (const auto& [name, bytes] : out.tables) write_text_file(dir / name, bytes);
    if (want_json) {
        nlohmann::json results = out.results;
        results["check_failed"] = out.check_failed;
        write_text_file(dir / "results.json", results.dump(2) + "\n");
    }
    nlohmann::json manifest = {{"experiment", c.experiment},
                               {"config", config_to_json(c)},
                               {"version", version_string},
                               {"seed", c.seed},
                               {"wall_time_seconds", wall_seconds}};
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

// returns the process exit code: 0 ran clean, 1 a checked assertion failed
inline int run_and_write(const Config& c) {
    auto t0 = std::chrono::steady_clock::now();
    RunOutput out = run_experiment(c);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_artifacts(c, out, wall);
    return out.check_failed ? 1 : 0;
}

}  // namespace sgdlab
