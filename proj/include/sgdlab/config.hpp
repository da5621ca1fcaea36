#pragma once

// JSON experiment configuration: strict parsing (unknown keys rejected, typed
// diagnostics naming the offending key), environment-variable overrides with
// the SGDLAB_ prefix, and a fully materialized echo for the run manifest.

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "sgdlab/cutoff.hpp"
#include "sgdlab/harness.hpp"
#include "sgdlab/kolmogorov.hpp"
#include "sgdlab/observables.hpp"
#include "sgdlab/problems.hpp"

namespace sgdlab {

struct Config {
    std::string experiment;

    Problem problem{Family::quadratic, 1, 1.0, 0.5};
    double R = 2.0;
    double R2 = 0.0;  // 0 -> 2R

    double eta = 0.1;
    std::vector<double> eta_list;  // empty -> {eta}
    double T = 1.0;
    std::vector<double> T_list;
    std::int64_t M = 10000;
    double h = 0.0;  // sde substep, 0 -> eta/10
    int grid_points = 4097;
    double grid_half_width = 0.0;  // 0 -> R
    int noise_nodes = 64;
    double dt = 1e-3;
    double B = 0.0;  // 0 -> R2 + max(0.4, 0.05 R2)
    int n_x = 4097;
    std::string scheme = "crank_nicolson";
    int record_every = 0;  // 0 -> auto
    std::int64_t n_steps = 0;  // 0 -> per-experiment default
    std::vector<double> probes = {-1.0, -0.5, 0.0, 0.5, 1.0};
    std::vector<double> x0 = {1.0};
    double beta = 0.5;
    int m = 1;
    std::int64_t n_probe = 0;
    bool corrected = true;
    bool force = false;
    std::string u_source = "ou_exact";
    std::string U_source = "closed_form";
    std::string observable = "coordinate";
    int observable_index = 0;
    std::vector<double> coefficients;
    double tol_mult = 10.0;
    std::int64_t escape_paths = 1000;
    double t_min = 1.0;
    int order = 1;
    std::int64_t u_mc_paths = 100000;
    double amp = 0.0;  // moment envelope amplitude, 0 -> |x0|^{2m}

    std::string out_dir = "out";
    std::vector<std::string> formats = {"csv", "json"};
    std::uint64_t seed = 0;
    int threads = 1;
};

namespace detail {

using nlohmann::json;

inline std::string key_path(const std::string& block, const std::string& key) {
    return block.empty() ? key : block + "." + key;
}

inline void reject_unknown(const json& j, const std::string& block,
                           const std::vector<std::string>& allowed) {
    if (!j.is_object())
        throw std::invalid_argument("config block " + (block.empty() ? "top level" : block) +
                                    ": expected an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const std::string& k : allowed)
            if (item.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw std::invalid_argument("config key " + key_path(block, item.key()) +
                                        ": unknown key");
    }
}

template <class T>
T take(const json& j, const std::string& block, const std::string& key, T def,
       const char* expect) {
    if (!j.contains(key)) return def;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument("config key " + key_path(block, key) + ": expected " +
                                    expect);
    }
}

inline std::vector<double> take_vector(const json& j, const std::string& block,
                                       const std::string& key, std::vector<double> def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (v.is_number()) return {v.get<double>()};
    try {
        return v.get<std::vector<double>>();
    } catch (const json::exception&) {
        throw std::invalid_argument("config key " + key_path(block, key) +
                                    ": expected a number or an array of numbers");
    }
}

// env var SGDLAB_<PATH> (dots -> underscores, uppercased) overrides a key;
// values are parsed as JSON when possible, else taken as strings
inline void apply_env_override(json& root, const std::string& path) {
    std::string name = "SGDLAB_";
    for (char ch : path)
        name += (ch == '.') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    const char* raw = std::getenv(name.c_str());
    if (!raw) return;
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = std::string(raw);
    }
    json* at = &root;
    std::size_t start = 0;
    for (;;) {
        std::size_t dot = path.find('.', start);
        std::string part = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (dot == std::string::npos) {
            (*at)[part] = value;
            return;
        }
        at = &((*at)[part]);
        if (!at->is_object()) *at = json::object();
        start = dot + 1;
    }
}

inline const std::vector<std::string>& known_paths() {
    static const std::vector<std::string> paths = {
        "experiment", "seed", "threads",
        "problem.family", "problem.mu", "problem.s", "problem.d",
        "cutoff.R", "cutoff.R2",
        "numerics.eta", "numerics.eta_list", "numerics.T", "numerics.T_list", "numerics.M",
        "numerics.h", "numerics.grid_points", "numerics.grid_half_width", "numerics.noise_nodes",
        "numerics.dt", "numerics.B", "numerics.n_x", "numerics.scheme", "numerics.record_every",
        "numerics.n_steps", "numerics.probes", "numerics.x0", "numerics.beta", "numerics.m",
        "numerics.n_probe", "numerics.corrected", "numerics.force", "numerics.u_source",
        "numerics.U_source", "numerics.observable", "numerics.observable_index",
        "numerics.coefficients", "numerics.tol_mult", "numerics.escape_paths", "numerics.t_min",
        "numerics.order", "numerics.u_mc_paths", "numerics.amp",
        "output.directory", "output.formats"};
    return paths;
}

}  // namespace detail

inline void apply_env_overrides(nlohmann::json& root) {
    for (const std::string& path : detail::known_paths()) detail::apply_env_override(root, path);
}

inline Config config_from_json(const nlohmann::json& root) {
    using detail::take;
    using detail::take_vector;
    using nlohmann::json;

    detail::reject_unknown(root, "",
                           {"experiment", "problem", "cutoff", "numerics", "output", "seed",
                            "threads"});
    Config c;
    c.experiment = take<std::string>(root, "", "experiment", "", "a string");
    c.seed = take<std::uint64_t>(root, "", "seed", c.seed, "a nonnegative integer");
    c.threads = take<int>(root, "", "threads", c.threads, "an integer");
    if (c.threads < 1) throw std::invalid_argument("config key threads: must be >= 1");

    if (root.contains("problem")) {
        const json& b = root.at("problem");
        detail::reject_unknown(b, "problem", {"family", "mu", "s", "d"});
        c.problem.family = family_from_name(
            take<std::string>(b, "problem", "family", family_name(c.problem.family), "a string"));
        c.problem.mu = take<double>(b, "problem", "mu", c.problem.mu, "a number");
        c.problem.s = take<double>(b, "problem", "s", c.problem.s, "a number");
        c.problem.d = take<int>(b, "problem", "d", c.problem.d, "an integer");
    }
    validate(c.problem);

    if (root.contains("cutoff")) {
        const json& b = root.at("cutoff");
        detail::reject_unknown(b, "cutoff", {"R", "R2"});
        c.R = take<double>(b, "cutoff", "R", c.R, "a number");
        c.R2 = take<double>(b, "cutoff", "R2", c.R2, "a number");
    }
    if (!(c.R > 0.0)) throw std::invalid_argument("config key cutoff.R: must be > 0");
    if (c.R2 == 0.0) c.R2 = 2.0 * c.R;
    if (!(c.R2 > c.R))
        throw std::invalid_argument("config key cutoff.R2: must exceed cutoff.R");

    if (root.contains("numerics")) {
        const json& b = root.at("numerics");
        detail::reject_unknown(
            b, "numerics",
            {"eta", "eta_list", "T", "T_list", "M", "h", "grid_points", "grid_half_width",
             "noise_nodes", "dt", "B", "n_x", "scheme", "record_every", "n_steps", "probes", "x0",
             "beta", "m", "n_probe", "corrected", "force", "u_source", "U_source", "observable",
             "observable_index", "coefficients", "tol_mult", "escape_paths", "t_min", "order",
             "u_mc_paths", "amp"});
        c.eta = take<double>(b, "numerics", "eta", c.eta, "a number");
        c.eta_list = take_vector(b, "numerics", "eta_list", c.eta_list);
        c.T = take<double>(b, "numerics", "T", c.T, "a number");
        c.T_list = take_vector(b, "numerics", "T_list", c.T_list);
        c.M = take<std::int64_t>(b, "numerics", "M", c.M, "an integer");
        c.h = take<double>(b, "numerics", "h", c.h, "a number");
        c.grid_points = take<int>(b, "numerics", "grid_points", c.grid_points, "an integer");
        c.grid_half_width =
            take<double>(b, "numerics", "grid_half_width", c.grid_half_width, "a number");
        c.noise_nodes = take<int>(b, "numerics", "noise_nodes", c.noise_nodes, "an integer");
        c.dt = take<double>(b, "numerics", "dt", c.dt, "a number");
        c.B = take<double>(b, "numerics", "B", c.B, "a number");
        c.n_x = take<int>(b, "numerics", "n_x", c.n_x, "an integer");
        c.scheme = take<std::string>(b, "numerics", "scheme", c.scheme, "a string");
        c.record_every = take<int>(b, "numerics", "record_every", c.record_every, "an integer");
        c.n_steps = take<std::int64_t>(b, "numerics", "n_steps", c.n_steps, "an integer");
        c.probes = take_vector(b, "numerics", "probes", c.probes);
        c.x0 = take_vector(b, "numerics", "x0", c.x0);
        c.beta = take<double>(b, "numerics", "beta", c.beta, "a number");
        c.m = take<int>(b, "numerics", "m", c.m, "an integer");
        c.n_probe = take<std::int64_t>(b, "numerics", "n_probe", c.n_probe, "an integer");
        c.corrected = take<bool>(b, "numerics", "corrected", c.corrected, "a boolean");
        c.force = take<bool>(b, "numerics", "force", c.force, "a boolean");
        c.u_source = take<std::string>(b, "numerics", "u_source", c.u_source, "a string");
        c.U_source = take<std::string>(b, "numerics", "U_source", c.U_source, "a string");
        c.observable = take<std::string>(b, "numerics", "observable", c.observable, "a string");
        c.observable_index =
            take<int>(b, "numerics", "observable_index", c.observable_index, "an integer");
        c.coefficients = take_vector(b, "numerics", "coefficients", c.coefficients);
        c.tol_mult = take<double>(b, "numerics", "tol_mult", c.tol_mult, "a number");
        c.escape_paths =
            take<std::int64_t>(b, "numerics", "escape_paths", c.escape_paths, "an integer");
        c.t_min = take<double>(b, "numerics", "t_min", c.t_min, "a number");
        c.order = take<int>(b, "numerics", "order", c.order, "an integer");
        c.u_mc_paths = take<std::int64_t>(b, "numerics", "u_mc_paths", c.u_mc_paths, "an integer");
        c.amp = take<double>(b, "numerics", "amp", c.amp, "a number");
    }
    if (c.scheme != "crank_nicolson" && c.scheme != "explicit")
        throw std::invalid_argument(
            "config key numerics.scheme: must be \"crank_nicolson\" or \"explicit\"");

    if (root.contains("output")) {
        const json& b = root.at("output");
        detail::reject_unknown(b, "output", {"directory", "formats"});
        c.out_dir = take<std::string>(b, "output", "directory", c.out_dir, "a string");
        if (b.contains("formats")) {
            try {
                c.formats = b.at("formats").get<std::vector<std::string>>();
            } catch (const nlohmann::json::exception&) {
                throw std::invalid_argument(
                    "config key output.formats: expected an array of strings");
            }
        }
        for (const std::string& f : c.formats)
            if (f != "csv" && f != "json")
                throw std::invalid_argument("config key output.formats: unknown format \"" + f +
                                            "\"");
    }
    return c;
}

inline Config parse_config(const std::string& text, bool use_env = true) {
    nlohmann::json root;
    try {
        root = text.empty() ? nlohmann::json::object() : nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
    }
    if (use_env) apply_env_overrides(root);
    return config_from_json(root);
}

// fully materialized echo (every default filled in)
inline nlohmann::json config_to_json(const Config& c) {
    nlohmann::json j;
    j["experiment"] = c.experiment;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["problem"] = {{"family", family_name(c.problem.family)},
                    {"mu", c.problem.mu},
                    {"s", c.problem.s},
                    {"d", c.problem.d}};
    j["cutoff"] = {{"R", c.R}, {"R2", c.R2}};
    j["numerics"] = {{"eta", c.eta},
                     {"eta_list", c.eta_list},
                     {"T", c.T},
                     {"T_list", c.T_list},
                     {"M", c.M},
                     {"h", c.h},
                     {"grid_points", c.grid_points},
                     {"grid_half_width", c.grid_half_width},
                     {"noise_nodes", c.noise_nodes},
                     {"dt", c.dt},
                     {"B", c.B},
                     {"n_x", c.n_x},
                     {"scheme", c.scheme},
                     {"record_every", c.record_every},
                     {"n_steps", c.n_steps},
                     {"probes", c.probes},
                     {"x0", c.x0},
                     {"beta", c.beta},
                     {"m", c.m},
                     {"n_probe", c.n_probe},
                     {"corrected", c.corrected},
                     {"force", c.force},
                     {"u_source", c.u_source},
                     {"U_source", c.U_source},
                     {"observable", c.observable},
                     {"observable_index", c.observable_index},
                     {"coefficients", c.coefficients},
                     {"tol_mult", c.tol_mult},
                     {"escape_paths", c.escape_paths},
                     {"t_min", c.t_min},
                     {"order", c.order},
                     {"u_mc_paths", c.u_mc_paths},
                     {"amp", c.amp}};
    j["output"] = {{"directory", c.out_dir}, {"formats", c.formats}};
    return j;
}

// derived pieces shared by the experiment runners

inline Cutoff cutoff_of(const Config& c) { return Cutoff{c.R, c.R2}; }

inline Observable observable_of(const Config& c) {
    Observable o;
    if (c.observable == "coordinate") {
        o.kind = ObservableKind::coordinate;
        o.index = c.observable_index;
    } else if (c.observable == "squared_norm") {
        o.kind = ObservableKind::squared_norm;
    } else if (c.observable == "expected_loss") {
        o.kind = ObservableKind::expected_loss;
    } else if (c.observable == "custom_polynomial") {
        o.kind = ObservableKind::custom_polynomial;
        o.coefficients = c.coefficients;
        if (o.coefficients.empty())
            throw std::invalid_argument(
                "config key numerics.coefficients: required for custom_polynomial");
    } else {
        throw std::invalid_argument("config key numerics.observable: unknown observable \"" +
                                    c.observable + "\"");
    }
    return o;
}

inline WeakErrorOptions weak_error_options_of(const Config& c) {
    WeakErrorOptions o;
    o.u_source = source_from_name(c.u_source);
    o.U_source = source_from_name(c.U_source);
    o.probes = c.probes;
    o.corrected = c.corrected;
    o.grid_points = c.grid_points;
    o.grid_half_width = c.grid_half_width;
    o.noise_nodes = c.noise_nodes;
    o.mc_paths = c.M;
    o.u_mc_paths = c.u_mc_paths;
    o.pde_B = c.B;
    o.pde_n_x = c.n_x;
    o.pde_dt = c.dt;
    o.pde_scheme =
        c.scheme == "explicit" ? PdeScheme::explicit_euler : PdeScheme::crank_nicolson;
    o.seed = c.seed;
    o.threads = c.threads;
    return o;
}

inline std::vector<double> eta_list_of(const Config& c) {
    return c.eta_list.empty() ? std::vector<double>{c.eta} : c.eta_list;
}

inline Vec x0_of(const Config& c) {
    Vec x(static_cast<Eigen::Index>(c.x0.size()));
    for (std::size_t i = 0; i < c.x0.size(); ++i) x[static_cast<Eigen::Index>(i)] = c.x0[i];
    if (x.size() != c.problem.d)
        throw std::invalid_argument("config key numerics.x0: dimension must match problem.d");
    return x;
}

}  // namespace sgdlab
