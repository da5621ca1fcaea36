// Command-line front end: one subcommand per experiment, a JSON config file,
// and a handful of overriding flags. Exit codes: 0 clean, 1 a checked
// assertion failed or the run itself broke down, 2 bad config or arguments.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "sgdlab/config.hpp"
#include "sgdlab/run.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument("config: cannot read file \"" + path + "\"");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

const char* describe(const std::string& name) {
    if (name == "simulate-sgd") return "run one stochastic gradient chain and dump the path";
    if (name == "simulate-sde") return "run one diffusion path and dump the epoch states";
    if (name == "solve-pde") return "solve the backward equation and dump the field";
    if (name == "weak-error") return "weak error curve over step sizes (order-fit alias)";
    if (name == "trap-check") return "count chain iterates escaping the confinement ball";
    if (name == "truncation") return "one-step defect of the transfer operator vs the flow";
    if (name == "uniformity") return "weak error growth across nested time horizons";
    if (name == "derivative-decay") return "exponential decay of field derivatives";
    if (name == "moments") return "bounding envelope over diffusion moment curves";
    if (name == "horizon") return "weak error inside vs beyond the log(1/eta) horizon";
    return "";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic gradient chains, their modified diffusions, and the error between"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    int threads = 1;
    const char* names[] = {"simulate-sgd", "simulate-sde",     "solve-pde", "weak-error",
                           "trap-check",   "truncation",       "uniformity", "derivative-decay",
                           "moments",      "horizon"};
    for (const char* name : names) {
        CLI::App* sub = app.add_subcommand(name, describe(name));
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_option("--seed", seed, "RNG seed (overrides config)");
        sub->add_option("--threads", threads, "worker thread cap (overrides config)");
    }
    CLI11_PARSE(app, argc, argv);

    try {
        CLI::App* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        sgdlab::Config c = sgdlab::parse_config(config_path.empty() ? "" : slurp(config_path));
        if (sub->count("--out")) c.out_dir = out_dir;
        if (sub->count("--seed")) c.seed = seed;
        if (sub->count("--threads")) c.threads = threads;
        if (c.experiment.empty()) c.experiment = name;
        bool alias = name == "weak-error" && c.experiment == "order-fit";
        if (c.experiment != name && !alias)
            throw std::invalid_argument("config key experiment: \"" + c.experiment +
                                        "\" does not match subcommand \"" + name + "\"");
        return sgdlab::run_and_write(c);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
