// Command-line front end: loads a scenario, runs scheduling experiments and
// writes traces plus plot-ready summaries.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddsra/config.hpp"
#include "ddsra/sim_harness.hpp"
#include "ddsra/trace.hpp"
#include "ddsra/util.hpp"

namespace {

int log_level() {
    const char* env = std::getenv("DDSRA_LOG");
    if (env == nullptr) return 1;
    const std::string value = env;
    if (value == "quiet") return 0;
    if (value == "debug") return 2;
    return 1;
}

std::string run_label(ddsra::Policy policy, double v, std::uint64_t seed) {
    std::string label = ddsra::policy_name(policy);
    label += "_V";
    label += ddsra::fmt_double(v);
    label += "_s";
    label += std::to_string(seed);
    return label;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated edge scheduling simulator"};
    app.require_subcommand(1);

    CLI::App* run = app.add_subcommand("run", "run experiments from a scenario config");
    std::string config_path;
    std::string out_dir = "out";
    std::string policy_arg;
    std::vector<double> sweep_v;
    int rounds_arg = -1;
    double v_arg = -1;
    // CLI11 parses into int64; seeds are non-negative
    std::int64_t seed_arg = -1;
    bool oracle_check = false;
    run->add_option("--config", config_path, "scenario config path")->required();
    run->add_option("--policy", policy_arg, "ddsra|random|round_robin|loss_driven|delay_driven");
    run->add_option("--rounds", rounds_arg, "number of communication rounds");
    run->add_option("--V", v_arg, "latency weight of the scheduler");
    run->add_option("--seed", seed_arg, "experiment seed");
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--sweep-V", sweep_v, "comma-separated V values")->delimiter(',');
    run->add_flag("--oracle-check", oracle_check, "enable per-round cross checks");

    CLI11_PARSE(app, argc, argv);

    const int verbosity = log_level();
    try {
        ddsra::ScenarioConfig config = ddsra::load_config(config_path);

        std::vector<ddsra::Policy> policies = config.control.policies;
        if (!policy_arg.empty()) policies = {ddsra::policy_from_name(policy_arg)};
        std::vector<double> v_values = config.control.v_values;
        if (v_arg > 0) v_values = {v_arg};
        if (!sweep_v.empty()) v_values = sweep_v;
        std::vector<std::uint64_t> seeds = config.control.seeds;
        if (seed_arg >= 0) seeds = {static_cast<std::uint64_t>(seed_arg)};
        const int rounds = rounds_arg >= 0 ? rounds_arg : config.control.rounds;

        std::filesystem::create_directories(out_dir);
        const std::uint64_t hash = ddsra::config_hash(config);

        std::vector<std::unique_ptr<ddsra::ExperimentResult>> owned;
        std::map<double, std::vector<ddsra::LabeledResult>> by_v;
        for (double v : v_values) {
            for (ddsra::Policy policy : policies) {
                for (std::uint64_t seed : seeds) {
                    ddsra::ExperimentOptions options;
                    options.policy = policy;
                    options.v = v;
                    options.rounds = rounds;
                    options.seed = seed;
                    options.with_fl = config.fl.enabled;
                    options.oracle_check = oracle_check;
                    if (verbosity >= 1) {
                        std::cerr << "[run] policy=" << ddsra::policy_name(policy) << " V=" << v
                                  << " seed=" << seed << " rounds=" << rounds << "\n";
                    }
                    auto result = std::make_unique<ddsra::ExperimentResult>(
                        ddsra::run_experiment(config, options));

                    const std::string label = run_label(policy, v, seed);
                    ddsra::TraceHeader header{hash, seed, ddsra::policy_name(policy), v, rounds};
                    ddsra::write_trace_file(
                        (std::filesystem::path(out_dir) / ("trace_" + label + ".tsv")).string(),
                        header, result->traces);
                    if (verbosity >= 2) {
                        std::cerr << "[run] " << label
                                  << " avg_latency=" << result->metrics.time_avg_latency << "\n";
                    }
                    by_v[v].push_back({label, result.get()});
                    owned.push_back(std::move(result));
                }
            }
        }

        for (const auto& [v, results] : by_v) {
            const std::string dir =
                (std::filesystem::path(out_dir) / ("summary_V" + ddsra::fmt_double(v))).string();
            ddsra::emit_plot_data(dir, results);
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
