#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddsra/config.hpp"
#include "ddsra/ddsra_core.hpp"
#include "ddsra/env_model.hpp"
#include "ddsra/fl_kernel.hpp"
#include "ddsra/util.hpp"

namespace ddsra {

struct RoundTrace {
    int t = 0;
    std::vector<int> selected;                 // scheduled gateway ids, ascending
    double tau_s = 0;                          // realized round latency
    double objective = 0;                      // drift-plus-penalty value of the round
    std::vector<double> lambda_gateway;        // assigned (or best feasible) delay per gateway
    std::vector<double> queues;                // virtual queues after the update
    std::vector<double> gateway_energy_j;      // consumed
    std::vector<double> device_energy_j;       // consumed
    std::vector<double> gateway_memory_bytes;  // used
    std::vector<int> device_partition;         // split in force; -1 when the floor idles
    std::vector<double> device_gateway_freq;   // gateway cycles assigned per device
    std::vector<double> gateway_power_w;       // transmit power; 0 when idle
    int relaxed_channels = 0;
    int energy_violations = 0;
    int memory_violations = 0;
    bool fl_updated = false;
    double fl_loss = 0;                        // NaN when the kernel is off
};

struct Metrics {
    double time_avg_latency = 0;
    std::vector<double> cumulative_latency;   // running sum per round
    std::vector<double> participation_rate;   // per gateway
    std::vector<double> final_queues;
    int energy_violations = 0;
    int memory_violations = 0;
    int relaxed_rounds = 0;
    int failed_fl_rounds = 0;
    std::vector<double> loss_curve;
    double final_loss = 0;
};

struct ExperimentOptions {
    Policy policy = Policy::Ddsra;
    double v = 1.0;
    int rounds = 100;
    std::uint64_t seed = 1;
    bool with_fl = true;
    bool oracle_check = false;
};

struct ExperimentResult {
    std::vector<RoundTrace> traces;
    Metrics metrics;
    std::vector<double> gamma;
    std::vector<double> phi;
    AnalysisBounds bounds;
};

// Fixed resources used by every non-adaptive policy, resolved once per
// experiment and validated against the static limits.
struct BaselineResources {
    std::vector<int> partition;                     // per device
    std::vector<std::vector<double>> gateway_freq;  // per gateway, per associated device
    std::vector<double> tx_power;                   // per gateway
};

BaselineResources resolve_baseline_resources(const EnvModel& env, const BaselineSettings& settings);

// One selection decision of a non-adaptive policy.
std::vector<bool> baseline_select(Policy policy, int round, const EnvModel& env,
                                  const BaselineResources& fixed, const RoundRealization& real,
                                  const std::vector<double>& last_gateway_loss, Rng& rng);

ExperimentResult run_experiment(const ScenarioConfig& config, const ExperimentOptions& options);

Metrics summarize(const std::vector<RoundTrace>& traces, int gateways);

}  // namespace ddsra
