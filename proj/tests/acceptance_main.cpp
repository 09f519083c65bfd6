// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Oracles are exhaustive or straight-line re-implementations kept
// independent of the library paths they check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "ddsra/config.hpp"
#include "ddsra/ddsra_core.hpp"
#include "ddsra/dnn_cost.hpp"
#include "ddsra/fl_kernel.hpp"
#include "ddsra/hungarian.hpp"
#include "ddsra/participation.hpp"
#include "ddsra/sim_harness.hpp"
#include "ddsra/trace.hpp"
#include "ddsra/util.hpp"
#include "oracles.hpp"

using namespace ddsra;

namespace {

int failures = 0;

class Timer {
public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

void report(int index, const char* name, bool pass, const std::string& detail, double seconds) {
    std::printf("[%s] criterion %2d: %-28s %s (%.2fs)\n", pass ? "PASS" : "FAIL", index, name,
                detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// ---------------------------------------------------------------- criterion 1
// straight-line re-implementation of the published per-layer cost rows
struct RowCosts {
    std::uint64_t fwd, bwd, mem;
};

RowCosts straight_line_rows(const LayerSpec& l) {
    const std::uint64_t bs = l.batch_size, sf = l.precision_bytes;
    if (l.kind == LayerKind::Convolution) {
        const std::uint64_t fwd =
            2 * bs * l.in_channels * l.filter_height * l.filter_width * l.out_channels *
            l.out_height * l.out_width;
        const std::uint64_t err = 2 * bs * (2 * l.filter_width + l.filter_width * l.out_width - 2) *
                                  (2 * l.filter_height + l.filter_height * l.out_height - 2);
        const std::uint64_t mem =
            sf * l.in_channels * l.filter_height * l.filter_width * l.out_channels +
            sf * bs * l.out_channels * l.out_height * l.out_width +
            sf * bs * l.in_channels * l.in_height * l.in_width +
            sf * l.in_channels * l.filter_height * l.filter_width * l.out_channels;
        return {fwd, err + fwd, mem};
    }
    if (l.kind == LayerKind::Pooling) {
        const std::uint64_t fwd = bs * l.in_channels * l.in_height * l.in_width;
        const std::uint64_t mem = sf * bs * l.out_channels * l.out_height * l.out_width +
                                  sf * bs * l.in_channels * l.in_height * l.in_width;
        return {fwd, fwd, mem};
    }
    const std::uint64_t fwd = 2 * bs * l.input_size * l.output_size;
    const std::uint64_t mem = l.input_size * l.output_size + bs * l.output_size +
                              bs * l.input_size + l.input_size * l.output_size;
    return {fwd, fwd + bs * l.input_size * l.output_size, mem};
}

void criterion_1() {
    Timer timer;
    Rng rng(101);
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        LayerSpec layer;
        auto dim = [&](std::uint64_t hi) { return 1 + rng.next_u64() % hi; };
        switch (rng.next_u64() % 3) {
            case 0:
                layer.kind = LayerKind::Convolution;
                layer.in_height = dim(64);
                layer.in_width = dim(64);
                layer.in_channels = dim(32);
                layer.out_height = dim(64);
                layer.out_width = dim(64);
                layer.out_channels = dim(32);
                layer.filter_height = dim(7);
                layer.filter_width = dim(7);
                break;
            case 1:
                layer.kind = LayerKind::Pooling;
                layer.in_height = dim(64);
                layer.in_width = dim(64);
                layer.in_channels = dim(32);
                layer.out_height = dim(32);
                layer.out_width = dim(32);
                layer.out_channels = dim(32);
                break;
            default:
                layer.kind = LayerKind::FullyConnected;
                layer.input_size = dim(2048);
                layer.output_size = dim(512);
                break;
        }
        layer.batch_size = dim(64);
        layer.precision_bytes = dim(8);
        const LayerCost got = layer_cost(layer);
        const RowCosts want = straight_line_rows(layer);
        if (got.forward_flops != want.fwd || got.backward_flops != want.bwd ||
            got.memory_bytes != want.mem) {
            ++mismatches;
        }
    }
    const double elapsed = timer.seconds();
    report(1, "per-layer cost fidelity", mismatches == 0 && elapsed < 1.0,
           "200 random layers, " + std::to_string(mismatches) + " mismatches", elapsed);
}

// ---------------------------------------------------------------- criterion 2
void criterion_2() {
    Timer timer;
    Rng rng(202);
    int within = 0, beyond = 0, infeasible_agreed = 0, solver_missed = 0, grid_missed = 0;
    for (int trial = 0; trial < 100; ++trial) {
        oracles::InstanceKnobs knobs;
        knobs.max_layers = 8;
        if (trial % 4 == 3) knobs.gateway_memory_scale = 0.4;
        if (trial % 9 == 8) knobs.gateway_energy_j = 0.05;
        const Scenario scn = oracles::random_single_gateway_scenario(rng, knobs);
        const EnvModel env(scn);
        ControlParams params;
        const LambdaSolver solver(env, params);
        const RoundRealization real = oracles::random_realization(scn, rng, knobs);
        const LambdaEntry entry = solver.solve(0, 0, real);
        const oracles::GridOptimum grid = oracles::grid_search_lambda(env, 0, 0, real, 50, 50);
        if (!grid.feasible) {
            if (!entry.feasible) {
                ++infeasible_agreed;
            } else if (solver.feasible(0, 0, real, entry.partition, entry.gateway_freq,
                                       entry.tx_power)) {
                ++grid_missed;  // solver found a verified point off the grid
            } else {
                ++solver_missed;
            }
            continue;
        }
        if (!entry.feasible) {
            ++solver_missed;
            std::printf("    instance %d: solver infeasible but grid found %.6g\n", trial,
                        grid.lambda);
            continue;
        }
        if (entry.lambda <= grid.lambda * 1.02 + 1e-12) {
            ++within;
        } else {
            ++beyond;
            std::printf("    instance %d: %.8g vs grid %.8g, descent trace:", trial, entry.lambda,
                        grid.lambda);
            for (double v : entry.bcd_trace) std::printf(" %.6g", v);
            std::printf("\n");
        }
    }
    const double elapsed = timer.seconds();
    char detail[160];
    std::snprintf(detail, sizeof detail,
                  "%d within 2%%, %d beyond, %d infeasible-agreed, %d grid-missed, %d solver-missed",
                  within, beyond, infeasible_agreed, grid_missed, solver_missed);
    report(2, "resource solver optimality", beyond == 0 && solver_missed == 0 && elapsed < 60.0,
           detail, elapsed);
}

// ---------------------------------------------------------------- criterion 3
void criterion_3() {
    Timer timer;
    Rng rng(303);
    int mismatches = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 1 + static_cast<int>(rng.next_u64() % 6);
        std::vector<std::vector<double>> cost(static_cast<std::size_t>(n),
                                              std::vector<double>(static_cast<std::size_t>(n)));
        for (auto& row : cost) {
            for (double& v : row) v = rng.uniform(-10.0, 10.0);
        }
        const AssignmentResult got = hungarian_min_cost(cost);

        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        double best = kInfinity;
        do {
            double total = 0;
            for (int i = 0; i < n; ++i) {
                total += cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
            }
            best = std::min(best, total);
        } while (std::next_permutation(perm.begin(), perm.end()));
        if (std::abs(got.cost - best) > 1e-9 * (1.0 + std::abs(best))) ++mismatches;
    }
    const double elapsed = timer.seconds();
    report(3, "matching against enumeration", mismatches == 0 && elapsed < 10.0,
           "500 matrices up to 6x6, " + std::to_string(mismatches) + " mismatches", elapsed);
}

// ---------------------------------------------------------------- criterion 4
void criterion_4() {
    Timer timer;
    Rng rng(404);
    int ok = 0, bad = 0, zero_ok = 0;
    for (int trial = 0; trial < 100; ++trial) {
        oracles::InstanceKnobs knobs;
        const Scenario scn = oracles::random_single_gateway_scenario(rng, knobs);
        const EnvModel env(scn);
        ControlParams params;
        const LambdaSolver solver(env, params);
        RoundRealization real = oracles::random_realization(scn, rng, knobs);
        const int layer_count = static_cast<int>(env.layer_count());
        const std::vector<int> local_all(2, layer_count);
        const std::vector<double> no_freq(2, 0.0);

        real.gateway_energy_j[0] = rng.uniform(1e-5, 0.2);
        const PowerResult pr = solver.optimal_power(0, 0, real, local_all, no_freq);
        if (pr.zero_branch) {
            if (pr.power == 0.0) ++zero_ok;
            continue;
        }
        if (pr.residual < 1e-9) ++ok;
        else ++bad;
    }
    // drained budget must take the zero branch
    {
        Rng drained_rng(405);
        oracles::InstanceKnobs knobs;
        knobs.gateway_energy_j = 0.0;
        const Scenario scn = oracles::random_single_gateway_scenario(drained_rng, knobs);
        const EnvModel env(scn);
        ControlParams params;
        const LambdaSolver solver(env, params);
        const RoundRealization real = oracles::random_realization(scn, drained_rng, knobs);
        const std::vector<int> local_all(2, static_cast<int>(env.layer_count()));
        const std::vector<double> no_freq(2, 0.0);
        const PowerResult pr = solver.optimal_power(0, 0, real, local_all, no_freq);
        if (pr.zero_branch && pr.power == 0.0) ++zero_ok;
        else ++bad;
    }
    const double elapsed = timer.seconds();
    char detail[120];
    std::snprintf(detail, sizeof detail, "%d roots under 1e-9 residual, %d zero-branch, %d bad", ok,
                  zero_ok, bad);
    report(4, "transmit power equation", bad == 0 && zero_ok >= 1, detail, elapsed);
}

// ---------------------------------------------------------------- criterion 5
void criterion_5() {
    Timer timer;
    const ScenarioConfig config = ScenarioConfig::paper_default();
    bool pass = true;
    double worst_deficit = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ExperimentOptions options;
        options.policy = Policy::Ddsra;
        options.v = 0.01;
        options.rounds = 5000;
        options.seed = seed;
        options.with_fl = false;
        const ExperimentResult result = run_experiment(config, options);
        for (int m = 0; m < config.scenario.gateway_count(); ++m) {
            const double rate = result.metrics.participation_rate[static_cast<std::size_t>(m)];
            const double target = result.gamma[static_cast<std::size_t>(m)];
            const double deficit = target - rate;
            worst_deficit = std::max(worst_deficit, deficit);
            if (rate < target - result.bounds.participation_deficit_bound) pass = false;
            if (deficit > 0.05) pass = false;
        }
    }
    const double elapsed = timer.seconds();
    char detail[120];
    std::snprintf(detail, sizeof detail, "5 seeds x 5000 rounds, worst deficit %.4f",
                  worst_deficit);
    report(5, "queue-driven participation", pass && elapsed < 300.0, detail, elapsed);
}

// ---------------------------------------------------------------- criterion 6
void criterion_6() {
    Timer timer;
    const ScenarioConfig config = ScenarioConfig::paper_default();
    std::vector<double> latency_medians, min_rate_medians;
    for (double v : {0.01, 10.0, 1000.0}) {
        std::vector<double> latencies, min_rates;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            ExperimentOptions options;
            options.policy = Policy::Ddsra;
            options.v = v;
            options.rounds = 2000;
            options.seed = seed;
            options.with_fl = false;
            const ExperimentResult result = run_experiment(config, options);
            latencies.push_back(result.metrics.time_avg_latency);
            double lowest = 1.0;
            for (double rate : result.metrics.participation_rate) lowest = std::min(lowest, rate);
            min_rates.push_back(lowest);
        }
        latency_medians.push_back(median(latencies));
        min_rate_medians.push_back(median(min_rates));
    }
    const bool latency_monotone = latency_medians[0] >= latency_medians[1] - 1e-12 &&
                                  latency_medians[1] >= latency_medians[2] - 1e-12;
    const bool rate_monotone = min_rate_medians[0] >= min_rate_medians[1] - 1e-12 &&
                               min_rate_medians[1] >= min_rate_medians[2] - 1e-12;
    const double elapsed = timer.seconds();
    char detail[200];
    std::snprintf(detail, sizeof detail,
                  "latency %.4f/%.4f/%.4f, min rate %.3f/%.3f/%.3f over V=0.01/10/1000",
                  latency_medians[0], latency_medians[1], latency_medians[2], min_rate_medians[0],
                  min_rate_medians[1], min_rate_medians[2]);
    report(6, "latency-participation trade", latency_monotone && rate_monotone, detail, elapsed);
}

// ---------------------------------------------------------------- criterion 7
void criterion_7() {
    Timer timer;
    ScenarioConfig config = ScenarioConfig::paper_default();
    for (DeviceProfile& d : config.scenario.devices) {
        d.local_dataset_size = 120 + 12 * d.id;
        d.batch_size = std::max<std::uint64_t>(
            1, static_cast<std::uint64_t>(std::llround(0.05 * static_cast<double>(d.local_dataset_size))));
    }
    config.fl.model_dim = 4;
    const Scenario& scn = config.scenario;

    const int seeds = 30, rounds = 200;
    std::vector<FlRunner> runners;
    runners.reserve(seeds);
    ConstantsProbe envelope;
    const SyntheticTask task = SyntheticTask::generate(scn, config.fl, config.device_skew, 7001);
    const std::vector<bool> everyone(static_cast<std::size_t>(scn.gateway_count()), true);
    for (int s = 0; s < seeds; ++s) {
        runners.emplace_back(task, scn, config.fl, 7100 + s);
        for (int t = 0; t < rounds; ++t) runners.back().step(everyone);
        envelope = s == 0 ? runners.back().probe() : merge_probes(envelope, runners.back().probe());
    }
    const std::vector<DataStats> stats = estimate_constants(envelope);

    std::uint64_t full_violations = 0, full_checks = 0;
    for (const FlRunner& r : runners) {
        const BoundCheckReport full = check_local_drift_bound(r.records(), stats, config.fl.step_size);
        full_violations += full.violations;
        full_checks += full.checks;
    }
    std::vector<const FlRecords*> all_records;
    for (const FlRunner& r : runners) all_records.push_back(&r.records());
    std::vector<std::uint64_t> batches;
    for (int n = 0; n < task.device_count(); ++n) batches.push_back(task.batch_size(n));
    const BoundCheckReport batch = check_batch_drift_bound(all_records, stats, batches, config.fl.step_size);
    const std::vector<double> phi = divergence_bounds(scn, stats, config.fl.step_size, scn.local_epochs);
    const BoundCheckReport shop = check_divergence_bound(all_records, phi, 0.05);

    const double elapsed = timer.seconds();
    char detail[200];
    std::snprintf(detail, sizeof detail,
                  "drift %llu/%llu, batch-mean %llu, divergence-mean %llu (worst ratio %.2f)",
                  static_cast<unsigned long long>(full_violations),
                  static_cast<unsigned long long>(full_checks),
                  static_cast<unsigned long long>(batch.violations),
                  static_cast<unsigned long long>(shop.violations), shop.worst_ratio);
    report(7, "trajectory drift bounds",
           full_violations == 0 && batch.violations == 0 && shop.violations == 0 && elapsed < 120.0,
           detail, elapsed);
}

// ---------------------------------------------------------------- criterion 8
void criterion_8() {
    Timer timer;
    ScenarioConfig config = ScenarioConfig::paper_default();
    for (DeviceProfile& d : config.scenario.devices) {
        d.local_dataset_size = 240 - 30 * (d.id / 2);
        d.batch_size = std::max<std::uint64_t>(4, d.local_dataset_size / 12);
    }
    config.fl.model_dim = 3;
    config.fl.step_size = 0.1;
    config.fl.label_noise = 0.4;
    for (int n = 0; n < 12; ++n) {
        config.device_skew[static_cast<std::size_t>(n)] = 0.1 + 3.9 * (n / 2) / 5.0;
    }
    const Scenario& scn = config.scenario;

    std::vector<double> weighted_final, uniform_final;
    int wins = 0;
    for (int s = 0; s < 20; ++s) {
        const SyntheticTask task =
            SyntheticTask::generate(scn, config.fl, config.device_skew, 700 + s);
        FlRunner probe_run(task, scn, config.fl, 900 + s);
        const std::vector<bool> everyone(static_cast<std::size_t>(scn.gateway_count()), true);
        for (int t = 0; t < 60; ++t) probe_run.step(everyone);
        const std::vector<DataStats> stats = estimate_constants(probe_run.probe());
        const std::vector<double> phi =
            divergence_bounds(scn, stats, config.fl.step_size, scn.local_epochs);
        const std::vector<double> rates = participation_rates(phi, scn.channel.channel_count);
        const double weighted = run_selection_fl(task, scn, config.fl,
                                                 SelectionRule::GammaWeighted, rates, 200, 70 + s);
        const double uniform =
            run_selection_fl(task, scn, config.fl, SelectionRule::Uniform, rates, 200, 70 + s);
        weighted_final.push_back(weighted);
        uniform_final.push_back(uniform);
        if (weighted < uniform) ++wins;
    }
    const double med_weighted = median(weighted_final);
    const double med_uniform = median(uniform_final);
    const double elapsed = timer.seconds();
    char detail[160];
    std::snprintf(detail, sizeof detail, "median loss %.5f vs %.5f (uniform), %d/20 paired wins",
                  med_weighted, med_uniform, wins);
    report(8, "rate-weighted scheduling gain", med_weighted < med_uniform, detail, elapsed);
}

// ---------------------------------------------------------------- criterion 9
void criterion_9() {
    Timer timer;
    ScenarioConfig config = ScenarioConfig::paper_default();
    config.fl.track_bounds = false;  // baselines only need loss signals
    config.fl.model_dim = 3;

    const std::vector<Policy> policies{Policy::Ddsra, Policy::RandomScheduling, Policy::RoundRobin,
                                       Policy::LossDriven, Policy::DelayDriven};
    std::vector<double> med_latency(policies.size());
    for (std::size_t p = 0; p < policies.size(); ++p) {
        std::vector<double> latencies;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            ExperimentOptions options;
            options.policy = policies[p];
            options.v = 1000.0;
            options.rounds = 1000;
            options.seed = seed;
            options.with_fl = true;
            const ExperimentResult result = run_experiment(config, options);
            latencies.push_back(result.metrics.time_avg_latency);
        }
        med_latency[p] = median(latencies);
    }
    const bool beats_random = med_latency[0] <= med_latency[1];
    const bool beats_rr = med_latency[0] <= med_latency[2];
    const bool beats_loss = med_latency[0] <= med_latency[3];
    const bool near_delay = med_latency[0] <= 1.15 * med_latency[4];
    const double elapsed = timer.seconds();
    char detail[220];
    std::snprintf(detail, sizeof detail,
                  "ddsra %.4f | random %.4f round_robin %.4f loss %.4f delay %.4f",
                  med_latency[0], med_latency[1], med_latency[2], med_latency[3], med_latency[4]);
    report(9, "latency against baselines", beats_random && beats_rr && beats_loss && near_delay,
           detail, elapsed);
}

// --------------------------------------------------------------- criterion 10
void criterion_10() {
    Timer timer;
    ScenarioConfig config = ScenarioConfig::paper_default();
    for (DeviceProfile& d : config.scenario.devices) {
        d.local_dataset_size = 80;
        d.batch_size = 6;
    }
    config.fl.model_dim = 3;
    ExperimentOptions options;
    options.policy = Policy::Ddsra;
    options.v = 1.0;
    options.rounds = 50;
    options.seed = 7;
    options.with_fl = true;
    const TraceHeader header{config_hash(config), options.seed, "ddsra", options.v, options.rounds};
    const std::string first = trace_to_string(header, run_experiment(config, options).traces);
    const std::string second = trace_to_string(header, run_experiment(config, options).traces);
    options.seed = 8;
    const std::string other = trace_to_string(header, run_experiment(config, options).traces);
    const double elapsed = timer.seconds();
    report(10, "byte-identical reruns", first == second && first != other,
           std::to_string(first.size()) + " trace bytes compared", elapsed);
}

}  // namespace

int main() {
    std::printf("acceptance suite (%s)\n", kVersion);
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    if (failures == 0) {
        std::printf("all criteria passed\n");
    } else {
        std::printf("%d criteria FAILED\n", failures);
    }
    return failures;
}
