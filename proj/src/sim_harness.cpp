#include "ddsra/sim_harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ddsra/util.hpp"

namespace ddsra {

BaselineResources resolve_baseline_resources(const EnvModel& env, const BaselineSettings& settings) {
    const Scenario& scn = env.scenario();
    const int layer_count = static_cast<int>(env.layer_count());
    BaselineResources fixed;
    fixed.partition.resize(scn.devices.size());

    for (int n = 0; n < scn.device_count(); ++n) {
        const DeviceProfile& dev = scn.devices[static_cast<std::size_t>(n)];
        std::vector<int> feasible;
        for (int l = 0; l <= layer_count; ++l) {
            if (leq_with_slack(env.device_memory(n, l), dev.memory_cap_bytes)) feasible.push_back(l);
        }
        if (feasible.empty()) {
            throw std::runtime_error("baseline resources: no memory-feasible split for device " +
                                     std::to_string(n));
        }
        if (settings.partition_mode == "fixed") {
            const int want = settings.fixed_partition;
            if (std::find(feasible.begin(), feasible.end(), want) == feasible.end()) {
                throw std::runtime_error("baseline resources: fixed partition violates device memory");
            }
            fixed.partition[static_cast<std::size_t>(n)] = want;
        } else {
            fixed.partition[static_cast<std::size_t>(n)] = feasible[(feasible.size() - 1) / 2];
        }
    }

    // bump splits up where a gateway's aggregate top portion does not fit
    for (int m = 0; m < scn.gateway_count(); ++m) {
        const GatewayProfile& gw = scn.gateways[static_cast<std::size_t>(m)];
        const std::vector<int>& assoc = env.devices_of(m);
        auto used = [&] {
            double sum = 0;
            for (int n : assoc) sum += env.top_memory(n, fixed.partition[static_cast<std::size_t>(n)]);
            return sum;
        };
        int guard = static_cast<int>(assoc.size()) * (layer_count + 1);
        while (!leq_with_slack(used(), gw.memory_cap_bytes) && guard-- > 0) {
            int best = -1;
            double best_relief = 0;
            for (int n : assoc) {
                const int l = fixed.partition[static_cast<std::size_t>(n)];
                if (l >= layer_count) continue;
                if (!leq_with_slack(env.device_memory(n, l + 1),
                                    scn.devices[static_cast<std::size_t>(n)].memory_cap_bytes)) {
                    continue;
                }
                const double relief = env.top_memory(n, l) - env.top_memory(n, l + 1);
                if (relief > best_relief) {
                    best_relief = relief;
                    best = n;
                }
            }
            if (best < 0) break;
            ++fixed.partition[static_cast<std::size_t>(best)];
        }
        if (!leq_with_slack(used(), gw.memory_cap_bytes)) {
            throw std::runtime_error("baseline resources: gateway memory infeasible for gateway " +
                                     std::to_string(m));
        }
    }

    fixed.gateway_freq.resize(scn.gateways.size());
    fixed.tx_power.resize(scn.gateways.size());
    for (int m = 0; m < scn.gateway_count(); ++m) {
        const GatewayProfile& gw = scn.gateways[static_cast<std::size_t>(m)];
        const std::vector<int>& assoc = env.devices_of(m);
        fixed.gateway_freq[static_cast<std::size_t>(m)]
            .assign(assoc.size(), gw.freq_max_hz / static_cast<double>(assoc.size()));
        fixed.tx_power[static_cast<std::size_t>(m)] = settings.tx_power_fraction * gw.max_tx_power_w;
    }
    return fixed;
}

namespace {

std::vector<bool> uniform_subset(int count, int take, Rng& rng) {
    std::vector<int> order(static_cast<std::size_t>(count));
    std::iota(order.begin(), order.end(), 0);
    for (int i = 0; i < take; ++i) {
        const int pick = i + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(count - i));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick)]);
    }
    std::vector<bool> mask(static_cast<std::size_t>(count), false);
    for (int i = 0; i < take; ++i) mask[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;
    return mask;
}

double fixed_lambda(const EnvModel& env, const BaselineResources& fixed, int m, int j,
                    const RoundRealization& real) {
    const std::vector<int>& assoc = env.devices_of(m);
    std::vector<int> split(assoc.size());
    for (std::size_t i = 0; i < assoc.size(); ++i) {
        split[i] = fixed.partition[static_cast<std::size_t>(assoc[i])];
    }
    return env.training_time(m, split, fixed.gateway_freq[static_cast<std::size_t>(m)]) +
           env.uplink_time(m, j, fixed.tx_power[static_cast<std::size_t>(m)], real) +
           env.downlink_time(m, j, real);
}

}  // namespace

std::vector<bool> baseline_select(Policy policy, int round, const EnvModel& env,
                                  const BaselineResources& fixed, const RoundRealization& real,
                                  const std::vector<double>& last_gateway_loss, Rng& rng) {
    const int m_count = env.scenario().gateway_count();
    const int j_count = env.scenario().channel.channel_count;

    switch (policy) {
        case Policy::RandomScheduling:
            return uniform_subset(m_count, j_count, rng);
        case Policy::RoundRobin: {
            std::vector<bool> mask(static_cast<std::size_t>(m_count), false);
            for (int i = 0; i < j_count; ++i) {
                mask[static_cast<std::size_t>((round * j_count + i) % m_count)] = true;
            }
            return mask;
        }
        case Policy::LossDriven: {
            if (last_gateway_loss.empty()) return uniform_subset(m_count, j_count, rng);
            // favors the floors that currently train best (lowest loss)
            std::vector<int> order(static_cast<std::size_t>(m_count));
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                return last_gateway_loss[static_cast<std::size_t>(a)] <
                       last_gateway_loss[static_cast<std::size_t>(b)];
            });
            std::vector<bool> mask(static_cast<std::size_t>(m_count), false);
            for (int i = 0; i < j_count; ++i) mask[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;
            return mask;
        }
        case Policy::DelayDriven: {
            // greedy bottleneck matching on the fixed-resource delay table
            std::vector<bool> gw_used(static_cast<std::size_t>(m_count), false);
            std::vector<bool> ch_used(static_cast<std::size_t>(j_count), false);
            std::vector<bool> mask(static_cast<std::size_t>(m_count), false);
            for (int pick = 0; pick < j_count; ++pick) {
                double best = kInfinity;
                int bm = -1, bj = -1;
                for (int m = 0; m < m_count; ++m) {
                    if (gw_used[static_cast<std::size_t>(m)]) continue;
                    for (int j = 0; j < j_count; ++j) {
                        if (ch_used[static_cast<std::size_t>(j)]) continue;
                        const double value = fixed_lambda(env, fixed, m, j, real);
                        if (value < best) {
                            best = value;
                            bm = m;
                            bj = j;
                        }
                    }
                }
                if (bm < 0) break;
                gw_used[static_cast<std::size_t>(bm)] = true;
                ch_used[static_cast<std::size_t>(bj)] = true;
                mask[static_cast<std::size_t>(bm)] = true;
            }
            return mask;
        }
        case Policy::Ddsra:
            break;
    }
    throw std::logic_error("baseline_select called with the adaptive policy");
}

Metrics summarize(const std::vector<RoundTrace>& traces, int gateways) {
    Metrics metrics;
    metrics.participation_rate.assign(static_cast<std::size_t>(gateways), 0.0);
    double latency_sum = 0;
    for (const RoundTrace& row : traces) {
        latency_sum += row.tau_s;
        metrics.cumulative_latency.push_back(latency_sum);
        for (int m : row.selected) metrics.participation_rate[static_cast<std::size_t>(m)] += 1.0;
        metrics.energy_violations += row.energy_violations;
        metrics.memory_violations += row.memory_violations;
        if (row.relaxed_channels > 0) ++metrics.relaxed_rounds;
        if (!row.fl_updated && !std::isnan(row.fl_loss)) ++metrics.failed_fl_rounds;
        metrics.loss_curve.push_back(row.fl_loss);
    }
    if (!traces.empty()) {
        metrics.time_avg_latency = latency_sum / static_cast<double>(traces.size());
        for (double& rate : metrics.participation_rate) rate /= static_cast<double>(traces.size());
        metrics.final_queues = traces.back().queues;
        metrics.final_loss = traces.back().fl_loss;
    } else {
        metrics.final_loss = std::numeric_limits<double>::quiet_NaN();
    }
    return metrics;
}

ExperimentResult run_experiment(const ScenarioConfig& config, const ExperimentOptions& options) {
    const Scenario& scn = config.scenario;
    const EnvModel env(scn);
    const int m_count = scn.gateway_count();
    const int j_count = scn.channel.channel_count;

    const bool with_fl = options.with_fl && config.fl.enabled;
    if (options.policy == Policy::LossDriven && !with_fl) {
        throw std::runtime_error("loss_driven policy needs the training kernel enabled");
    }

    ControlParams control = config.control.solver;
    control.V = options.v;

    // data statistics feed the participation targets
    std::vector<DataStats> stats = config.device_stats;
    SyntheticTask task;
    if (with_fl || config.control.stats_source == StatsSource::Estimated) {
        task = SyntheticTask::generate(scn, config.fl, config.device_skew, mix_seed(options.seed, 0x7a5c));
    }
    if (config.control.stats_source == StatsSource::Estimated) {
        FlRunner warmup(task, scn, config.fl, mix_seed(options.seed, 0x3a97));
        const std::vector<bool> everyone(static_cast<std::size_t>(m_count), true);
        for (int t = 0; t < config.fl.warmup_rounds; ++t) warmup.step(everyone);
        stats = estimate_constants(warmup.probe());
    }

    ExperimentResult result;
    result.phi = divergence_bounds(scn, stats, config.fl.step_size, scn.local_epochs);
    result.gamma = participation_rates(result.phi, j_count);

    LambdaSolver solver(env, control);
    BaselineResources fixed;
    if (options.policy != Policy::Ddsra) {
        fixed = resolve_baseline_resources(env, config.baseline);
    }

    std::optional<FlRunner> fl;
    if (with_fl) fl.emplace(task, scn, config.fl, mix_seed(options.seed, 0xf1));

    VirtualQueues state;
    state.q.assign(static_cast<std::size_t>(m_count), 0.0);
    state.gamma = result.gamma;
    std::vector<double> last_gateway_loss;
    Rng select_rng(mix_seed(options.seed, 0x5e1));

    for (int t = 0; t < options.rounds; ++t) {
        const RoundRealization real = sample_round(scn, mix_seed(options.seed, 0xe000000 + t));
        RoundTrace row;
        row.t = t;
        row.lambda_gateway.assign(static_cast<std::size_t>(m_count), kInfinity);
        row.gateway_energy_j.assign(static_cast<std::size_t>(m_count), 0.0);
        row.device_energy_j.assign(scn.devices.size(), 0.0);
        row.gateway_memory_bytes.assign(static_cast<std::size_t>(m_count), 0.0);
        row.device_partition.assign(scn.devices.size(), -1);
        row.device_gateway_freq.assign(scn.devices.size(), 0.0);
        row.gateway_power_w.assign(static_cast<std::size_t>(m_count), 0.0);

        std::vector<ScheduledGateway> scheduled;
        std::vector<bool> selected_mask(static_cast<std::size_t>(m_count), false);

        if (options.policy == Policy::Ddsra) {
            const std::vector<LambdaEntry> entries = solver.solve_all(real);
            std::vector<std::vector<double>> lambda(static_cast<std::size_t>(m_count),
                                                    std::vector<double>(static_cast<std::size_t>(j_count)));
            for (int m = 0; m < m_count; ++m) {
                for (int j = 0; j < j_count; ++j) {
                    lambda[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)] =
                        entries[static_cast<std::size_t>(m) * j_count + j].lambda;
                }
            }
            const AssignmentOutcome outcome = assign_channels(lambda, state.q, control);
            row.relaxed_channels = outcome.relaxed_channels;

            for (int j = 0; j < j_count; ++j) {
                const int m = outcome.gateway_of_channel[static_cast<std::size_t>(j)];
                if (m < 0) continue;
                const LambdaEntry& entry = entries[static_cast<std::size_t>(m) * j_count + j];
                ScheduledGateway g;
                g.gateway = m;
                g.channel = j;
                g.partition = entry.partition;
                g.gateway_freq = entry.gateway_freq;
                g.tx_power = entry.tx_power;
                scheduled.push_back(g);
                selected_mask[static_cast<std::size_t>(m)] = true;
                row.lambda_gateway[static_cast<std::size_t>(m)] = entry.lambda;
            }
            for (int m = 0; m < m_count; ++m) {
                if (selected_mask[static_cast<std::size_t>(m)]) continue;
                for (int j = 0; j < j_count; ++j) {
                    row.lambda_gateway[static_cast<std::size_t>(m)] =
                        std::min(row.lambda_gateway[static_cast<std::size_t>(m)],
                                 lambda[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)]);
                }
            }

            const FeasibilityReport feas = check_round_feasibility(env, scheduled, real);
            if (!feas.ok) {
                throw std::logic_error("optimizer emitted an infeasible schedule at round " +
                                       std::to_string(t));
            }
            if (options.oracle_check) {
                // two routes to the objective: the matching's stored delays
                // versus a fresh environment evaluation of the decision
                const double direct = drift_penalty_objective(env, scheduled, real, state.q, control.V);
                if (!std::isfinite(direct) ||
                    std::abs(direct - outcome.objective) > 1e-6 * (1.0 + std::abs(direct))) {
                    throw std::logic_error("oracle check: objective mismatch at round " +
                                           std::to_string(t));
                }
            }
        } else {
            selected_mask = baseline_select(options.policy, t, env, fixed, real, last_gateway_loss,
                                            select_rng);
            int next_channel = 0;
            for (int m = 0; m < m_count; ++m) {
                if (!selected_mask[static_cast<std::size_t>(m)]) continue;
                const std::vector<int>& assoc = env.devices_of(m);
                ScheduledGateway g;
                g.gateway = m;
                g.channel = next_channel++;
                g.partition.reserve(assoc.size());
                for (int n : assoc) g.partition.push_back(fixed.partition[static_cast<std::size_t>(n)]);
                g.gateway_freq = fixed.gateway_freq[static_cast<std::size_t>(m)];
                g.tx_power = fixed.tx_power[static_cast<std::size_t>(m)];
                scheduled.push_back(g);
                row.lambda_gateway[static_cast<std::size_t>(m)] = env.gateway_round_time(g, real);
            }
            const FeasibilityReport feas = check_round_feasibility(env, scheduled, real);
            row.energy_violations = feas.energy_violations;
            row.memory_violations = feas.memory_violations;
        }

        row.tau_s = env.round_latency(scheduled, real);
        row.objective = drift_penalty_objective(env, scheduled, real, state.q, control.V);
        for (const ScheduledGateway& g : scheduled) {
            row.selected.push_back(g.gateway);
            const std::vector<int>& assoc = env.devices_of(g.gateway);
            double gw_energy = env.gateway_training_energy(g.gateway, g.partition, g.gateway_freq) +
                               env.uplink_energy(g.gateway, g.channel, g.tx_power, real);
            row.gateway_energy_j[static_cast<std::size_t>(g.gateway)] = gw_energy;
            row.gateway_memory_bytes[static_cast<std::size_t>(g.gateway)] =
                env.gateway_memory(g.gateway, g.partition);
            row.gateway_power_w[static_cast<std::size_t>(g.gateway)] = g.tx_power;
            for (std::size_t i = 0; i < assoc.size(); ++i) {
                row.device_energy_j[static_cast<std::size_t>(assoc[i])] =
                    env.device_training_energy(assoc[i], g.partition[i]);
                row.device_partition[static_cast<std::size_t>(assoc[i])] = g.partition[i];
                row.device_gateway_freq[static_cast<std::size_t>(assoc[i])] = g.gateway_freq[i];
            }
        }
        std::sort(row.selected.begin(), row.selected.end());

        if (with_fl) {
            // an energy shortfall voids the round's training result
            const bool apply = row.energy_violations == 0;
            const FlRoundOutcome fl_round = fl->step(selected_mask, apply);
            row.fl_updated = fl_round.updated && apply;
            row.fl_loss = fl_round.global_loss;
            last_gateway_loss = fl_round.gateway_loss;
        } else {
            row.fl_loss = std::numeric_limits<double>::quiet_NaN();
        }

        state.q = queue_update(state.q, selected_mask, state.gamma);
        row.queues = state.q;
        result.traces.push_back(std::move(row));
    }

    result.metrics = summarize(result.traces, m_count);
    result.bounds = analysis_bounds(scn, result.gamma, control.V, options.rounds,
                                    result.metrics.time_avg_latency);
    return result;
}

}  // namespace ddsra
