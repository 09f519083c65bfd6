#include "ddsra/ddsra_core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

#include "ddsra/hungarian.hpp"
#include "ddsra/util.hpp"

namespace ddsra {

std::vector<double> queue_update(const std::vector<double>& q, const std::vector<bool>& selected,
                                 const std::vector<double>& gamma) {
    std::vector<double> next(q.size());
    for (std::size_t m = 0; m < q.size(); ++m) {
        const double served = selected[m] ? 1.0 : 0.0;
        next[m] = std::max(q[m] - served + gamma[m], 0.0);
    }
    return next;
}

LambdaSolver::LambdaSolver(const EnvModel& env, const ControlParams& params)
    : env_(&env), params_(&params) {}

double LambdaSolver::lambda_value(int m, int j, const RoundRealization& real,
                                  const std::vector<int>& partition, const std::vector<double>& freq,
                                  double power) const {
    const double train = env_->training_time(m, partition, freq);
    const double up = env_->uplink_time(m, j, power, real);
    if (train >= kInfinity || up >= kInfinity) return kInfinity;
    return train + up + env_->downlink_time(m, j, real);
}

bool LambdaSolver::feasible(int m, int j, const RoundRealization& real,
                            const std::vector<int>& partition, const std::vector<double>& freq,
                            double power) const {
    const Scenario& scn = env_->scenario();
    const GatewayProfile& gw = scn.gateways[static_cast<std::size_t>(m)];
    const std::vector<int>& assoc = env_->devices_of(m);
    const int layer_count = static_cast<int>(env_->layer_count());

    if (!(power > 0) || !leq_with_slack(power, gw.max_tx_power_w)) return false;

    double freq_sum = 0;
    for (std::size_t i = 0; i < assoc.size(); ++i) {
        const int n = assoc[i];
        const int split = partition[i];
        if (split < 0 || split > layer_count) return false;
        if (freq[i] < 0) return false;
        freq_sum += freq[i];
        if (env_->top_flops(n, split) > 0 && !(freq[i] > 0)) return false;
        const DeviceProfile& dev = scn.devices[static_cast<std::size_t>(n)];
        if (!leq_with_slack(env_->device_memory(n, split), dev.memory_cap_bytes)) return false;
        if (!leq_with_slack(env_->device_training_energy(n, split),
                            real.device_energy_j[static_cast<std::size_t>(n)])) {
            return false;
        }
    }
    if (!leq_with_slack(gw.freq_min_hz, freq_sum) || !leq_with_slack(freq_sum, gw.freq_max_hz)) return false;
    if (!leq_with_slack(env_->gateway_memory(m, partition), gw.memory_cap_bytes)) return false;

    const double gw_energy = env_->gateway_training_energy(m, partition, freq) +
                             env_->uplink_energy(m, j, power, real);
    return leq_with_slack(gw_energy, real.gateway_energy_j[static_cast<std::size_t>(m)]);
}

LambdaSolver::SplitBounds LambdaSolver::split_interval(int m, int n, double eta, double freq,
                                                       double gw_energy_budget) const {
    const Scenario& scn = env_->scenario();
    const GatewayProfile& gw = scn.gateways[static_cast<std::size_t>(m)];
    const DeviceProfile& dev = scn.devices[static_cast<std::size_t>(n)];
    const int layer_count = static_cast<int>(env_->layer_count());
    const double total = env_->top_flops(n, 0);
    const double scale = env_->train_scale(n);
    const double dev_rate = env_->device_rate(n);
    const double gw_rate = gw.flops_per_cycle * freq;

    SplitBounds b;
    b.lo = 0;
    b.hi = layer_count;

    // time target: scale * (bottom/dev_rate + top/gw_rate) <= eta
    if (!(gw_rate > 0)) {
        b.lo = layer_count;  // top layers unservable, keep everything local
        if (scale * total / dev_rate > eta * (1.0 + 1e-12)) b.empty = true;
    } else {
        const double coef = 1.0 / dev_rate - 1.0 / gw_rate;
        const double budget = eta / scale - total / gw_rate;
        if (coef > 0) {
            if (budget < 0) {
                b.empty = true;
            } else {
                const double bottom_cap = budget / coef;
                int hi = -1;
                for (int l = 0; l <= layer_count; ++l) {
                    if (env_->bottom_flops(n, l) <= bottom_cap * (1.0 + 1e-12)) hi = l;
                }
                if (hi < 0) b.empty = true;
                else b.hi = std::min(b.hi, hi);
            }
        } else if (coef < 0) {
            const double bottom_floor = budget / coef;  // bottom >= this
            int lo = layer_count + 1;
            for (int l = layer_count; l >= 0; --l) {
                if (env_->bottom_flops(n, l) >= bottom_floor * (1.0 - 1e-12)) lo = l;
            }
            if (lo > layer_count) b.empty = true;
            else b.lo = std::max(b.lo, lo);
        } else if (scale * total / dev_rate > eta * (1.0 + 1e-12)) {
            b.empty = true;
        }
    }
    if (b.empty) return b;

    // device memory caps the bottom portion
    {
        int hi = -1;
        for (int l = 0; l <= layer_count; ++l) {
            if (leq_with_slack(env_->device_memory(n, l), dev.memory_cap_bytes)) hi = l;
        }
        if (hi < 0) { b.empty = true; return b; }
        b.hi = std::min(b.hi, hi);
    }
    // gateway energy budget, relaxed per device: this device's offloaded work
    // alone must fit the remaining budget
    if (gw_rate > 0) {
        const double coef_g = env_->gateway_energy_coef(m, n) * freq * freq;
        if (coef_g > 0) {
            int lo = layer_count + 1;
            for (int l = layer_count; l >= 0; --l) {
                if (leq_with_slack(coef_g * env_->top_flops(n, l), gw_energy_budget)) lo = l;
                else break;
            }
            if (lo > layer_count) { b.empty = true; return b; }
            b.lo = std::max(b.lo, lo);
        } else if (gw_energy_budget < 0) {
            b.empty = true;
            return b;
        }
    }
    // gateway memory, relaxed per device
    {
        int lo = layer_count + 1;
        for (int l = layer_count; l >= 0; --l) {
            if (leq_with_slack(env_->top_memory(n, l), gw.memory_cap_bytes)) lo = l;
            else break;
        }
        if (lo > layer_count) { b.empty = true; return b; }
        b.lo = std::max(b.lo, lo);
    }

    if (b.lo > b.hi) b.empty = true;
    return b;
}

std::optional<std::vector<int>> LambdaSolver::splits_for_target(int m, int j,
                                                                const RoundRealization& real,
                                                                const std::vector<double>& freq,
                                                                double power, double eta) const {
    const Scenario& scn = env_->scenario();
    const GatewayProfile& gw = scn.gateways[static_cast<std::size_t>(m)];
    const std::vector<int>& assoc = env_->devices_of(m);
    const int layer_count = static_cast<int>(env_->layer_count());

    const double e_up = env_->uplink_energy(m, j, power, real);
    if (e_up >= kInfinity) return std::nullopt;
    const double gw_budget = real.gateway_energy_j[static_cast<std::size_t>(m)] - e_up;

    std::vector<int> lo(assoc.size()), hi(assoc.size());
    for (std::size_t i = 0; i < assoc.size(); ++i) {
        const SplitBounds b = split_interval(m, assoc[i], eta, freq[i], gw_budget);
        if (b.empty) return std::nullopt;
        lo[i] = b.lo;
        hi[i] = b.hi;
    }

    // device energy caps the bottom portion exactly per device; fold it into
    // the interval ceiling before probing the max-offload end
    for (std::size_t i = 0; i < assoc.size(); ++i) {
        const int n = assoc[i];
        int cap = -1;
        for (int l = 0; l <= layer_count; ++l) {
            if (leq_with_slack(env_->device_training_energy(n, l),
                               real.device_energy_j[static_cast<std::size_t>(n)])) {
                cap = l;
            } else {
                break;
            }
        }
        if (cap < lo[i]) return std::nullopt;
        hi[i] = std::min(hi[i], cap);
        if (lo[i] > hi[i]) return std::nullopt;
    }

    std::vector<int> split(lo);
    // joint gateway memory: raise splits inside their intervals, largest
    // marginal relief first, until the sum fits
    auto gw_mem = [&]() { return env_->gateway_memory(m, split); };
    int guard = static_cast<int>(assoc.size()) * (layer_count + 1) + 1;
    while (!leq_with_slack(gw_mem(), gw.memory_cap_bytes) && guard-- > 0) {
        int best = -1;
        double best_relief = 0;
        for (std::size_t i = 0; i < assoc.size(); ++i) {
            if (split[i] >= hi[i]) continue;
            const double relief = env_->top_memory(assoc[i], split[i]) -
                                  env_->top_memory(assoc[i], split[i] + 1);
            if (relief > best_relief) {
                best_relief = relief;
                best = static_cast<int>(i);
            }
        }
        if (best < 0) return std::nullopt;
        ++split[static_cast<std::size_t>(best)];
    }
    if (!leq_with_slack(gw_mem(), gw.memory_cap_bytes)) return std::nullopt;

    // joint gateway energy at the probe point
    double train_energy = env_->gateway_training_energy(m, split, freq);
    guard = static_cast<int>(assoc.size()) * (layer_count + 1) + 1;
    while (!leq_with_slack(train_energy, gw_budget) && guard-- > 0) {
        int best = -1;
        double best_relief = 0;
        for (std::size_t i = 0; i < assoc.size(); ++i) {
            if (split[i] >= hi[i]) continue;
            const double coef = env_->gateway_energy_coef(m, assoc[i]) * freq[i] * freq[i];
            const double relief = coef * (env_->top_flops(assoc[i], split[i]) -
                                          env_->top_flops(assoc[i], split[i] + 1));
            if (relief > best_relief) {
                best_relief = relief;
                best = static_cast<int>(i);
            }
        }
        if (best < 0) return std::nullopt;
        ++split[static_cast<std::size_t>(best)];
        train_energy = env_->gateway_training_energy(m, split, freq);
    }
    if (!leq_with_slack(train_energy, gw_budget)) return std::nullopt;

    // repair must not have pushed any device past the time target
    for (std::size_t i = 0; i < assoc.size(); ++i) {
        if (env_->pair_train_time(assoc[i], split[i], freq[i]) > eta * (1.0 + 1e-9) + 1e-15) {
            return std::nullopt;
        }
    }
    return split;
}

std::optional<std::vector<int>> LambdaSolver::bisect_partition(int m, int j,
                                                               const RoundRealization& real,
                                                               const std::vector<double>& freq,
                                                               double power) const {
    const Scenario& scn = env_->scenario();
    const GatewayProfile& gw = scn.gateways[static_cast<std::size_t>(m)];
    const std::vector<int>& assoc = env_->devices_of(m);

    double min_batch_scale = kInfinity, max_batch_scale = 0;
    double max_rate = 0, min_rate = kInfinity;
    for (std::size_t i = 0; i < assoc.size(); ++i) {
        min_batch_scale = std::min(min_batch_scale, env_->train_scale(assoc[i]));
        max_batch_scale = std::max(max_batch_scale, env_->train_scale(assoc[i]));
        max_rate = std::max(max_rate, env_->device_rate(assoc[i]));
        min_rate = std::min(min_rate, env_->device_rate(assoc[i]));
        const double gw_rate = gw.flops_per_cycle * freq[i];
        if (gw_rate > 0) {
            max_rate = std::max(max_rate, gw_rate);
            min_rate = std::min(min_rate, gw_rate);
        }
    }
    const double total = env_->top_flops(assoc[0], 0);
    double lo = min_batch_scale * total / max_rate;
    double hi = max_batch_scale * total / min_rate;

    std::optional<std::vector<int>> best = splits_for_target(m, j, real, freq, power, hi);
    if (!best) return std::nullopt;

    for (int iter = 0; iter < 200 && hi - lo > params_->bisection_tol * std::max(1.0, hi); ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (auto candidate = splits_for_target(m, j, real, freq, power, mid)) {
            best = std::move(candidate);
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return best;
}

std::optional<std::vector<double>> LambdaSolver::freqs_for_target(int m, int j,
                                                                  const RoundRealization& real,
                                                                  const std::vector<int>& partition,
                                                                  double power, double theta) const {
    const Scenario& scn = env_->scenario();
    const GatewayProfile& gw = scn.gateways[static_cast<std::size_t>(m)];
    const std::vector<int>& assoc = env_->devices_of(m);

    std::vector<double> freq(assoc.size(), 0.0);
    double freq_sum = 0;
    for (std::size_t i = 0; i < assoc.size(); ++i) {
        const int n = assoc[i];
        const double top = env_->top_flops(n, partition[i]);
        const double bottom_time = env_->device_train_time(n, partition[i]);
        if (top == 0) {
            if (bottom_time > theta * (1.0 + 1e-12)) return std::nullopt;
            continue;
        }
        const double denom = theta / env_->train_scale(n) -
                             env_->bottom_flops(n, partition[i]) / env_->device_rate(n);
        if (!(denom > 0)) return std::nullopt;
        freq[i] = (top / gw.flops_per_cycle) / denom;
        freq_sum += freq[i];
    }
    if (!leq_with_slack(freq_sum, gw.freq_max_hz)) return std::nullopt;

    // pad up to the frequency floor; prefer devices with no offloaded work
    // (zero marginal energy), otherwise the cheapest marginal-energy device
    if (freq_sum < gw.freq_min_hz) {
        const double deficit = gw.freq_min_hz - freq_sum;
        int target = -1;
        double best_marginal = kInfinity;
        for (std::size_t i = 0; i < assoc.size(); ++i) {
            const double top = env_->top_flops(assoc[i], partition[i]);
            const double marginal = env_->gateway_energy_coef(m, assoc[i]) * top *
                                    2.0 * (freq[i] + deficit);
            if (marginal < best_marginal) {
                best_marginal = marginal;
                target = static_cast<int>(i);
            }
        }
        if (target < 0) return std::nullopt;
        freq[static_cast<std::size_t>(target)] += deficit;
    }

    const double e_up = env_->uplink_energy(m, j, power, real);
    if (e_up >= kInfinity) return std::nullopt;
    const double budget = real.gateway_energy_j[static_cast<std::size_t>(m)] - e_up;
    if (!leq_with_slack(env_->gateway_training_energy(m, partition, freq), budget)) return std::nullopt;
    return freq;
}

std::optional<std::vector<double>> LambdaSolver::bisect_frequency(int m, int j,
                                                                  const RoundRealization& real,
                                                                  const std::vector<int>& partition,
                                                                  double power) const {
    const Scenario& scn = env_->scenario();
    const GatewayProfile& gw = scn.gateways[static_cast<std::size_t>(m)];
    const std::vector<int>& assoc = env_->devices_of(m);

    bool any_top = false;
    double lo = 0;
    for (std::size_t i = 0; i < assoc.size(); ++i) {
        const int n = assoc[i];
        const double top = env_->top_flops(n, partition[i]);
        const double bottom_time = env_->device_train_time(n, partition[i]);
        if (top > 0) {
            any_top = true;
            lo = std::max(lo, bottom_time + env_->train_scale(n) * top /
                                                (gw.flops_per_cycle * gw.freq_max_hz));
        } else {
            lo = std::max(lo, bottom_time);
        }
    }
    if (!any_top) {
        // any allocation satisfies the objective; settle at the frequency floor
        return std::vector<double>(assoc.size(), gw.freq_min_hz / static_cast<double>(assoc.size()));
    }

    double hi = std::max(lo * 2.0, lo + 1e-9);
    std::optional<std::vector<double>> best;
    for (int expand = 0; expand < 80; ++expand) {
        best = freqs_for_target(m, j, real, partition, power, hi);
        if (best) break;
        hi = lo + (hi - lo) * 2.0;
    }
    if (!best) return std::nullopt;

    for (int iter = 0; iter < 200 && hi - lo > params_->bisection_tol * std::max(1.0, hi); ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (auto candidate = freqs_for_target(m, j, real, partition, power, mid)) {
            best = std::move(candidate);
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return best;
}

PowerResult LambdaSolver::optimal_power(int m, int j, const RoundRealization& real,
                                        const std::vector<int>& partition,
                                        const std::vector<double>& freq) const {
    const Scenario& scn = env_->scenario();
    const ChannelParams& chan = scn.channel;
    const GatewayProfile& gw = scn.gateways[static_cast<std::size_t>(m)];
    const std::size_t idx = static_cast<std::size_t>(m) * chan.channel_count + j;

    PowerResult result;
    const double budget = real.gateway_energy_j[static_cast<std::size_t>(m)] -
                          env_->gateway_training_energy(m, partition, freq);
    const double gain = env_->uplink_gain(m, j, real);
    const double noise = chan.uplink_bandwidth_hz * chan.noise_density_w_per_hz +
                         real.interference_up_w[idx];
    const double bits = scn.network.model_size_bits();

    // transmission is hopeless when the budget line never crosses the energy curve
    if (chan.uplink_bandwidth_hz / (bits * std::log(2.0)) * budget - noise / gain <= 0) {
        result.zero_branch = true;
        return result;
    }

    // the root balances transmit energy against the residual budget:
    // (B^u W / gamma) log2(1 + h x / noise) - x = 0 for x > 0
    const double lead = chan.uplink_bandwidth_hz * budget / bits;
    auto defect = [&](double x) { return lead * std::log2(1.0 + gain * x / noise) - x; };

    double hi = std::max(gw.max_tx_power_w, 1.0);
    int guard = 0;
    while (defect(hi) > 0 && guard++ < 400) hi *= 2.0;
    double lo = hi * 0.5;
    while (defect(lo) <= 0 && guard++ < 800) lo *= 0.5;

    for (int iter = 0; iter < 200 && (hi - lo) > 1e-15 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (defect(mid) > 0) lo = mid;
        else hi = mid;
    }
    result.root = 0.5 * (lo + hi);
    result.residual = std::abs(defect(result.root)) / std::max(result.root, 1e-300);
    result.power = std::min(result.root, gw.max_tx_power_w);
    return result;
}

std::optional<ScheduledGateway> LambdaSolver::initial_point(int m, int j,
                                                            const RoundRealization& real) const {
    const Scenario& scn = env_->scenario();
    const GatewayProfile& gw = scn.gateways[static_cast<std::size_t>(m)];
    const std::vector<int>& assoc = env_->devices_of(m);
    const int layer_count = static_cast<int>(env_->layer_count());

    // per-device ceilings from device memory and device energy
    std::vector<int> cap(assoc.size(), layer_count);
    for (std::size_t i = 0; i < assoc.size(); ++i) {
        const int n = assoc[i];
        int best = -1;
        for (int l = 0; l <= layer_count; ++l) {
            const bool mem_ok = leq_with_slack(env_->device_memory(n, l),
                                               scn.devices[static_cast<std::size_t>(n)].memory_cap_bytes);
            const bool energy_ok = leq_with_slack(env_->device_training_energy(n, l),
                                                  real.device_energy_j[static_cast<std::size_t>(n)]);
            if (mem_ok && energy_ok) best = l;
        }
        if (best < 0) return std::nullopt;
        cap[i] = best;
    }

    double batch_sum = 0;
    for (int n : assoc) batch_sum += static_cast<double>(scn.devices[static_cast<std::size_t>(n)].batch_size);

    // smallest common split whose offloaded layers fit the gateway, then back
    // off the frequency/power until the energy budget closes
    for (int lc = 0; lc <= layer_count; ++lc) {
        ScheduledGateway g;
        g.gateway = m;
        g.channel = j;
        g.partition.resize(assoc.size());
        for (std::size_t i = 0; i < assoc.size(); ++i) {
            g.partition[i] = std::min(lc, cap[i]);
        }
        if (!leq_with_slack(env_->gateway_memory(m, g.partition), gw.memory_cap_bytes)) continue;

        g.gateway_freq.resize(assoc.size());
        for (std::size_t i = 0; i < assoc.size(); ++i) {
            const double batch = static_cast<double>(scn.devices[static_cast<std::size_t>(assoc[i])].batch_size);
            g.gateway_freq[i] = gw.freq_max_hz * batch / batch_sum;
        }
        const double arrival = real.gateway_energy_j[static_cast<std::size_t>(m)];
        double train_energy = env_->gateway_training_energy(m, g.partition, g.gateway_freq);
        if (train_energy > 0.5 * arrival) {
            double shrink = std::sqrt(0.5 * arrival / train_energy);
            const double floor_scale = gw.freq_min_hz / gw.freq_max_hz;
            shrink = std::max(shrink, floor_scale);
            for (double& f : g.gateway_freq) f *= shrink;
        }

        const PowerResult pr = optimal_power(m, j, real, g.partition, g.gateway_freq);
        if (pr.power <= 0) continue;
        g.tx_power = pr.power;
        if (feasible(m, j, real, g.partition, g.gateway_freq, g.tx_power)) return g;
    }
    return std::nullopt;
}

LambdaEntry LambdaSolver::solve(int m, int j, const RoundRealization& real) const {
    LambdaEntry entry;
    std::optional<ScheduledGateway> start = initial_point(m, j, real);
    if (!start) return entry;

    std::vector<int> split = std::move(start->partition);
    std::vector<double> freq = std::move(start->gateway_freq);
    double power = start->tx_power;
    double current = lambda_value(m, j, real, split, freq, power);
    entry.bcd_trace.push_back(current);

    const double accept_slack = 1.0 + 1e-12;
    for (int iter = 0; iter < params_->bcd_max_iters; ++iter) {
        const double before = current;

        if (auto candidate = bisect_partition(m, j, real, freq, power)) {
            const double value = lambda_value(m, j, real, *candidate, freq, power);
            if (value <= current * accept_slack && feasible(m, j, real, *candidate, freq, power)) {
                split = std::move(*candidate);
                current = std::min(current, value);
            }
        }
        if (auto candidate = bisect_frequency(m, j, real, split, power)) {
            const double value = lambda_value(m, j, real, split, *candidate, power);
            if (value <= current * accept_slack && feasible(m, j, real, split, *candidate, power)) {
                freq = std::move(*candidate);
                current = std::min(current, value);
            }
        }
        const PowerResult pr = optimal_power(m, j, real, split, freq);
        if (pr.power > 0) {
            const double value = lambda_value(m, j, real, split, freq, pr.power);
            if (value <= current * accept_slack && feasible(m, j, real, split, freq, pr.power)) {
                power = pr.power;
                current = std::min(current, value);
            }
        }

        entry.bcd_trace.push_back(current);
        if (before - current < params_->bcd_rel_tol * std::max(before, 1e-12)) break;
    }

    if (!feasible(m, j, real, split, freq, power)) return entry;
    entry.feasible = true;
    // the entry's delay is the expression evaluated at the stored arguments
    entry.lambda = lambda_value(m, j, real, split, freq, power);
    entry.partition = std::move(split);
    entry.gateway_freq = std::move(freq);
    entry.tx_power = power;
    entry.tx_root = optimal_power(m, j, real, entry.partition, entry.gateway_freq).root;
    return entry;
}

std::vector<LambdaEntry> LambdaSolver::solve_all(const RoundRealization& real) const {
    const int m_count = env_->scenario().gateway_count();
    const int j_count = env_->scenario().channel.channel_count;
    std::vector<LambdaEntry> entries(static_cast<std::size_t>(m_count) * j_count);

    auto work = [&](int flat) {
        entries[static_cast<std::size_t>(flat)] = solve(flat / j_count, flat % j_count, real);
    };

    const int total = m_count * j_count;
    if (!params_->parallel_lambda || total <= 1) {
        for (int flat = 0; flat < total; ++flat) work(flat);
        return entries;
    }

    // the (m, j) problems are independent; each worker owns distinct slots so
    // completion order cannot change the merged result
    std::atomic<int> cursor{0};
    const unsigned workers = std::min<unsigned>(std::thread::hardware_concurrency(),
                                                static_cast<unsigned>(total));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < std::max<unsigned>(workers, 1); ++w) {
        pool.emplace_back([&]() {
            for (int flat = cursor.fetch_add(1); flat < total; flat = cursor.fetch_add(1)) {
                work(flat);
            }
        });
    }
    for (std::thread& t : pool) t.join();
    return entries;
}

namespace {

struct MatchInstance {
    int m_count = 0;
    int j_count = 0;
    const std::vector<std::vector<double>>* theta;  // finite costs, idle columns appended
};

// minimum completion cost with some rows/columns pre-assigned or excluded
double completion_cost(const MatchInstance& inst, const std::vector<int>& fixed_col_of_row) {
    std::vector<int> rows, cols;
    for (int m = 0; m < inst.m_count; ++m) {
        if (fixed_col_of_row[static_cast<std::size_t>(m)] < 0) rows.push_back(m);
    }
    std::vector<bool> col_taken(static_cast<std::size_t>(inst.m_count), false);
    double fixed_cost = 0;
    for (int m = 0; m < inst.m_count; ++m) {
        const int c = fixed_col_of_row[static_cast<std::size_t>(m)];
        if (c >= 0) {
            col_taken[static_cast<std::size_t>(c)] = true;
            fixed_cost += (*inst.theta)[static_cast<std::size_t>(m)][static_cast<std::size_t>(c)];
        }
    }
    for (int c = 0; c < inst.m_count; ++c) {
        if (!col_taken[static_cast<std::size_t>(c)]) cols.push_back(c);
    }
    if (rows.empty()) return fixed_cost;
    std::vector<std::vector<double>> sub(rows.size(), std::vector<double>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            sub[r][c] = (*inst.theta)[static_cast<std::size_t>(rows[r])][static_cast<std::size_t>(cols[c])];
        }
    }
    return fixed_cost + hungarian_min_cost(sub).cost;
}

// lexicographically-first (by gateway, then channel) assignment among the
// minimum-cost perfect matchings
std::vector<int> canonical_assignment(const MatchInstance& inst) {
    std::vector<int> fixed(static_cast<std::size_t>(inst.m_count), -1);
    const double optimum = completion_cost(inst, fixed);
    const double tol = 1e-11 * (1.0 + std::abs(optimum));

    std::vector<bool> channel_taken(static_cast<std::size_t>(inst.j_count), false);
    for (int m = 0; m < inst.m_count; ++m) {
        bool placed = false;
        for (int j = 0; j < inst.j_count && !placed; ++j) {
            if (channel_taken[static_cast<std::size_t>(j)]) continue;
            fixed[static_cast<std::size_t>(m)] = j;
            if (completion_cost(inst, fixed) <= optimum + tol) {
                channel_taken[static_cast<std::size_t>(j)] = true;
                placed = true;
            } else {
                fixed[static_cast<std::size_t>(m)] = -1;
            }
        }
        // not placed on a real channel: the row completes through an idle column
    }

    // settle idle columns so the fixed vector is a full permutation
    std::vector<bool> col_taken(static_cast<std::size_t>(inst.m_count), false);
    for (int m = 0; m < inst.m_count; ++m) {
        const int c = fixed[static_cast<std::size_t>(m)];
        if (c >= 0) col_taken[static_cast<std::size_t>(c)] = true;
    }
    int next_idle = inst.j_count;
    for (int m = 0; m < inst.m_count; ++m) {
        if (fixed[static_cast<std::size_t>(m)] >= 0) continue;
        while (next_idle < inst.m_count && col_taken[static_cast<std::size_t>(next_idle)]) ++next_idle;
        fixed[static_cast<std::size_t>(m)] = next_idle;
        col_taken[static_cast<std::size_t>(next_idle)] = true;
    }
    return fixed;
}

}  // namespace

AssignmentOutcome assign_channels(const std::vector<std::vector<double>>& lambda,
                                  const std::vector<double>& q, const ControlParams& params) {
    const int m_count = static_cast<int>(lambda.size());
    const int j_count = m_count > 0 ? static_cast<int>(lambda[0].size()) : 0;
    if (j_count > m_count) {
        throw std::invalid_argument("assign_channels: more channels than gateways");
    }
    const double V = params.V;

    AssignmentOutcome outcome;
    outcome.gateway_of_channel.assign(static_cast<std::size_t>(j_count), -1);
    outcome.channel_of_gateway.assign(static_cast<std::size_t>(m_count), -1);

    double max_finite = 0;
    double q_sum = 0;
    std::set<double> thresholds;  // candidate delay levels: every finite V * lambda
    bool any_feasible = false;
    for (int m = 0; m < m_count; ++m) {
        q_sum += q[static_cast<std::size_t>(m)];
        for (int j = 0; j < j_count; ++j) {
            const double value = lambda[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)];
            if (value < kInfinity) {
                thresholds.insert(V * value);
                max_finite = std::max(max_finite, value);
                any_feasible = true;
            }
        }
    }
    if (!any_feasible) {
        outcome.relaxed_channels = j_count;
        return outcome;
    }

    const double psi = V * max_finite * m_count + q_sum + 1.0;
    std::vector<std::vector<double>> theta(static_cast<std::size_t>(m_count),
                                           std::vector<double>(static_cast<std::size_t>(m_count), 0.0));
    MatchInstance inst{m_count, j_count, &theta};

    auto fill_theta = [&](double threshold) {
        for (int m = 0; m < m_count; ++m) {
            for (int j = 0; j < j_count; ++j) {
                const double value = lambda[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)];
                const bool allowed = value < kInfinity && V * value <= threshold * (1.0 + 1e-12);
                theta[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)] =
                    allowed ? -q[static_cast<std::size_t>(m)] : psi;
            }
            for (int c = j_count; c < m_count; ++c) {
                theta[static_cast<std::size_t>(m)][static_cast<std::size_t>(c)] = 0.0;
            }
        }
    };

    auto run_match = [&]() {
        std::vector<std::vector<double>> padded = theta;
        return hungarian_min_cost(padded).row_to_col;
    };
    auto is_blocked = [&](const std::vector<int>& assignment) {
        for (int m = 0; m < m_count; ++m) {
            const int c = assignment[static_cast<std::size_t>(m)];
            if (c < j_count && theta[static_cast<std::size_t>(m)][static_cast<std::size_t>(c)] >= psi) {
                return true;
            }
        }
        return false;
    };
    auto evaluate = [&](const std::vector<int>& assignment, double& worst, double& q_selected) {
        worst = 0;
        q_selected = 0;
        for (int m = 0; m < m_count; ++m) {
            const int c = assignment[static_cast<std::size_t>(m)];
            if (c >= j_count) continue;
            worst = std::max(worst, V * lambda[static_cast<std::size_t>(m)][static_cast<std::size_t>(c)]);
            q_selected += q[static_cast<std::size_t>(m)];
        }
    };

    // Sweep the candidate delay levels in ascending order. Each level runs
    // one match / threshold-settle alternation; the smallest level wins ties,
    // so equal objectives resolve toward the lower delay.
    double best_objective = kInfinity;
    double best_threshold = 0;
    bool covered = false;
    int iterations = 0;
    for (double candidate : thresholds) {
        double threshold = candidate;
        for (int step = 0; step < std::max(params.assignment_iter_cap, 1); ++step) {
            ++iterations;
            fill_theta(threshold);
            const std::vector<int> assignment = run_match();
            if (is_blocked(assignment)) break;  // this level cannot cover every channel
            covered = true;
            double worst = 0, q_selected = 0;
            evaluate(assignment, worst, q_selected);
            const double objective = worst - q_selected;
            if (objective < best_objective - 1e-15) {
                best_objective = objective;
                best_threshold = worst;
            }
            if (worst >= threshold * (1.0 - 1e-12)) break;  // threshold settled
            threshold = worst;
        }
    }

    if (!covered) {
        // fewer feasible gateways than channels: relax the exact-cover
        // constraint at the widest level and leave the starved channels idle
        fill_theta(V * max_finite);
        const std::vector<int> assignment = run_match();
        AssignmentOutcome relaxed = outcome;
        double worst = 0;
        for (int m = 0; m < m_count; ++m) {
            const int c = assignment[static_cast<std::size_t>(m)];
            if (c >= j_count) continue;
            if (theta[static_cast<std::size_t>(m)][static_cast<std::size_t>(c)] >= psi) {
                ++relaxed.relaxed_channels;
                continue;
            }
            relaxed.gateway_of_channel[static_cast<std::size_t>(c)] = m;
            relaxed.channel_of_gateway[static_cast<std::size_t>(m)] = c;
            worst = std::max(worst, V * lambda[static_cast<std::size_t>(m)][static_cast<std::size_t>(c)]);
            relaxed.objective -= q[static_cast<std::size_t>(m)];
        }
        relaxed.threshold = worst;
        relaxed.objective += worst;
        relaxed.iterations = iterations;
        return relaxed;
    }

    // deterministic tie-breaking: rebuild the winning level's assignment in
    // lexicographic (gateway, channel) order among the equal-cost matchings
    fill_theta(best_threshold);
    const std::vector<int> assignment = canonical_assignment(inst);
    AssignmentOutcome best = outcome;
    double worst = 0, q_selected = 0;
    evaluate(assignment, worst, q_selected);
    for (int m = 0; m < m_count; ++m) {
        const int c = assignment[static_cast<std::size_t>(m)];
        if (c >= j_count) continue;
        best.gateway_of_channel[static_cast<std::size_t>(c)] = m;
        best.channel_of_gateway[static_cast<std::size_t>(m)] = c;
    }
    best.threshold = worst;
    best.objective = worst - q_selected;
    best.iterations = iterations;
    return best;
}

double drift_penalty_objective(const EnvModel& env, std::span<const ScheduledGateway> scheduled,
                               const RoundRealization& real, const std::vector<double>& q, double V) {
    double value = V * env.round_latency(scheduled, real);
    for (const ScheduledGateway& g : scheduled) {
        value -= q[static_cast<std::size_t>(g.gateway)];
    }
    return value;
}

AnalysisBounds analysis_bounds(const Scenario& scenario, const std::vector<double>& gamma, double V,
                               int rounds, double mean_latency_hint) {
    AnalysisBounds bounds;
    for (double g : gamma) bounds.drift_constant += 0.5 * (g + 1.0);

    const ChannelParams& chan = scenario.channel;
    const CostTable flops(scenario.network, 1);
    const double total_flops = static_cast<double>(flops.total_flops());

    double min_batch = kInfinity;
    double min_rate = kInfinity;
    for (const DeviceProfile& d : scenario.devices) {
        min_batch = std::min(min_batch, static_cast<double>(d.batch_size));
        min_rate = std::min(min_rate, d.flops_per_cycle * d.cpu_freq_hz);
    }
    for (const GatewayProfile& g : scenario.gateways) {
        min_rate = std::min(min_rate, g.flops_per_cycle * g.freq_max_hz);
    }
    const double train_floor = static_cast<double>(scenario.local_epochs) * min_batch * total_flops / min_rate;

    // communications floor with mean fading (unit) and mean folded-normal interference
    const double mean_iu = std::sqrt(chan.uplink_interference_variance_w2 * 2.0 / M_PI);
    const double mean_id = std::sqrt(chan.downlink_interference_variance_w2 * 2.0 / M_PI);
    const double bits = scenario.network.model_size_bits();
    double comm_floor = kInfinity;
    for (const GatewayProfile& g : scenario.gateways) {
        const double gain = chan.path_loss_const *
                            std::pow(chan.reference_distance_m / g.distance_m, chan.path_loss_exponent);
        const double up = bits / (chan.uplink_bandwidth_hz *
                                  std::log2(1.0 + g.max_tx_power_w * gain /
                                                      (chan.uplink_bandwidth_hz * chan.noise_density_w_per_hz + mean_iu)));
        const double down = bits / (chan.downlink_bandwidth_hz *
                                    std::log2(1.0 + chan.bs_tx_power_w * gain /
                                                        (chan.downlink_bandwidth_hz * chan.noise_density_w_per_hz + mean_id)));
        comm_floor = std::min(comm_floor, up + down);
    }
    bounds.min_round_latency = train_floor + comm_floor;

    bounds.optimality_gap_bound = bounds.drift_constant / V;
    const double inner = bounds.drift_constant + V * (mean_latency_hint - bounds.min_round_latency);
    bounds.participation_deficit_bound = std::sqrt(std::max(inner, 0.0) / std::max(rounds, 1));
    return bounds;
}

}  // namespace ddsra
