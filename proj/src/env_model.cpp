#include "ddsra/env_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ddsra/util.hpp"

namespace ddsra {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::runtime_error("scenario invalid: " + what);
}

}  // namespace

void Scenario::validate() const {
    require(!devices.empty(), "no devices");
    require(!gateways.empty(), "no gateways");
    require(local_epochs >= 1, "local_epochs must be >= 1");
    network.validate();

    for (std::size_t i = 0; i < gateways.size(); ++i) {
        const GatewayProfile& g = gateways[i];
        require(g.id == static_cast<int>(i), "gateway ids must be 0..M-1 in order");
        require(g.freq_min_hz > 0 && g.freq_min_hz <= g.freq_max_hz,
                "gateway " + std::to_string(g.id) + ": need 0 < freq_min <= freq_max");
        require(g.flops_per_cycle > 0, "gateway " + std::to_string(g.id) + ": flops_per_cycle");
        require(g.capacitance > 0, "gateway " + std::to_string(g.id) + ": capacitance");
        require(g.energy_cap_j > 0, "gateway " + std::to_string(g.id) + ": energy_cap_j");
        require(g.memory_cap_bytes >= 0, "gateway " + std::to_string(g.id) + ": memory_cap_bytes");
        require(g.max_tx_power_w > 0, "gateway " + std::to_string(g.id) + ": max_tx_power_w");
        require(g.distance_m > 0, "gateway " + std::to_string(g.id) + ": distance_m");
    }
    for (std::size_t i = 0; i < devices.size(); ++i) {
        const DeviceProfile& d = devices[i];
        require(d.id == static_cast<int>(i), "device ids must be 0..N-1 in order");
        require(d.gateway_id >= 0 && d.gateway_id < gateway_count(),
                "device " + std::to_string(d.id) + ": gateway_id out of range");
        require(d.local_dataset_size >= 1, "device " + std::to_string(d.id) + ": local_dataset_size");
        require(d.batch_size >= 1 && d.batch_size <= d.local_dataset_size,
                "device " + std::to_string(d.id) + ": need 1 <= batch_size <= local_dataset_size");
        require(d.cpu_freq_hz > 0, "device " + std::to_string(d.id) + ": cpu_freq_hz");
        require(d.flops_per_cycle > 0, "device " + std::to_string(d.id) + ": flops_per_cycle");
        require(d.capacitance > 0, "device " + std::to_string(d.id) + ": capacitance");
        require(d.energy_cap_j > 0, "device " + std::to_string(d.id) + ": energy_cap_j");
        require(d.memory_cap_bytes >= 0, "device " + std::to_string(d.id) + ": memory_cap_bytes");
    }

    const auto by_gateway = device_index();
    for (std::size_t m = 0; m < by_gateway.size(); ++m) {
        require(!by_gateway[m].empty(), "gateway " + std::to_string(m) + " has no associated devices");
    }

    const ChannelParams& c = channel;
    require(c.uplink_bandwidth_hz > 0, "channel: uplink_bandwidth_hz");
    require(c.downlink_bandwidth_hz > 0, "channel: downlink_bandwidth_hz");
    require(c.noise_density_w_per_hz > 0, "channel: noise_density_w_per_hz");
    require(c.path_loss_const > 0, "channel: path_loss_const");
    require(c.reference_distance_m > 0, "channel: reference_distance_m");
    require(c.path_loss_exponent > 0, "channel: path_loss_exponent");
    require(c.bs_tx_power_w > 0, "channel: bs_tx_power_w");
    require(c.uplink_interference_variance_w2 >= 0, "channel: uplink_interference_variance_w2");
    require(c.downlink_interference_variance_w2 >= 0, "channel: downlink_interference_variance_w2");
    require(c.channel_count >= 1, "channel: channel_count");
    require(c.channel_count <= gateway_count(), "channel: channel_count must not exceed gateway count");
}

std::vector<std::vector<int>> Scenario::device_index() const {
    std::vector<std::vector<int>> by_gateway(gateways.size());
    for (const DeviceProfile& d : devices) {
        by_gateway[static_cast<std::size_t>(d.gateway_id)].push_back(d.id);
    }
    return by_gateway;
}

RoundRealization sample_round(const Scenario& scenario, std::uint64_t seed) {
    const int m_count = scenario.gateway_count();
    const int j_count = scenario.channel.channel_count;
    RoundRealization real;
    real.fading_up.resize(static_cast<std::size_t>(m_count) * j_count);
    real.fading_down.resize(real.fading_up.size());
    real.interference_up_w.resize(real.fading_up.size());
    real.interference_down_w.resize(real.fading_up.size());
    real.device_energy_j.resize(scenario.devices.size());
    real.gateway_energy_j.resize(scenario.gateways.size());

    Rng chan(mix_seed(seed, 0xc11a));
    const double sig_u = std::sqrt(scenario.channel.uplink_interference_variance_w2);
    const double sig_d = std::sqrt(scenario.channel.downlink_interference_variance_w2);
    for (std::size_t i = 0; i < real.fading_up.size(); ++i) {
        real.fading_up[i] = chan.exponential_unit_mean();
        real.fading_down[i] = chan.exponential_unit_mean();
        // interference power is non-negative; magnitudes are configured, not given
        real.interference_up_w[i] = std::abs(chan.gaussian()) * sig_u;
        real.interference_down_w[i] = std::abs(chan.gaussian()) * sig_d;
    }

    Rng energy(mix_seed(seed, 0xe6e7));
    for (std::size_t n = 0; n < real.device_energy_j.size(); ++n) {
        real.device_energy_j[n] = energy.uniform(0.0, scenario.devices[n].energy_cap_j);
    }
    for (std::size_t m = 0; m < real.gateway_energy_j.size(); ++m) {
        real.gateway_energy_j[m] = energy.uniform(0.0, scenario.gateways[m].energy_cap_j);
    }
    return real;
}

EnvModel::EnvModel(const Scenario& scenario) : scenario_(&scenario) {
    scenario.validate();
    by_gateway_ = scenario.device_index();
    layer_count_ = scenario.network.layer_count();
    flops_table_ = CostTable(scenario.network, 1);

    const double k = static_cast<double>(scenario.local_epochs);
    memory_table_.reserve(scenario.devices.size());
    for (const DeviceProfile& d : scenario.devices) {
        memory_table_.emplace_back(scenario.network, d.batch_size);
        train_scale_.push_back(k * static_cast<double>(d.batch_size));
        device_rate_.push_back(d.flops_per_cycle * d.cpu_freq_hz);
        device_energy_coef_.push_back(k * static_cast<double>(d.batch_size) * d.capacitance /
                                      d.flops_per_cycle * d.cpu_freq_hz * d.cpu_freq_hz);
    }
}

double EnvModel::uplink_gain(int m, int j, const RoundRealization& real) const {
    const ChannelParams& c = scenario_->channel;
    const GatewayProfile& g = scenario_->gateways[static_cast<std::size_t>(m)];
    const std::size_t idx = static_cast<std::size_t>(m) * c.channel_count + j;
    return c.path_loss_const * real.fading_up[idx] *
           std::pow(c.reference_distance_m / g.distance_m, c.path_loss_exponent);
}

double EnvModel::downlink_gain(int m, int j, const RoundRealization& real) const {
    const ChannelParams& c = scenario_->channel;
    const GatewayProfile& g = scenario_->gateways[static_cast<std::size_t>(m)];
    const std::size_t idx = static_cast<std::size_t>(m) * c.channel_count + j;
    return c.path_loss_const * real.fading_down[idx] *
           std::pow(c.reference_distance_m / g.distance_m, c.path_loss_exponent);
}

double EnvModel::downlink_time(int m, int j, const RoundRealization& real) const {
    const ChannelParams& c = scenario_->channel;
    const std::size_t idx = static_cast<std::size_t>(m) * c.channel_count + j;
    const double snr = c.bs_tx_power_w * downlink_gain(m, j, real) /
                       (c.downlink_bandwidth_hz * c.noise_density_w_per_hz + real.interference_down_w[idx]);
    const double rate = c.downlink_bandwidth_hz * std::log2(1.0 + snr);
    return scenario_->network.model_size_bits() / rate;
}

double EnvModel::uplink_time(int m, int j, double power_w, const RoundRealization& real) const {
    if (!(power_w > 0)) return kInfinity;
    const ChannelParams& c = scenario_->channel;
    const std::size_t idx = static_cast<std::size_t>(m) * c.channel_count + j;
    const double snr = power_w * uplink_gain(m, j, real) /
                       (c.uplink_bandwidth_hz * c.noise_density_w_per_hz + real.interference_up_w[idx]);
    const double rate = c.uplink_bandwidth_hz * std::log2(1.0 + snr);
    return scenario_->network.model_size_bits() / rate;
}

double EnvModel::uplink_energy(int m, int j, double power_w, const RoundRealization& real) const {
    if (!(power_w > 0)) return kInfinity;
    return power_w * uplink_time(m, j, power_w, real);
}

double EnvModel::bottom_flops(int n, int split) const {
    (void)n;
    return static_cast<double>(flops_table_.bottom_flops(static_cast<std::size_t>(split)));
}

double EnvModel::top_flops(int n, int split) const {
    (void)n;
    return static_cast<double>(flops_table_.top_flops(static_cast<std::size_t>(split)));
}

double EnvModel::device_memory(int n, int split) const {
    return static_cast<double>(memory_table_[static_cast<std::size_t>(n)].bottom_memory(static_cast<std::size_t>(split)));
}

double EnvModel::top_memory(int n, int split) const {
    return static_cast<double>(memory_table_[static_cast<std::size_t>(n)].top_memory(static_cast<std::size_t>(split)));
}

double EnvModel::gateway_memory(int m, std::span<const int> partition) const {
    const std::vector<int>& assoc = devices_of(m);
    double sum = 0;
    for (std::size_t i = 0; i < assoc.size(); ++i) {
        sum += top_memory(assoc[i], partition[i]);
    }
    return sum;
}

double EnvModel::device_train_time(int n, int split) const {
    return train_scale(n) * bottom_flops(n, split) / device_rate(n);
}

double EnvModel::gateway_train_time(int n, int split, double gateway_freq_hz) const {
    const double top = top_flops(n, split);
    if (top == 0.0) return 0.0;
    const DeviceProfile& d = scenario_->devices[static_cast<std::size_t>(n)];
    const GatewayProfile& g = scenario_->gateways[static_cast<std::size_t>(d.gateway_id)];
    if (!(gateway_freq_hz > 0)) return kInfinity;
    return train_scale(n) * top / (g.flops_per_cycle * gateway_freq_hz);
}

double EnvModel::pair_train_time(int n, int split, double gateway_freq_hz) const {
    return device_train_time(n, split) + gateway_train_time(n, split, gateway_freq_hz);
}

double EnvModel::training_time(int m, std::span<const int> partition, std::span<const double> freqs) const {
    const std::vector<int>& assoc = devices_of(m);
    double worst = 0;
    for (std::size_t i = 0; i < assoc.size(); ++i) {
        const double t = pair_train_time(assoc[i], partition[i], freqs[i]);
        if (t > worst) worst = t;
    }
    return worst;
}

double EnvModel::device_training_energy(int n, int split) const {
    return device_energy_coef(n) * bottom_flops(n, split);
}

double EnvModel::gateway_energy_coef(int m, int n) const {
    const GatewayProfile& g = scenario_->gateways[static_cast<std::size_t>(m)];
    return train_scale(n) * g.capacitance / g.flops_per_cycle;
}

double EnvModel::gateway_training_energy(int m, std::span<const int> partition,
                                         std::span<const double> freqs) const {
    const std::vector<int>& assoc = devices_of(m);
    double sum = 0;
    for (std::size_t i = 0; i < assoc.size(); ++i) {
        sum += gateway_energy_coef(m, assoc[i]) * top_flops(assoc[i], partition[i]) * freqs[i] * freqs[i];
    }
    return sum;
}

double EnvModel::gateway_round_time(const ScheduledGateway& g, const RoundRealization& real) const {
    return training_time(g.gateway, g.partition, g.gateway_freq) +
           uplink_time(g.gateway, g.channel, g.tx_power, real) +
           downlink_time(g.gateway, g.channel, real);
}

double EnvModel::round_latency(std::span<const ScheduledGateway> scheduled,
                               const RoundRealization& real) const {
    double worst = 0;
    for (const ScheduledGateway& g : scheduled) {
        const double t = gateway_round_time(g, real);
        if (t > worst) worst = t;
    }
    return worst;
}

FeasibilityReport check_round_feasibility(const EnvModel& env,
                                          std::span<const ScheduledGateway> scheduled,
                                          const RoundRealization& real) {
    FeasibilityReport report;
    for (const ScheduledGateway& g : scheduled) {
        const std::vector<int>& assoc = env.devices_of(g.gateway);
        for (std::size_t i = 0; i < assoc.size(); ++i) {
            const int n = assoc[i];
            if (!leq_with_slack(env.device_training_energy(n, g.partition[i]),
                                real.device_energy_j[static_cast<std::size_t>(n)])) {
                ++report.energy_violations;
            }
            if (!leq_with_slack(env.device_memory(n, g.partition[i]),
                                env.scenario().devices[static_cast<std::size_t>(n)].memory_cap_bytes)) {
                ++report.memory_violations;
            }
        }
        const double gw_energy = env.gateway_training_energy(g.gateway, g.partition, g.gateway_freq) +
                                 env.uplink_energy(g.gateway, g.channel, g.tx_power, real);
        if (!leq_with_slack(gw_energy, real.gateway_energy_j[static_cast<std::size_t>(g.gateway)])) {
            ++report.energy_violations;
        }
        if (!leq_with_slack(env.gateway_memory(g.gateway, g.partition),
                            env.scenario().gateways[static_cast<std::size_t>(g.gateway)].memory_cap_bytes)) {
            ++report.memory_violations;
        }
    }
    report.ok = report.energy_violations == 0 && report.memory_violations == 0;
    return report;
}

}  // namespace ddsra
