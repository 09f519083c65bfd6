#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ddsra/dnn_cost.hpp"

namespace ddsra {

struct DeviceProfile {
    int id = 0;
    int gateway_id = 0;                    // a_{n,m}: exactly one gateway per device
    std::uint64_t local_dataset_size = 0;  // D_n
    std::uint64_t batch_size = 0;          // D~_n, training samples per round
    double cpu_freq_hz = 0;                // f^D
    double flops_per_cycle = 0;            // phi^D
    double capacitance = 0;                // v^D
    double energy_cap_j = 0;               // E^{D,max}
    double memory_cap_bytes = 0;           // G^{D,max}
};

struct GatewayProfile {
    int id = 0;
    double freq_min_hz = 0;      // f^{G,min}
    double freq_max_hz = 0;      // f^{G,max}
    double flops_per_cycle = 0;  // phi^G
    double capacitance = 0;      // v^G
    double energy_cap_j = 0;     // E^{G,max}
    double memory_cap_bytes = 0; // G^{G,max}
    double max_tx_power_w = 0;   // P^max
    double distance_m = 0;       // d_m to the base station
};

struct ChannelParams {
    double uplink_bandwidth_hz = 0;    // B^u
    double downlink_bandwidth_hz = 0;  // B^d
    double noise_density_w_per_hz = 0; // N_0
    double path_loss_const = 0;        // h_0
    double reference_distance_m = 0;   // d_0
    double path_loss_exponent = 0;     // nu
    double bs_tx_power_w = 0;          // P^B
    double uplink_interference_variance_w2 = 0;
    double downlink_interference_variance_w2 = 0;
    int channel_count = 0;             // J
};

struct Scenario {
    std::vector<DeviceProfile> devices;
    std::vector<GatewayProfile> gateways;
    ChannelParams channel;
    NetworkSpec network;
    int local_epochs = 5;  // K

    int device_count() const { return static_cast<int>(devices.size()); }
    int gateway_count() const { return static_cast<int>(gateways.size()); }

    // throws std::runtime_error naming the violated constraint
    void validate() const;

    // indices of devices deployed with gateway m
    std::vector<std::vector<int>> device_index() const;
};

// Per-round stochastic draws. Channel entries are flattened [m * J + j].
struct RoundRealization {
    std::vector<double> fading_up;             // rho^u, unit-mean exponential
    std::vector<double> fading_down;           // rho^d
    std::vector<double> interference_up_w;     // |N(0, sigma_u^2)|
    std::vector<double> interference_down_w;   // |N(0, sigma_d^2)|
    std::vector<double> device_energy_j;       // E^D(t) ~ U[0, E^{D,max}]
    std::vector<double> gateway_energy_j;      // E^G(t) ~ U[0, E^{G,max}]
};

// Deterministic for a fixed seed.
RoundRealization sample_round(const Scenario& scenario, std::uint64_t seed);

// One scheduled gateway with its resolved resources; partition/frequency
// entries follow the order of EnvModel::devices_of(m).
struct ScheduledGateway {
    int gateway = 0;
    int channel = 0;
    std::vector<int> partition;       // l_n per associated device
    std::vector<double> gateway_freq; // f^G_{m,n}
    double tx_power = 0;              // P_m
};

// Pure evaluator over static profiles; per-device cost tables are built once.
class EnvModel {
public:
    explicit EnvModel(const Scenario& scenario);

    const Scenario& scenario() const { return *scenario_; }
    const std::vector<int>& devices_of(int m) const { return by_gateway_[static_cast<std::size_t>(m)]; }
    std::size_t layer_count() const { return layer_count_; }

    double uplink_gain(int m, int j, const RoundRealization& real) const;
    double downlink_gain(int m, int j, const RoundRealization& real) const;

    double downlink_time(int m, int j, const RoundRealization& real) const;
    // +inf when power <= 0: a scheduled gateway cannot transmit at zero power
    double uplink_time(int m, int j, double power_w, const RoundRealization& real) const;
    double uplink_energy(int m, int j, double power_w, const RoundRealization& real) const;

    // per-sample flop prefixes (batch size 1)
    double bottom_flops(int n, int split) const;
    double top_flops(int n, int split) const;
    // per-device memory at its training batch size
    double device_memory(int n, int split) const;
    double top_memory(int n, int split) const;
    double gateway_memory(int m, std::span<const int> partition) const;

    // K * D~_n * bottom / (phi^D f^D)
    double device_train_time(int n, int split) const;
    // K * D~_n * top / (phi^G f^G); +inf when freq == 0 and top > 0
    double gateway_train_time(int n, int split, double gateway_freq_hz) const;
    double pair_train_time(int n, int split, double gateway_freq_hz) const;
    // max over the gateway's associated devices
    double training_time(int m, std::span<const int> partition, std::span<const double> freqs) const;

    double device_training_energy(int n, int split) const;
    double gateway_training_energy(int m, std::span<const int> partition, std::span<const double> freqs) const;

    // train + uplink + downlink for one scheduled gateway
    double gateway_round_time(const ScheduledGateway& g, const RoundRealization& real) const;
    // max over scheduled gateways; 0 when nothing is scheduled
    double round_latency(std::span<const ScheduledGateway> scheduled, const RoundRealization& real) const;

    double train_scale(int n) const { return train_scale_[static_cast<std::size_t>(n)]; }       // K * D~_n
    double device_rate(int n) const { return device_rate_[static_cast<std::size_t>(n)]; }       // phi^D f^D
    double device_energy_coef(int n) const { return device_energy_coef_[static_cast<std::size_t>(n)]; }
    // K * D~_n * v^G / phi^G for gateway m; multiply by top flops and f^2
    double gateway_energy_coef(int m, int n) const;

private:
    const Scenario* scenario_;
    std::vector<std::vector<int>> by_gateway_;
    std::size_t layer_count_ = 0;
    CostTable flops_table_;               // batch 1, shared across devices
    std::vector<CostTable> memory_table_; // per device, batch = D~_n
    std::vector<double> train_scale_;
    std::vector<double> device_rate_;
    std::vector<double> device_energy_coef_;
};

struct FeasibilityReport {
    bool ok = true;
    int energy_violations = 0;
    int memory_violations = 0;
};

// Checks device/gateway energy and memory limits for a resolved schedule
// against the round's arrivals (the per-round feasibility the optimizer must
// never violate; baselines may).
FeasibilityReport check_round_feasibility(const EnvModel& env,
                                          std::span<const ScheduledGateway> scheduled,
                                          const RoundRealization& real);

}  // namespace ddsra
