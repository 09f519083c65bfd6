#include "ddsra/env_model.hpp"

#include <cmath>
#include <stdexcept>

#include "ddsra/config.hpp"
#include "ddsra/util.hpp"
#include "checks.hpp"

using namespace ddsra;

namespace {

// two gateways, one device each, trivially sized network
Scenario small_scenario() {
    Scenario scn;
    scn.local_epochs = 2;

    for (int m = 0; m < 2; ++m) {
        GatewayProfile g;
        g.id = m;
        g.freq_min_hz = 1e8;
        g.freq_max_hz = 4e9;
        g.flops_per_cycle = 32;
        g.capacitance = 1e-27;
        g.energy_cap_j = 30;
        g.memory_cap_bytes = 4e9;
        g.max_tx_power_w = 0.2;
        g.distance_m = 1000 + 500 * m;
        scn.gateways.push_back(g);
    }
    for (int n = 0; n < 2; ++n) {
        DeviceProfile d;
        d.id = n;
        d.gateway_id = n;
        d.local_dataset_size = 100;
        d.batch_size = 10;
        d.cpu_freq_hz = 5e8 * (n + 1);
        d.flops_per_cycle = 16;
        d.capacitance = 1e-27;
        d.energy_cap_j = 5;
        d.memory_cap_bytes = 2e9;
        scn.devices.push_back(d);
    }
    ChannelParams& c = scn.channel;
    c.uplink_bandwidth_hz = 1e6;
    c.downlink_bandwidth_hz = 2e7;
    c.noise_density_w_per_hz = 4e-21;
    c.path_loss_const = 1e-3;
    c.reference_distance_m = 1;
    c.path_loss_exponent = 2;
    c.bs_tx_power_w = 1;
    c.uplink_interference_variance_w2 = 1e-28;
    c.downlink_interference_variance_w2 = 1e-26;
    c.channel_count = 2;

    LayerSpec conv;
    conv.kind = LayerKind::Convolution;
    conv.in_height = conv.in_width = 8;
    conv.in_channels = 2;
    conv.out_height = conv.out_width = 8;
    conv.out_channels = 4;
    conv.filter_height = conv.filter_width = 3;
    LayerSpec fc;
    fc.kind = LayerKind::FullyConnected;
    fc.input_size = 256;
    fc.output_size = 10;
    scn.network.model_size_bytes = 1e6;
    scn.network.layers = {conv, fc};
    return scn;
}

// a realization with every channel draw pinned to chosen values
RoundRealization pinned_realization(const Scenario& scn, double fading, double interference) {
    RoundRealization real;
    const std::size_t slots =
        static_cast<std::size_t>(scn.gateway_count()) * scn.channel.channel_count;
    real.fading_up.assign(slots, fading);
    real.fading_down.assign(slots, fading);
    real.interference_up_w.assign(slots, interference);
    real.interference_down_w.assign(slots, interference);
    real.device_energy_j.assign(scn.devices.size(), 5.0);
    real.gateway_energy_j.assign(scn.gateways.size(), 30.0);
    return real;
}

}  // namespace

int main() {
    const Scenario scn = small_scenario();
    const EnvModel env(scn);

    // determinism of the sampler
    {
        const RoundRealization a = sample_round(scn, 77);
        const RoundRealization b = sample_round(scn, 77);
        CHECK(a.fading_up == b.fading_up);
        CHECK(a.interference_down_w == b.interference_down_w);
        CHECK(a.device_energy_j == b.device_energy_j);
        const RoundRealization c = sample_round(scn, 78);
        CHECK(a.fading_up != c.fading_up);
    }

    // unit-mean fading and capped arrivals over many draws
    {
        double fading_sum = 0;
        std::size_t fading_count = 0;
        bool caps_ok = true;
        const int rounds = 100000 / (scn.gateway_count() * scn.channel.channel_count * 2) + 1;
        for (int t = 0; t < rounds; ++t) {
            const RoundRealization real = sample_round(scn, 1000 + t);
            for (double f : real.fading_up) { fading_sum += f; ++fading_count; }
            for (double f : real.fading_down) { fading_sum += f; ++fading_count; }
            for (std::size_t n = 0; n < real.device_energy_j.size(); ++n) {
                caps_ok = caps_ok && real.device_energy_j[n] >= 0 &&
                          real.device_energy_j[n] <= scn.devices[n].energy_cap_j;
            }
            for (std::size_t m = 0; m < real.gateway_energy_j.size(); ++m) {
                caps_ok = caps_ok && real.gateway_energy_j[m] >= 0 &&
                          real.gateway_energy_j[m] <= scn.gateways[m].energy_cap_j;
            }
            for (double i : real.interference_up_w) caps_ok = caps_ok && i >= 0;
        }
        const double mean = fading_sum / static_cast<double>(fading_count);
        CHECK_MSG(std::abs(mean - 1.0) < 0.02, "fading mean %.4f", mean);
        CHECK(caps_ok);
    }

    // downlink at an SNR of exactly 1: rate = bandwidth, so 8e6 bits / 2e7 Hz
    {
        RoundRealization real = pinned_realization(scn, 1.0, 0.0);
        const double gain_no_fading =
            scn.channel.path_loss_const *
            std::pow(scn.channel.reference_distance_m / scn.gateways[0].distance_m,
                     scn.channel.path_loss_exponent);
        const double target = scn.channel.downlink_bandwidth_hz * scn.channel.noise_density_w_per_hz;
        real.fading_down[0] = target / (scn.channel.bs_tx_power_w * gain_no_fading);
        CHECK_CLOSE(env.downlink_time(0, 0, real), 8e6 / 2e7, 1e-12);

        // doubling the model size doubles the time
        Scenario doubled = scn;
        doubled.network.model_size_bytes *= 2;
        const EnvModel env2(doubled);
        CHECK_CLOSE(env2.downlink_time(0, 0, real), 2.0 * env.downlink_time(0, 0, real), 1e-12);

        // growing interference stretches the time without bound
        RoundRealization noisy = real;
        double prev = env.downlink_time(0, 0, noisy);
        const double base = prev;
        for (int step = 0; step < 6; ++step) {
            noisy.interference_down_w[0] = std::pow(10.0, -12 + 2 * step);
            const double t = env.downlink_time(0, 0, noisy);
            CHECK(t >= prev);
            prev = t;
        }
        CHECK(prev > 100 * base);
    }

    // uplink at SNR 1 with the example numbers: tau = 8 s, energy = 8 P
    {
        RoundRealization real = pinned_realization(scn, 1.0, 0.0);
        const double gain_no_fading =
            scn.channel.path_loss_const *
            std::pow(scn.channel.reference_distance_m / scn.gateways[0].distance_m,
                     scn.channel.path_loss_exponent);
        const double power = 0.1;
        real.fading_up[0] =
            scn.channel.uplink_bandwidth_hz * scn.channel.noise_density_w_per_hz /
            (power * gain_no_fading);
        CHECK_CLOSE(env.uplink_time(0, 0, power, real), 8.0, 1e-12);
        CHECK_CLOSE(env.uplink_energy(0, 0, power, real), 8.0 * power, 1e-12);

        // energy over time is exactly the power, and energy is linear in size
        const RoundRealization any = sample_round(scn, 5);
        for (double p : {0.01, 0.05, 0.2}) {
            CHECK_CLOSE(env.uplink_energy(0, 1, p, any) / env.uplink_time(0, 1, p, any), p, 1e-12);
        }
        Scenario big = scn;
        big.network.model_size_bytes *= 3;
        const EnvModel env3(big);
        CHECK_CLOSE(env3.uplink_energy(0, 1, 0.1, any), 3.0 * env.uplink_energy(0, 1, 0.1, any), 1e-12);

        // zero power cannot transmit
        CHECK(env.uplink_time(0, 0, 0.0, real) >= kInfinity);
    }

    // training time structure
    {
        const int layer_count = static_cast<int>(env.layer_count());
        const std::vector<int> all_local{layer_count};
        const std::vector<int> all_offload{0};
        const std::vector<double> freq{2e9};

        // keeping every layer local leaves no gateway term
        CHECK_CLOSE(env.training_time(0, all_local, freq), env.device_train_time(0, layer_count), 1e-12);
        // full offload leaves no device term
        CHECK_CLOSE(env.training_time(0, all_offload, freq),
                    env.gateway_train_time(0, 0, freq[0]), 1e-12);
        // zero frequency with offloaded work is unservable
        CHECK(env.training_time(0, all_offload, std::vector<double>{0.0}) >= kInfinity);
        // K * batch * flops / rate against a direct evaluation
        const double direct = scn.local_epochs * 10.0 * env.bottom_flops(0, 1) /
                                  (16.0 * scn.devices[0].cpu_freq_hz) +
                              scn.local_epochs * 10.0 * env.top_flops(0, 1) / (32.0 * 2e9);
        CHECK_CLOSE(env.pair_train_time(0, 1, 2e9), direct, 1e-12);
    }

    // two devices on one gateway: the slower pair dominates
    {
        Scenario shared = small_scenario();
        shared.devices[1].gateway_id = 0;
        shared.gateways.pop_back();
        shared.channel.channel_count = 1;
        const EnvModel env2(shared);
        const std::vector<int> split{1, 1};
        const std::vector<double> freq{1e9, 1e9};
        const double a = env2.pair_train_time(0, 1, 1e9);
        const double b = env2.pair_train_time(1, 1, 1e9);
        CHECK_CLOSE(env2.training_time(0, split, freq), std::max(a, b), 1e-12);
    }

    // energies
    {
        CHECK(env.device_training_energy(0, 0) == 0.0);
        const std::vector<int> split{1};
        const std::vector<double> f1{1e9}, f2{2e9};
        const double e1 = env.gateway_training_energy(0, split, f1);
        const double e2 = env.gateway_training_energy(0, split, f2);
        CHECK_CLOSE(e2, 4.0 * e1, 1e-12);  // quadratic in frequency
        // direct formula evaluation
        const double expect = scn.local_epochs * 10.0 * (1e-27 / 16.0) *
                              env.bottom_flops(0, 1) * scn.devices[0].cpu_freq_hz *
                              scn.devices[0].cpu_freq_hz;
        CHECK_CLOSE(env.device_training_energy(0, 1), expect, 1e-12);
    }

    // memory mirrors the partition prefixes at the device batch size
    {
        const int layer_count = static_cast<int>(env.layer_count());
        CHECK(env.device_memory(0, 0) == 0.0);
        CHECK(env.top_memory(0, layer_count) == 0.0);
        NetworkSpec batched = scn.network;
        for (LayerSpec& l : batched.layers) l.batch_size = scn.devices[0].batch_size;
        const CostTable oracle_table(batched);
        for (int l = 0; l <= layer_count; ++l) {
            CHECK(env.device_memory(0, l) == static_cast<double>(oracle_table.bottom_memory(l)));
        }
    }

    // round latency is the max of the per-gateway sums
    {
        const RoundRealization real = sample_round(scn, 9);
        ScheduledGateway g0;
        g0.gateway = 0;
        g0.channel = 0;
        g0.partition = {1};
        g0.gateway_freq = {2e9};
        g0.tx_power = 0.2;
        const double t0 = env.gateway_round_time(g0, real);
        const double direct = env.training_time(0, g0.partition, g0.gateway_freq) +
                              env.uplink_time(0, 0, 0.2, real) + env.downlink_time(0, 0, real);
        CHECK_CLOSE(t0, direct, 1e-12);

        std::vector<ScheduledGateway> one{g0};
        CHECK_CLOSE(env.round_latency(one, real), t0, 1e-12);

        ScheduledGateway g1 = g0;
        g1.gateway = 1;
        g1.channel = 1;
        std::vector<ScheduledGateway> both{g0, g1};
        const double t1 = env.gateway_round_time(g1, real);
        CHECK_CLOSE(env.round_latency(both, real), std::max(t0, t1), 1e-12);

        // a dominated entry never moves the max: exhaustive check on three
        std::vector<ScheduledGateway> three{g0, g1, g0};
        double worst = 0;
        for (const ScheduledGateway& g : three) worst = std::max(worst, env.gateway_round_time(g, real));
        CHECK_CLOSE(env.round_latency(three, real), worst, 1e-12);
    }

    // feasibility checker flags shortage and respects limits
    {
        RoundRealization real = pinned_realization(scn, 1.0, 0.0);
        ScheduledGateway g;
        g.gateway = 0;
        g.channel = 0;
        g.partition = {0};
        g.gateway_freq = {4e9};
        g.tx_power = 0.2;
        std::vector<ScheduledGateway> picked{g};
        CHECK(check_round_feasibility(env, picked, real).ok);
        real.gateway_energy_j[0] = 0.0;
        const FeasibilityReport bad = check_round_feasibility(env, picked, real);
        CHECK(!bad.ok);
        CHECK(bad.energy_violations > 0);
    }

    // scenario validation rejects inconsistent profiles
    {
        Scenario broken = small_scenario();
        broken.devices[0].batch_size = broken.devices[0].local_dataset_size + 1;
        bool threw = false;
        try {
            broken.validate();
        } catch (const std::runtime_error&) {
            threw = true;
        }
        CHECK(threw);

        Scenario too_many_channels = small_scenario();
        too_many_channels.channel.channel_count = 3;
        threw = false;
        try {
            too_many_channels.validate();
        } catch (const std::runtime_error&) {
            threw = true;
        }
        CHECK(threw);
    }

    return checks::summary("env_model");
}
