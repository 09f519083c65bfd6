#include "ddsra/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ddsra/util.hpp"

namespace ddsra {

using nlohmann::json;

const char* policy_name(Policy p) {
    switch (p) {
        case Policy::Ddsra: return "ddsra";
        case Policy::RandomScheduling: return "random";
        case Policy::RoundRobin: return "round_robin";
        case Policy::LossDriven: return "loss_driven";
        case Policy::DelayDriven: return "delay_driven";
    }
    return "?";
}

Policy policy_from_name(const std::string& name) {
    if (name == "ddsra") return Policy::Ddsra;
    if (name == "random") return Policy::RandomScheduling;
    if (name == "round_robin") return Policy::RoundRobin;
    if (name == "loss_driven") return Policy::LossDriven;
    if (name == "delay_driven") return Policy::DelayDriven;
    throw std::runtime_error("unknown policy: " + name +
                             " (expected ddsra|random|round_robin|loss_driven|delay_driven)");
}

namespace {

// tracks consumed keys so unknown fields are rejected instead of ignored
class Fields {
public:
    Fields(const json& obj, std::string path) : obj_(&obj), path_(std::move(path)) {
        if (!obj.is_object()) {
            throw std::runtime_error("config: expected object at " + path_);
        }
    }

    const json& require(const char* key) {
        auto it = obj_->find(key);
        if (it == obj_->end()) {
            throw std::runtime_error("config: missing required field " + path_ + "." + key);
        }
        seen_.insert(key);
        return *it;
    }

    const json* optional(const char* key) {
        auto it = obj_->find(key);
        if (it == obj_->end()) return nullptr;
        seen_.insert(key);
        return &*it;
    }

    void finish() const {
        for (auto it = obj_->begin(); it != obj_->end(); ++it) {
            if (!seen_.contains(it.key())) {
                throw std::runtime_error("config: unknown field " + path_ + "." + it.key());
            }
        }
    }

private:
    const json* obj_;
    std::string path_;
    std::set<std::string> seen_;
};

double as_double(const json& v, const std::string& where) {
    if (!v.is_number()) throw std::runtime_error("config: expected number at " + where);
    return v.get<double>();
}

std::uint64_t as_u64(const json& v, const std::string& where) {
    if (!v.is_number_unsigned() && !v.is_number_integer()) {
        throw std::runtime_error("config: expected integer at " + where);
    }
    return v.get<std::uint64_t>();
}

LayerSpec layer_from_json(const json& obj, const std::string& path) {
    Fields f(obj, path);
    LayerSpec layer;
    layer.kind = layer_kind_from_name(f.require("kind").get<std::string>());
    layer.batch_size = as_u64(f.require("batch_size"), path + ".batch_size");
    layer.precision_bytes = as_u64(f.require("precision_bytes"), path + ".precision_bytes");
    if (const json* v = f.optional("in_height")) layer.in_height = as_u64(*v, path);
    if (const json* v = f.optional("in_width")) layer.in_width = as_u64(*v, path);
    if (const json* v = f.optional("in_channels")) layer.in_channels = as_u64(*v, path);
    if (const json* v = f.optional("out_height")) layer.out_height = as_u64(*v, path);
    if (const json* v = f.optional("out_width")) layer.out_width = as_u64(*v, path);
    if (const json* v = f.optional("out_channels")) layer.out_channels = as_u64(*v, path);
    if (const json* v = f.optional("filter_height")) layer.filter_height = as_u64(*v, path);
    if (const json* v = f.optional("filter_width")) layer.filter_width = as_u64(*v, path);
    if (const json* v = f.optional("input_size")) layer.input_size = as_u64(*v, path);
    if (const json* v = f.optional("output_size")) layer.output_size = as_u64(*v, path);
    f.finish();
    return layer;
}

json layer_to_json(const LayerSpec& layer) {
    json obj;
    obj["kind"] = layer_kind_name(layer.kind);
    obj["batch_size"] = layer.batch_size;
    obj["precision_bytes"] = layer.precision_bytes;
    switch (layer.kind) {
        case LayerKind::Convolution:
            obj["in_height"] = layer.in_height;
            obj["in_width"] = layer.in_width;
            obj["in_channels"] = layer.in_channels;
            obj["out_height"] = layer.out_height;
            obj["out_width"] = layer.out_width;
            obj["out_channels"] = layer.out_channels;
            obj["filter_height"] = layer.filter_height;
            obj["filter_width"] = layer.filter_width;
            break;
        case LayerKind::Pooling:
            obj["in_height"] = layer.in_height;
            obj["in_width"] = layer.in_width;
            obj["in_channels"] = layer.in_channels;
            obj["out_height"] = layer.out_height;
            obj["out_width"] = layer.out_width;
            obj["out_channels"] = layer.out_channels;
            break;
        case LayerKind::FullyConnected:
            obj["input_size"] = layer.input_size;
            obj["output_size"] = layer.output_size;
            break;
    }
    return obj;
}

ScenarioConfig config_from_json(const json& root) {
    ScenarioConfig config;
    Fields top(root, "$");

    {
        Fields scn(top.require("scenario"), "$.scenario");
        config.scenario.local_epochs = static_cast<int>(as_u64(scn.require("local_epochs"), "local_epochs"));

        const json& devices = scn.require("devices");
        for (std::size_t i = 0; i < devices.size(); ++i) {
            const std::string path = "$.scenario.devices[" + std::to_string(i) + "]";
            Fields f(devices[i], path);
            DeviceProfile d;
            d.id = static_cast<int>(as_u64(f.require("id"), path));
            d.gateway_id = static_cast<int>(as_u64(f.require("gateway_id"), path));
            d.local_dataset_size = as_u64(f.require("local_dataset_size"), path);
            d.batch_size = as_u64(f.require("batch_size"), path);
            d.cpu_freq_hz = as_double(f.require("cpu_freq_hz"), path);
            d.flops_per_cycle = as_double(f.require("flops_per_cycle"), path);
            d.capacitance = as_double(f.require("capacitance"), path);
            d.energy_cap_j = as_double(f.require("energy_cap_j"), path);
            d.memory_cap_bytes = as_double(f.require("memory_cap_bytes"), path);
            f.finish();
            config.scenario.devices.push_back(d);
        }
        const json& gateways = scn.require("gateways");
        for (std::size_t i = 0; i < gateways.size(); ++i) {
            const std::string path = "$.scenario.gateways[" + std::to_string(i) + "]";
            Fields f(gateways[i], path);
            GatewayProfile g;
            g.id = static_cast<int>(as_u64(f.require("id"), path));
            g.freq_min_hz = as_double(f.require("freq_min_hz"), path);
            g.freq_max_hz = as_double(f.require("freq_max_hz"), path);
            g.flops_per_cycle = as_double(f.require("flops_per_cycle"), path);
            g.capacitance = as_double(f.require("capacitance"), path);
            g.energy_cap_j = as_double(f.require("energy_cap_j"), path);
            g.memory_cap_bytes = as_double(f.require("memory_cap_bytes"), path);
            g.max_tx_power_w = as_double(f.require("max_tx_power_w"), path);
            g.distance_m = as_double(f.require("distance_m"), path);
            f.finish();
            config.scenario.gateways.push_back(g);
        }
        {
            Fields f(scn.require("channel"), "$.scenario.channel");
            ChannelParams& c = config.scenario.channel;
            c.uplink_bandwidth_hz = as_double(f.require("uplink_bandwidth_hz"), "channel");
            c.downlink_bandwidth_hz = as_double(f.require("downlink_bandwidth_hz"), "channel");
            c.noise_density_w_per_hz = as_double(f.require("noise_density_w_per_hz"), "channel");
            c.path_loss_const = as_double(f.require("path_loss_const"), "channel");
            c.reference_distance_m = as_double(f.require("reference_distance_m"), "channel");
            c.path_loss_exponent = as_double(f.require("path_loss_exponent"), "channel");
            c.bs_tx_power_w = as_double(f.require("bs_tx_power_w"), "channel");
            c.uplink_interference_variance_w2 =
                as_double(f.require("uplink_interference_variance_w2"), "channel");
            c.downlink_interference_variance_w2 =
                as_double(f.require("downlink_interference_variance_w2"), "channel");
            c.channel_count = static_cast<int>(as_u64(f.require("channel_count"), "channel"));
            f.finish();
        }
        {
            Fields f(scn.require("network"), "$.scenario.network");
            config.scenario.network.model_size_bytes =
                as_double(f.require("model_size_bytes"), "network");
            if (const json* v = f.optional("uniform_precision_scaling")) {
                config.scenario.network.uniform_precision_scaling = v->get<bool>();
            }
            const json& layers = f.require("layers");
            for (std::size_t i = 0; i < layers.size(); ++i) {
                config.scenario.network.layers.push_back(
                    layer_from_json(layers[i], "$.scenario.network.layers[" + std::to_string(i) + "]"));
            }
            f.finish();
        }
        scn.finish();
    }

    {
        Fields f(top.require("fl"), "$.fl");
        config.fl.enabled = f.require("enabled").get<bool>();
        config.fl.model_dim = static_cast<int>(as_u64(f.require("model_dim"), "fl"));
        config.fl.step_size = as_double(f.require("step_size"), "fl");
        config.fl.sampling_ratio = as_double(f.require("sampling_ratio"), "fl");
        const std::string family = f.require("loss_family").get<std::string>();
        if (family == "least_squares") config.fl.family = LossFamily::LeastSquares;
        else if (family == "nonconvex") config.fl.family = LossFamily::NonConvex;
        else throw std::runtime_error("config: unknown loss_family " + family);
        config.fl.label_noise = as_double(f.require("label_noise"), "fl");
        config.fl.nonconvex_weight = as_double(f.require("nonconvex_weight"), "fl");
        config.fl.warmup_rounds = static_cast<int>(as_u64(f.require("warmup_rounds"), "fl"));
        config.fl.track_bounds = f.require("track_bounds").get<bool>();
        f.finish();
    }

    {
        Fields f(top.require("control"), "$.control");
        config.control.v_values = f.require("v_values").get<std::vector<double>>();
        config.control.rounds = static_cast<int>(as_u64(f.require("rounds"), "control"));
        config.control.seeds = f.require("seeds").get<std::vector<std::uint64_t>>();
        config.control.policies.clear();
        for (const auto& name : f.require("policies")) {
            config.control.policies.push_back(policy_from_name(name.get<std::string>()));
        }
        const std::string source = f.require("stats_source").get<std::string>();
        if (source == "fixed") config.control.stats_source = StatsSource::Fixed;
        else if (source == "estimated") config.control.stats_source = StatsSource::Estimated;
        else throw std::runtime_error("config: unknown stats_source " + source);
        Fields s(f.require("solver"), "$.control.solver");
        config.control.solver.bisection_tol = as_double(s.require("bisection_tol"), "solver");
        config.control.solver.bcd_max_iters = static_cast<int>(as_u64(s.require("bcd_max_iters"), "solver"));
        config.control.solver.bcd_rel_tol = as_double(s.require("bcd_rel_tol"), "solver");
        config.control.solver.assignment_iter_cap =
            static_cast<int>(as_u64(s.require("assignment_iter_cap"), "solver"));
        config.control.solver.parallel_lambda = s.require("parallel_lambda").get<bool>();
        s.finish();
        f.finish();
    }

    {
        Fields f(top.require("baseline"), "$.baseline");
        config.baseline.tx_power_fraction = as_double(f.require("tx_power_fraction"), "baseline");
        config.baseline.partition_mode = f.require("partition_mode").get<std::string>();
        config.baseline.fixed_partition = static_cast<int>(as_u64(f.require("fixed_partition"), "baseline"));
        f.finish();
    }

    config.device_skew = top.require("device_skew").get<std::vector<double>>();
    for (const auto& entry : top.require("device_stats")) {
        Fields f(entry, "$.device_stats[]");
        DataStats s;
        s.sigma = as_double(f.require("sigma"), "device_stats");
        s.delta = as_double(f.require("delta"), "device_stats");
        s.smoothness = as_double(f.require("smoothness"), "device_stats");
        s.lipschitz = as_double(f.require("lipschitz"), "device_stats");
        f.finish();
        config.device_stats.push_back(s);
    }
    top.finish();

    config.validate();
    return config;
}

json config_to_json(const ScenarioConfig& config) {
    json root;
    json scn;
    scn["local_epochs"] = config.scenario.local_epochs;
    scn["devices"] = json::array();
    for (const DeviceProfile& d : config.scenario.devices) {
        json obj;
        obj["id"] = d.id;
        obj["gateway_id"] = d.gateway_id;
        obj["local_dataset_size"] = d.local_dataset_size;
        obj["batch_size"] = d.batch_size;
        obj["cpu_freq_hz"] = d.cpu_freq_hz;
        obj["flops_per_cycle"] = d.flops_per_cycle;
        obj["capacitance"] = d.capacitance;
        obj["energy_cap_j"] = d.energy_cap_j;
        obj["memory_cap_bytes"] = d.memory_cap_bytes;
        scn["devices"].push_back(obj);
    }
    scn["gateways"] = json::array();
    for (const GatewayProfile& g : config.scenario.gateways) {
        json obj;
        obj["id"] = g.id;
        obj["freq_min_hz"] = g.freq_min_hz;
        obj["freq_max_hz"] = g.freq_max_hz;
        obj["flops_per_cycle"] = g.flops_per_cycle;
        obj["capacitance"] = g.capacitance;
        obj["energy_cap_j"] = g.energy_cap_j;
        obj["memory_cap_bytes"] = g.memory_cap_bytes;
        obj["max_tx_power_w"] = g.max_tx_power_w;
        obj["distance_m"] = g.distance_m;
        scn["gateways"].push_back(obj);
    }
    {
        const ChannelParams& c = config.scenario.channel;
        json obj;
        obj["uplink_bandwidth_hz"] = c.uplink_bandwidth_hz;
        obj["downlink_bandwidth_hz"] = c.downlink_bandwidth_hz;
        obj["noise_density_w_per_hz"] = c.noise_density_w_per_hz;
        obj["path_loss_const"] = c.path_loss_const;
        obj["reference_distance_m"] = c.reference_distance_m;
        obj["path_loss_exponent"] = c.path_loss_exponent;
        obj["bs_tx_power_w"] = c.bs_tx_power_w;
        obj["uplink_interference_variance_w2"] = c.uplink_interference_variance_w2;
        obj["downlink_interference_variance_w2"] = c.downlink_interference_variance_w2;
        obj["channel_count"] = c.channel_count;
        scn["channel"] = obj;
    }
    {
        json obj;
        obj["model_size_bytes"] = config.scenario.network.model_size_bytes;
        obj["uniform_precision_scaling"] = config.scenario.network.uniform_precision_scaling;
        obj["layers"] = json::array();
        for (const LayerSpec& layer : config.scenario.network.layers) {
            obj["layers"].push_back(layer_to_json(layer));
        }
        scn["network"] = obj;
    }
    root["scenario"] = scn;

    {
        json obj;
        obj["enabled"] = config.fl.enabled;
        obj["model_dim"] = config.fl.model_dim;
        obj["step_size"] = config.fl.step_size;
        obj["sampling_ratio"] = config.fl.sampling_ratio;
        obj["loss_family"] = config.fl.family == LossFamily::LeastSquares ? "least_squares" : "nonconvex";
        obj["label_noise"] = config.fl.label_noise;
        obj["nonconvex_weight"] = config.fl.nonconvex_weight;
        obj["warmup_rounds"] = config.fl.warmup_rounds;
        obj["track_bounds"] = config.fl.track_bounds;
        root["fl"] = obj;
    }
    {
        json obj;
        obj["v_values"] = config.control.v_values;
        obj["rounds"] = config.control.rounds;
        obj["seeds"] = config.control.seeds;
        obj["policies"] = json::array();
        for (Policy p : config.control.policies) obj["policies"].push_back(policy_name(p));
        obj["stats_source"] = config.control.stats_source == StatsSource::Fixed ? "fixed" : "estimated";
        json solver;
        solver["bisection_tol"] = config.control.solver.bisection_tol;
        solver["bcd_max_iters"] = config.control.solver.bcd_max_iters;
        solver["bcd_rel_tol"] = config.control.solver.bcd_rel_tol;
        solver["assignment_iter_cap"] = config.control.solver.assignment_iter_cap;
        solver["parallel_lambda"] = config.control.solver.parallel_lambda;
        obj["solver"] = solver;
        root["control"] = obj;
    }
    {
        json obj;
        obj["tx_power_fraction"] = config.baseline.tx_power_fraction;
        obj["partition_mode"] = config.baseline.partition_mode;
        obj["fixed_partition"] = config.baseline.fixed_partition;
        root["baseline"] = obj;
    }
    root["device_skew"] = config.device_skew;
    root["device_stats"] = json::array();
    for (const DataStats& s : config.device_stats) {
        json obj;
        obj["sigma"] = s.sigma;
        obj["delta"] = s.delta;
        obj["smoothness"] = s.smoothness;
        obj["lipschitz"] = s.lipschitz;
        root["device_stats"].push_back(obj);
    }
    return root;
}

}  // namespace

void ScenarioConfig::validate() const {
    scenario.validate();
    if (fl.model_dim < 1) throw std::runtime_error("config: fl.model_dim must be >= 1");
    if (!(fl.step_size > 0)) throw std::runtime_error("config: fl.step_size must be > 0");
    if (!(fl.sampling_ratio > 0 && fl.sampling_ratio <= 1)) {
        throw std::runtime_error("config: fl.sampling_ratio must be in (0, 1]");
    }
    if (control.rounds < 0) throw std::runtime_error("config: control.rounds must be >= 0");
    if (control.v_values.empty()) throw std::runtime_error("config: control.v_values must not be empty");
    for (double v : control.v_values) {
        if (!(v > 0)) throw std::runtime_error("config: every V must be > 0");
    }
    if (control.seeds.empty()) throw std::runtime_error("config: control.seeds must not be empty");
    if (control.policies.empty()) throw std::runtime_error("config: control.policies must not be empty");
    if (!(baseline.tx_power_fraction > 0 && baseline.tx_power_fraction <= 1)) {
        throw std::runtime_error("config: baseline.tx_power_fraction must be in (0, 1]");
    }
    if (baseline.partition_mode != "median" && baseline.partition_mode != "fixed") {
        throw std::runtime_error("config: baseline.partition_mode must be median|fixed");
    }
    if (device_skew.size() != scenario.devices.size()) {
        throw std::runtime_error("config: device_skew must list one value per device");
    }
    if (control.stats_source == StatsSource::Fixed &&
        device_stats.size() != scenario.devices.size()) {
        throw std::runtime_error("config: device_stats must list one entry per device (fixed stats)");
    }
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return config_from_json_text(buffer.str());
}

ScenarioConfig config_from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config: JSON parse error: ") + e.what());
    }
    return config_from_json(root);
}

std::string config_to_json_text(const ScenarioConfig& config) {
    return config_to_json(config).dump(2) + "\n";
}

void save_config(const ScenarioConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot write " + path);
    out << config_to_json_text(config);
}

std::uint64_t config_hash(const ScenarioConfig& config) {
    const std::string text = config_to_json_text(config);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

ScenarioConfig ScenarioConfig::paper_default() {
    ScenarioConfig config;
    Scenario& scn = config.scenario;
    scn.local_epochs = 5;

    const int gateways = 6;
    const int devices_per_gateway = 2;
    const double sampling_ratio = 0.05;

    // Draws follow the experiment distributions; assignments are ordered so
    // the first shop floors pair the best data with the shortest distances,
    // the largest CPU budgets and the smallest datasets. Floors then rank
    // consistently in both data quality and round delay.
    Rng rng(0x0ddc0de);
    std::vector<double> distances(gateways), device_freqs(gateways * devices_per_gateway);
    std::vector<std::uint64_t> dataset_sizes(gateways * devices_per_gateway);
    for (double& d : distances) d = std::round(rng.uniform(1000.0, 2000.0));
    for (std::uint64_t& d : dataset_sizes) d = 1 + rng.next_u64() % 2000;
    for (double& f : device_freqs) f = std::round(rng.uniform(1e8, 1e9));
    std::sort(distances.begin(), distances.end());
    std::sort(dataset_sizes.begin(), dataset_sizes.end());
    std::sort(device_freqs.rbegin(), device_freqs.rend());

    for (int m = 0; m < gateways; ++m) {
        GatewayProfile g;
        g.id = m;
        g.freq_min_hz = 1e8;
        g.freq_max_hz = 4e9;
        g.flops_per_cycle = 32;
        g.capacitance = 1e-27;
        g.energy_cap_j = 30;
        g.memory_cap_bytes = 4e9;
        g.max_tx_power_w = 0.2;
        g.distance_m = distances[static_cast<std::size_t>(m)];
        scn.gateways.push_back(g);
    }
    for (int n = 0; n < gateways * devices_per_gateway; ++n) {
        DeviceProfile d;
        d.id = n;
        d.gateway_id = n / devices_per_gateway;
        d.local_dataset_size = dataset_sizes[static_cast<std::size_t>(n)];
        d.batch_size = std::max<std::uint64_t>(
            1, static_cast<std::uint64_t>(std::llround(sampling_ratio * static_cast<double>(d.local_dataset_size))));
        d.cpu_freq_hz = device_freqs[static_cast<std::size_t>(n)];
        d.flops_per_cycle = 16;
        d.capacitance = 1e-27;
        d.energy_cap_j = 5;
        d.memory_cap_bytes = 2e9;
        scn.devices.push_back(d);
    }

    ChannelParams& c = scn.channel;
    c.uplink_bandwidth_hz = 1e6;
    c.downlink_bandwidth_hz = 2e7;
    c.noise_density_w_per_hz = 3.9810717055349565e-21;  // -174 dBm/Hz
    c.path_loss_const = 1e-3;                           // -30 dB
    c.reference_distance_m = 1;
    c.path_loss_exponent = 2;
    c.bs_tx_power_w = 1;
    c.uplink_interference_variance_w2 = 1e-28;
    c.downlink_interference_variance_w2 = 1e-26;
    c.channel_count = 3;

    NetworkSpec& net = scn.network;
    net.model_size_bytes = 1e6;
    auto conv = [](std::uint64_t hi, std::uint64_t ci, std::uint64_t ho, std::uint64_t co) {
        LayerSpec l;
        l.kind = LayerKind::Convolution;
        l.in_height = hi; l.in_width = hi; l.in_channels = ci;
        l.out_height = ho; l.out_width = ho; l.out_channels = co;
        l.filter_height = 3; l.filter_width = 3;
        return l;
    };
    auto pool = [](std::uint64_t hi, std::uint64_t ci, std::uint64_t ho) {
        LayerSpec l;
        l.kind = LayerKind::Pooling;
        l.in_height = hi; l.in_width = hi; l.in_channels = ci;
        l.out_height = ho; l.out_width = ho; l.out_channels = ci;
        return l;
    };
    auto fc = [](std::uint64_t si, std::uint64_t so) {
        LayerSpec l;
        l.kind = LayerKind::FullyConnected;
        l.input_size = si; l.output_size = so;
        return l;
    };
    net.layers = {conv(32, 3, 32, 64),   pool(32, 64, 16),  conv(16, 64, 16, 128),
                  pool(16, 128, 8),      conv(8, 128, 8, 256), conv(8, 256, 8, 256),
                  pool(8, 256, 4),       conv(4, 256, 4, 256), pool(4, 256, 2),
                  fc(1024, 256),         fc(256, 10)};

    config.fl.enabled = true;
    config.fl.model_dim = 4;
    config.fl.step_size = 0.01;
    config.fl.sampling_ratio = sampling_ratio;
    config.fl.family = LossFamily::LeastSquares;
    config.fl.label_noise = 0.05;
    config.fl.nonconvex_weight = 1.0;
    config.fl.warmup_rounds = 40;

    config.control.v_values = {1.0};
    config.control.rounds = 200;
    config.control.seeds = {1};
    config.control.policies = {Policy::Ddsra};
    config.control.stats_source = StatsSource::Fixed;
    config.control.solver = ControlParams{};

    config.baseline.tx_power_fraction = 0.5;
    config.baseline.partition_mode = "median";

    // skew ramps across shop floors; the first floor's data matches the
    // pooled distribution best and earns the largest participation rate
    for (int n = 0; n < gateways * devices_per_gateway; ++n) {
        const int m = n / devices_per_gateway;
        const double base = 0.5 + 0.2 * m;
        config.device_skew.push_back(base * (n % devices_per_gateway == 0 ? 1.0 : 1.1));
    }
    for (int n = 0; n < gateways * devices_per_gateway; ++n) {
        DataStats s;
        s.sigma = 0.8 * config.device_skew[static_cast<std::size_t>(n)];
        s.delta = 0.5 * config.device_skew[static_cast<std::size_t>(n)];
        s.smoothness = 1.0;
        s.lipschitz = 1.0;
        config.device_stats.push_back(s);
    }

    config.validate();
    return config;
}

}  // namespace ddsra
