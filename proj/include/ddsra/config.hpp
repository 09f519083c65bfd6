#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddsra/ddsra_core.hpp"
#include "ddsra/env_model.hpp"
#include "ddsra/fl_kernel.hpp"
#include "ddsra/participation.hpp"

namespace ddsra {

inline constexpr const char* kVersion = "0.3.0";

enum class Policy { Ddsra, RandomScheduling, RoundRobin, LossDriven, DelayDriven };

const char* policy_name(Policy p);
Policy policy_from_name(const std::string& name);

enum class StatsSource { Fixed, Estimated };

struct RunControl {
    std::vector<double> v_values{1.0};
    int rounds = 100;
    std::vector<std::uint64_t> seeds{1};
    std::vector<Policy> policies{Policy::Ddsra};
    StatsSource stats_source = StatsSource::Fixed;
    ControlParams solver;
};

struct BaselineSettings {
    double tx_power_fraction = 0.5;  // of each gateway's cap
    // "median": middle memory-feasible split per device; or a fixed index
    std::string partition_mode = "median";
    int fixed_partition = 0;
};

struct ScenarioConfig {
    Scenario scenario;
    FlParams fl;
    RunControl control;
    BaselineSettings baseline;
    std::vector<double> device_skew;       // synthetic data skew knob per device
    std::vector<DataStats> device_stats;   // used when stats_source == Fixed

    void validate() const;

    // the experiment defaults: 6 gateways x 2 devices, 3 channels, 5 local
    // epochs, 5% sampling, 0.01 step size, harvested-energy caps 5 J / 30 J
    static ScenarioConfig paper_default();
};

ScenarioConfig load_config(const std::string& path);
ScenarioConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ScenarioConfig& config);
void save_config(const ScenarioConfig& config, const std::string& path);

// FNV-1a over the canonical serialized form
std::uint64_t config_hash(const ScenarioConfig& config);

}  // namespace ddsra
