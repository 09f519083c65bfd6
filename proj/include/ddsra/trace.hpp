#pragma once

#include <string>
#include <vector>

#include "ddsra/sim_harness.hpp"

namespace ddsra {

struct TraceHeader {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string policy;
    double v = 0;
    int rounds = 0;
};

// Tab-separated round records behind a self-describing '#' header. Identical
// runs serialize to identical bytes.
std::string trace_to_string(const TraceHeader& header, const std::vector<RoundTrace>& traces);
void write_trace_file(const std::string& path, const TraceHeader& header,
                      const std::vector<RoundTrace>& traces);

struct LabeledResult {
    std::string label;
    const ExperimentResult* result;
};

// Plot-ready series: latency and loss against the round index, participation
// per gateway, and a one-line summary per run.
void emit_plot_data(const std::string& out_dir, const std::vector<LabeledResult>& results);

}  // namespace ddsra
