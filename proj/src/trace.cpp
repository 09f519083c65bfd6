#include "ddsra/trace.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ddsra/util.hpp"

namespace ddsra {

namespace {

std::string join_ids(const std::vector<int>& ids) {
    if (ids.empty()) return "-";
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i > 0) out += ';';
        out += std::to_string(ids[i]);
    }
    return out;
}

std::string num(double v) {
    if (v >= kInfinity) return "inf";
    if (std::isnan(v)) return "nan";
    return fmt_double(v);
}

void join_values(std::string& line, const std::vector<double>& values) {
    for (double v : values) {
        line += '\t';
        line += num(v);
    }
}

}  // namespace

std::string trace_to_string(const TraceHeader& header, const std::vector<RoundTrace>& traces) {
    std::ostringstream out;
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(header.config_hash));
    out << "# ddsra-trace v1\n";
    out << "# version=" << kVersion << " config=" << hash << " seed=" << header.seed
        << " policy=" << header.policy << " V=" << fmt_double(header.v)
        << " rounds=" << header.rounds << "\n";
    const int gateways = traces.empty() ? 0 : static_cast<int>(traces.front().queues.size());
    const int devices = traces.empty() ? 0 : static_cast<int>(traces.front().device_energy_j.size());
    out << "# columns: t selected tau objective relaxed energy_viol mem_viol fl_updated fl_loss"
        << " lambda[" << gateways << "] queue[" << gateways << "] gw_energy[" << gateways
        << "] gw_mem[" << gateways << "] gw_power[" << gateways << "] dev_energy[" << devices
        << "] dev_split[" << devices << "] dev_freq[" << devices << "]\n";

    for (const RoundTrace& row : traces) {
        std::string line = std::to_string(row.t);
        line += '\t';
        line += join_ids(row.selected);
        line += '\t';
        line += num(row.tau_s);
        line += '\t';
        line += num(row.objective);
        line += '\t';
        line += std::to_string(row.relaxed_channels);
        line += '\t';
        line += std::to_string(row.energy_violations);
        line += '\t';
        line += std::to_string(row.memory_violations);
        line += '\t';
        line += row.fl_updated ? '1' : '0';
        line += '\t';
        line += num(row.fl_loss);
        join_values(line, row.lambda_gateway);
        join_values(line, row.queues);
        join_values(line, row.gateway_energy_j);
        join_values(line, row.gateway_memory_bytes);
        join_values(line, row.gateway_power_w);
        join_values(line, row.device_energy_j);
        for (int split : row.device_partition) {
            line += '\t';
            line += std::to_string(split);
        }
        join_values(line, row.device_gateway_freq);
        out << line << "\n";
    }
    return out.str();
}

void write_trace_file(const std::string& path, const TraceHeader& header,
                      const std::vector<RoundTrace>& traces) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("trace: cannot write " + path);
    out << trace_to_string(header, traces);
}

void emit_plot_data(const std::string& out_dir, const std::vector<LabeledResult>& results) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    auto open = [&](const std::string& name) {
        std::ofstream out(fs::path(out_dir) / name, std::ios::binary);
        if (!out) throw std::runtime_error("plot data: cannot write " + name);
        return out;
    };

    {
        std::ofstream out = open("latency_vs_round.tsv");
        out << "t";
        for (const LabeledResult& r : results) out << "\t" << r.label;
        out << "\n";
        std::size_t rounds = 0;
        for (const LabeledResult& r : results) rounds = std::max(rounds, r.result->traces.size());
        for (std::size_t t = 0; t < rounds; ++t) {
            out << t;
            for (const LabeledResult& r : results) {
                out << "\t";
                const auto& cum = r.result->metrics.cumulative_latency;
                out << (t < cum.size() ? fmt_double(cum[t]) : "nan");
            }
            out << "\n";
        }
    }
    {
        std::ofstream out = open("loss_vs_round.tsv");
        out << "t";
        for (const LabeledResult& r : results) out << "\t" << r.label;
        out << "\n";
        std::size_t rounds = 0;
        for (const LabeledResult& r : results) rounds = std::max(rounds, r.result->traces.size());
        for (std::size_t t = 0; t < rounds; ++t) {
            out << t;
            for (const LabeledResult& r : results) {
                out << "\t";
                const auto& loss = r.result->metrics.loss_curve;
                out << (t < loss.size() ? num(loss[t]) : "nan");
            }
            out << "\n";
        }
    }
    {
        std::ofstream out = open("participation_by_gateway.tsv");
        out << "gateway\ttarget";
        for (const LabeledResult& r : results) out << "\t" << r.label;
        out << "\n";
        std::size_t gateways = 0;
        for (const LabeledResult& r : results) {
            gateways = std::max(gateways, r.result->metrics.participation_rate.size());
        }
        for (std::size_t m = 0; m < gateways; ++m) {
            out << m << "\t";
            out << (results.empty() || m >= results.front().result->gamma.size()
                        ? "nan"
                        : fmt_double(results.front().result->gamma[m]));
            for (const LabeledResult& r : results) {
                const auto& rate = r.result->metrics.participation_rate;
                out << "\t" << (m < rate.size() ? fmt_double(rate[m]) : "nan");
            }
            out << "\n";
        }
    }
    {
        std::ofstream out = open("summary.tsv");
        out << "run\ttime_avg_latency\tfinal_loss\tmin_participation\tenergy_violations"
            << "\tmemory_violations\trelaxed_rounds\tfailed_fl_rounds\n";
        for (const LabeledResult& r : results) {
            const Metrics& m = r.result->metrics;
            double min_rate = m.participation_rate.empty() ? 0.0 : m.participation_rate.front();
            for (double rate : m.participation_rate) min_rate = std::min(min_rate, rate);
            out << r.label << "\t" << fmt_double(m.time_avg_latency) << "\t" << num(m.final_loss)
                << "\t" << fmt_double(min_rate) << "\t" << m.energy_violations << "\t"
                << m.memory_violations << "\t" << m.relaxed_rounds << "\t" << m.failed_fl_rounds
                << "\n";
        }
    }
}

}  // namespace ddsra
