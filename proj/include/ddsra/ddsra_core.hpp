#pragma once

#include <optional>
#include <vector>

#include "ddsra/env_model.hpp"
#include "ddsra/util.hpp"

namespace ddsra {

struct ControlParams {
    double V = 1.0;                 // latency weight in the drift-plus-penalty objective
    double bisection_tol = 1e-6;    // relative width stop for objective intervals
    int bcd_max_iters = 16;
    double bcd_rel_tol = 1e-6;      // relative improvement stop for block descent
    int assignment_iter_cap = 8;    // outer matching / threshold alternation cap
    bool parallel_lambda = false;   // solve the (m, j) grid on worker threads
};

// Per-gateway virtual queue state driving the time-average participation
// constraint. Queues never go negative.
struct VirtualQueues {
    std::vector<double> q;
    std::vector<double> gamma;  // target rates
};

// Q' = max{Q - selected + gamma, 0}, componentwise.
std::vector<double> queue_update(const std::vector<double>& q, const std::vector<bool>& selected,
                                 const std::vector<double>& gamma);

// Minimized round delay for gateway m on channel j, with the resource
// arguments attaining it. Infeasible entries carry lambda = +inf.
struct LambdaEntry {
    double lambda = kInfinity;
    bool feasible = false;
    std::vector<int> partition;        // per associated device
    std::vector<double> gateway_freq;  // per associated device
    double tx_power = 0;
    double tx_root = 0;                // unclamped root of the power equation
    std::vector<double> bcd_trace;     // lambda after each accepted block pass
};

struct PowerResult {
    double power = 0;     // min{root, P^max}; 0 when the budget cannot cover transmission
    double root = 0;      // solution of the transmit-energy balance equation
    double residual = 0;  // relative defect of the root in the defining equation
    bool zero_branch = false;
};

class LambdaSolver {
public:
    LambdaSolver(const EnvModel& env, const ControlParams& params);

    // Block coordinate descent over partition, frequency and power blocks;
    // the returned entry is verified feasible for the per-round limits or
    // marked infeasible.
    LambdaEntry solve(int m, int j, const RoundRealization& real) const;

    // whole M x J grid, flattened [m * J + j]; optionally multi-threaded,
    // results identical either way
    std::vector<LambdaEntry> solve_all(const RoundRealization& real) const;

    // Greedy split search: bisect the worst-device training time eta, derive
    // per-device split intervals from the time target plus device memory and
    // the gateway energy budget, and probe the max-offload end of each
    // interval. Empty result = no feasible split profile found.
    std::optional<std::vector<int>> bisect_partition(int m, int j, const RoundRealization& real,
                                                     const std::vector<double>& freq, double power) const;

    // Bisect the worst-device training time theta; each candidate induces the
    // minimal per-device frequency, checked against the frequency budget and
    // the gateway energy budget.
    std::optional<std::vector<double>> bisect_frequency(int m, int j, const RoundRealization& real,
                                                        const std::vector<int>& partition, double power) const;

    // Closed-form transmit power: zero when the residual energy budget cannot
    // cover any transmission, otherwise the budget-balance root capped at P^max.
    PowerResult optimal_power(int m, int j, const RoundRealization& real,
                              const std::vector<int>& partition, const std::vector<double>& freq) const;

    // Total delay train + up + down at the given arguments; +inf when power
    // or a required frequency is zero.
    double lambda_value(int m, int j, const RoundRealization& real, const std::vector<int>& partition,
                        const std::vector<double>& freq, double power) const;

    // All per-round limits: power cap, split range, frequency budget, device
    // and gateway memory, device and gateway energy.
    bool feasible(int m, int j, const RoundRealization& real, const std::vector<int>& partition,
                  const std::vector<double>& freq, double power) const;

    const EnvModel& env() const { return *env_; }

private:
    struct SplitBounds {
        int lo = 0;
        int hi = 0;
        bool empty = false;
    };
    SplitBounds split_interval(int m, int n, double eta, double freq, double gw_energy_budget) const;
    std::optional<std::vector<int>> splits_for_target(int m, int j, const RoundRealization& real,
                                                      const std::vector<double>& freq, double power,
                                                      double eta) const;
    std::optional<std::vector<double>> freqs_for_target(int m, int j, const RoundRealization& real,
                                                        const std::vector<int>& partition, double power,
                                                        double theta) const;
    std::optional<ScheduledGateway> initial_point(int m, int j, const RoundRealization& real) const;

    const EnvModel* env_;
    const ControlParams* params_;
};

struct AssignmentOutcome {
    std::vector<int> gateway_of_channel;  // -1 when a channel had to stay idle
    std::vector<int> channel_of_gateway;  // -1 for unscheduled gateways
    double threshold = 0;                 // final delay threshold (lambda in the matching step)
    double objective = 0;                 // threshold - sum of selected queue weights
    int relaxed_channels = 0;             // channels left idle for lack of feasible gateways
    int iterations = 0;
};

// Alternates a big-M weighted bipartite matching with the delay-threshold
// update until the assignment is stable. Infeasible (m, j) entries are never
// assigned; if fewer feasible gateways than channels exist, the exact-cover
// constraint is relaxed for the round and the count reported.
AssignmentOutcome assign_channels(const std::vector<std::vector<double>>& lambda,
                                  const std::vector<double>& q, const ControlParams& params);

// V * max scheduled round time - sum of scheduled queue weights, evaluated
// from the environment (not from stored lambda values).
double drift_penalty_objective(const EnvModel& env, std::span<const ScheduledGateway> scheduled,
                               const RoundRealization& real, const std::vector<double>& q, double V);

struct AnalysisBounds {
    double drift_constant = 0;        // H
    double min_round_latency = 0;     // tau^min built from mean channel terms
    double optimality_gap_bound = 0;  // H / V
    double participation_deficit_bound = 0;
};

// Trade-off constants and the two asymptotic bounds. `mean_latency_hint`
// stands in for the unknown optimal average latency; any achieved average is
// a valid (conservative) substitute.
AnalysisBounds analysis_bounds(const Scenario& scenario, const std::vector<double>& gamma, double V,
                               int rounds, double mean_latency_hint);

}  // namespace ddsra
