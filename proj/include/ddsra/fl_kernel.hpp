#pragma once

#include <cstdint>
#include <vector>

#include "ddsra/env_model.hpp"
#include "ddsra/participation.hpp"
#include "ddsra/util.hpp"

namespace ddsra {

using Vec = std::vector<double>;

enum class LossFamily { LeastSquares, NonConvex };

struct FlParams {
    bool enabled = true;
    int model_dim = 4;
    double step_size = 0.01;        // beta
    double sampling_ratio = 0.05;   // alpha, used when device batch sizes derive from it
    LossFamily family = LossFamily::LeastSquares;
    double label_noise = 0.05;
    double nonconvex_weight = 1.0;  // mu in the sinusoidal per-sample term
    int warmup_rounds = 40;         // constant-estimation run length
    bool track_bounds = true;       // carry the reference trajectories and probes
};

// Synthetic per-device regression datasets. Device skew shifts both the
// feature distribution and the device-local target, so higher skew means a
// worse match to the pooled data.
class SyntheticTask {
public:
    static SyntheticTask generate(const Scenario& scenario, const FlParams& params,
                                  const std::vector<double>& device_skew, std::uint64_t seed);

    int device_count() const { return static_cast<int>(dataset_.size()); }
    int dim() const { return dim_; }
    std::uint64_t samples(int n) const { return dataset_[static_cast<std::size_t>(n)].count; }
    std::uint64_t batch_size(int n) const { return batch_size_[static_cast<std::size_t>(n)]; }

    double local_loss(int n, const Vec& w) const;
    double central_loss(const Vec& w) const;
    double batch_loss(int n, const Vec& w, const std::vector<std::uint32_t>& batch) const;
    Vec local_gradient(int n, const Vec& w) const;
    Vec batch_gradient(int n, const Vec& w, const std::vector<std::uint32_t>& batch) const;
    Vec central_gradient(const Vec& w) const;

    // batch of device n for one round, drawn without replacement
    std::vector<std::uint32_t> sample_batch(int n, std::uint64_t seed) const;

    // largest Hessian eigenvalue of the local loss (times the curvature
    // factor of the non-convex per-sample term)
    double smoothness(int n) const;
    // pooled least-squares minimizer; meaningful for the convex family
    Vec centralized_optimum() const;

    LossFamily family() const { return family_; }

private:
    struct DeviceData {
        std::vector<double> x;  // row-major count x dim
        std::vector<double> y;
        std::uint64_t count = 0;
    };
    double sample_residual(int n, std::uint32_t i, const Vec& w) const;

    int dim_ = 0;
    LossFamily family_ = LossFamily::LeastSquares;
    double nonconvex_weight_ = 1.0;
    std::vector<DeviceData> dataset_;
    std::vector<std::uint64_t> batch_size_;
    std::uint64_t total_samples_ = 0;
};

// Per-device maxima observed along a run; the raw material for DataStats.
struct ConstantsProbe {
    std::vector<double> sigma_scaled;  // max sqrt(D~) * ||batch grad - full grad|| at visited points
    std::vector<double> delta;         // max ||local grad - central grad|| at visited points
    std::vector<double> ratio;         // max gradient-difference / distance over visited pairs
    std::vector<double> grad_norm;     // max ||local grad||
};

// maxima + safety margin
std::vector<DataStats> estimate_constants(const ConstantsProbe& probe, double margin = 1.1);

// componentwise max of two probes (multi-seed envelopes)
ConstantsProbe merge_probes(const ConstantsProbe& a, const ConstantsProbe& b);

// Distances recorded along the three coupled trajectories: the batch run,
// the full-gradient run and the centralized run, all resynchronized to the
// global model at each round start.
struct FlRecords {
    int rounds = 0;
    int epochs = 0;     // K
    int devices = 0;
    int gateways = 0;

    // flattened [t * devices * (K+1) + n * (K+1) + k]
    std::vector<double> full_vs_central;
    std::vector<double> batch_vs_full;
    // flattened [t * gateways + m]
    std::vector<double> shop_divergence;

    // flattened [t * devices * K + n * K + k]: ||local grad at batch point||^2
    std::vector<double> batch_grad_norm_sq;

    std::vector<double> global_loss;          // F(W^t) before the round's update
    std::vector<double> global_grad_norm_sq;  // ||central grad at W^t||^2
    std::vector<double> central_loss_end;     // F(v^{K,t})
    std::vector<double> central_dist_opt;     // ||v^{K,t} - w*|| (convex family)

    std::size_t dist_index(int t, int n, int k) const {
        return (static_cast<std::size_t>(t) * devices + n) * (epochs + 1) + k;
    }
    std::size_t grad_index(int t, int n, int k) const {
        return (static_cast<std::size_t>(t) * devices + n) * epochs + k;
    }
};

struct FlRoundOutcome {
    bool updated = false;
    double global_loss = 0;                // at the round start point
    std::vector<double> device_loss;       // local loss at the trained local model
    std::vector<double> gateway_loss;      // batch-weighted mean over associated devices
    std::vector<double> shop_divergence;   // ||shop-floor aggregate - centralized endpoint|| per gateway
};

// w <- w - beta * gradient
Vec local_update(const Vec& w, const Vec& gradient, double beta);

// batch-weighted mean of the local models of gateway m's devices
Vec shop_floor_aggregate(const Scenario& scenario, int m, const std::vector<Vec>& local_models);

// selected-gateway FedAvg over shop-floor aggregates, weighted by the
// gateways' total batch sizes; nullopt-like: returns `current` when nothing
// is selected
Vec global_aggregate(const Scenario& scenario, const std::vector<Vec>& shop_floor,
                     const std::vector<bool>& selected, const Vec& current);

class FlRunner {
public:
    FlRunner(const SyntheticTask& task, const Scenario& scenario, const FlParams& params,
             std::uint64_t seed);

    // advance one communication round; `apply_update` false models a failed
    // round (latency spent, no aggregation)
    FlRoundOutcome step(const std::vector<bool>& selected_gateways, bool apply_update = true);

    const Vec& global() const { return global_; }
    const FlRecords& records() const { return records_; }
    const ConstantsProbe& probe() const { return probe_; }
    int round() const { return round_; }

private:
    const SyntheticTask* task_;
    const Scenario* scenario_;
    FlParams params_;
    std::uint64_t seed_;
    int round_ = 0;
    Vec global_;
    Vec cached_optimum_;
    FlRecords records_;
    ConstantsProbe probe_;
    std::vector<std::vector<int>> by_gateway_;
};

struct BoundCheckReport {
    std::uint64_t checks = 0;
    std::uint64_t violations = 0;
    double worst_ratio = 0;  // max observed / bound, 1.0 == tight
};

// Full-gradient drift bound: ||w_n^{k,t} - v^{k,t}|| <= (delta/L)((beta L + 1)^k - 1).
BoundCheckReport check_local_drift_bound(const FlRecords& records, const std::vector<DataStats>& stats,
                                   double beta);
// In-expectation batch bound, checked on per-(n,k,t) means across seeds.
BoundCheckReport check_batch_drift_bound(const std::vector<const FlRecords*>& runs,
                                    const std::vector<DataStats>& stats,
                                    const std::vector<std::uint64_t>& batch_sizes, double beta);
// Shop-floor divergence against the per-gateway bound, on multi-seed means.
BoundCheckReport check_divergence_bound(const std::vector<const FlRecords*>& runs,
                                const std::vector<double>& phi, double slack = 0.0);

struct ConvergenceReport {
    // convex family
    bool convex_valid = false;   // RHS denominator positive
    double convex_lhs = 0;       // F(W^T) - F(w*)
    double convex_rhs = 0;
    double omega = 0, epsilon = 0, phi_coef = 0;
    // non-convex family
    double nonconvex_lhs = 0;    // mean squared global gradient norm
    double nonconvex_rhs = 0;
    bool holds() const;
};

ConvergenceReport convergence_report(const SyntheticTask& task, const Scenario& scenario,
                                     const FlParams& params, const FlRecords& records,
                                     const std::vector<DataStats>& stats,
                                     const std::vector<double>& gamma, const Vec& final_global);

// J gateways per round: uniform, or weighted by participation rate
std::vector<bool> select_uniform(int gateways, int channels, Rng& rng);
std::vector<bool> select_weighted(const std::vector<double>& gamma, int channels, Rng& rng);

// Fixed-budget FL comparison driver: returns the final central loss after
// `rounds` rounds under the given per-round selection rule.
enum class SelectionRule { Uniform, GammaWeighted };
double run_selection_fl(const SyntheticTask& task, const Scenario& scenario, const FlParams& params,
                        SelectionRule rule, const std::vector<double>& gamma, int rounds,
                        std::uint64_t seed);

}  // namespace ddsra
