#pragma once

#include <vector>

#include "ddsra/env_model.hpp"

namespace ddsra {

// Per-device statistics of the local loss landscape. `sigma` bounds the
// per-sample gradient variance, `delta` the local-vs-global gradient gap,
// `smoothness` the gradient Lipschitz constant, `lipschitz` the gradient
// norm bound.
struct DataStats {
    double sigma = 0;
    double delta = 0;
    double smoothness = 1;
    double lipschitz = 0;
};

// Divergence bound for gateway m after K local epochs at step size beta:
// a batch-weighted mean of (sigma/(L sqrt(D~)) + delta/L) * ((beta L + 1)^K - 1)
// over the gateway's associated devices. Throws on smoothness <= 0.
double divergence_bound(const Scenario& scenario, int m, const std::vector<DataStats>& stats,
                        double beta, int local_epochs);

std::vector<double> divergence_bounds(const Scenario& scenario, const std::vector<DataStats>& stats,
                                      double beta, int local_epochs);

// Gamma_m = min{ J * (1/Phi_m) / sum_m (1/Phi_m), 1 }. No re-normalization
// after clipping. Throws on any Phi_m <= 0 (degenerate input).
std::vector<double> participation_rates(const std::vector<double>& phi, int channel_count);

struct ParticipationPlan {
    std::vector<double> phi;
    std::vector<double> gamma;
    double beta = 0;
    int local_epochs = 0;
};

ParticipationPlan make_participation_plan(const Scenario& scenario, const std::vector<DataStats>& stats,
                                          double beta, int local_epochs);

}  // namespace ddsra
