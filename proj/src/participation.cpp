#include "ddsra/participation.hpp"

#include <cmath>
#include <stdexcept>

namespace ddsra {

double divergence_bound(const Scenario& scenario, int m, const std::vector<DataStats>& stats,
                        double beta, int local_epochs) {
    const auto by_gateway = scenario.device_index();
    const std::vector<int>& assoc = by_gateway.at(static_cast<std::size_t>(m));

    double batch_total = 0;
    for (int n : assoc) {
        batch_total += static_cast<double>(scenario.devices[static_cast<std::size_t>(n)].batch_size);
    }

    double phi = 0;
    for (int n : assoc) {
        const DataStats& s = stats.at(static_cast<std::size_t>(n));
        if (!(s.smoothness > 0)) {
            throw std::invalid_argument("divergence_bound: smoothness must be > 0");
        }
        const double batch = static_cast<double>(scenario.devices[static_cast<std::size_t>(n)].batch_size);
        const double weight = batch / batch_total;
        const double spread = s.sigma / (s.smoothness * std::sqrt(batch)) + s.delta / s.smoothness;
        const double growth = std::pow(beta * s.smoothness + 1.0, local_epochs) - 1.0;
        phi += weight * spread * growth;
    }
    return phi;
}

std::vector<double> divergence_bounds(const Scenario& scenario, const std::vector<DataStats>& stats,
                                      double beta, int local_epochs) {
    std::vector<double> phi(scenario.gateways.size());
    for (int m = 0; m < scenario.gateway_count(); ++m) {
        phi[static_cast<std::size_t>(m)] = divergence_bound(scenario, m, stats, beta, local_epochs);
    }
    return phi;
}

std::vector<double> participation_rates(const std::vector<double>& phi, int channel_count) {
    double inv_sum = 0;
    for (double p : phi) {
        if (!(p > 0)) {
            throw std::invalid_argument("participation_rates: all divergence bounds must be > 0");
        }
        inv_sum += 1.0 / p;
    }
    std::vector<double> gamma(phi.size());
    for (std::size_t m = 0; m < phi.size(); ++m) {
        gamma[m] = std::min(static_cast<double>(channel_count) * (1.0 / phi[m]) / inv_sum, 1.0);
    }
    return gamma;
}

ParticipationPlan make_participation_plan(const Scenario& scenario, const std::vector<DataStats>& stats,
                                          double beta, int local_epochs) {
    ParticipationPlan plan;
    plan.beta = beta;
    plan.local_epochs = local_epochs;
    plan.phi = divergence_bounds(scenario, stats, beta, local_epochs);
    plan.gamma = participation_rates(plan.phi, scenario.channel.channel_count);
    return plan;
}

}  // namespace ddsra
