#include "ddsra/participation.hpp"

#include <cmath>
#include <stdexcept>

#include "ddsra/config.hpp"
#include "checks.hpp"

using namespace ddsra;

namespace {

Scenario one_device_scenario(std::uint64_t batch) {
    ScenarioConfig config = ScenarioConfig::paper_default();
    Scenario scn = config.scenario;
    scn.gateways.resize(1);
    scn.devices.resize(1);
    scn.devices[0].gateway_id = 0;
    scn.devices[0].local_dataset_size = std::max<std::uint64_t>(batch, 1);
    scn.devices[0].batch_size = batch;
    scn.channel.channel_count = 1;
    return scn;
}

}  // namespace

int main() {
    // zero local epochs leave no divergence
    {
        const Scenario scn = one_device_scenario(1);
        std::vector<DataStats> stats{{1.0, 1.0, 1.0, 1.0}};
        CHECK(divergence_bound(scn, 0, stats, 1.0, 0) == 0.0);
    }

    // hand-evaluated single-device case: (sigma + delta) * ((beta L + 1)^K - 1) = 2
    {
        const Scenario scn = one_device_scenario(1);
        std::vector<DataStats> stats{{1.0, 1.0, 1.0, 1.0}};
        CHECK_CLOSE(divergence_bound(scn, 0, stats, 1.0, 1), 2.0, 1e-12);
    }

    // a larger training batch strictly shrinks the variance term
    {
        std::vector<DataStats> stats{{1.0, 0.0, 1.0, 1.0}};  // variance only
        double prev = 1e300;
        for (std::uint64_t batch : {1, 4, 16, 64}) {
            const Scenario scn = one_device_scenario(batch);
            const double phi = divergence_bound(scn, 0, stats, 0.1, 3);
            CHECK(phi < prev);
            prev = phi;
        }
    }

    // smoothness must be positive
    {
        const Scenario scn = one_device_scenario(1);
        std::vector<DataStats> stats{{1.0, 1.0, 0.0, 1.0}};
        bool threw = false;
        try {
            divergence_bound(scn, 0, stats, 0.1, 1);
        } catch (const std::invalid_argument&) {
            threw = true;
        }
        CHECK(threw);
    }

    // equal divergence, six gateways, three channels: everyone at 1/2
    {
        const std::vector<double> phi(6, 3.7);
        const std::vector<double> gamma = participation_rates(phi, 3);
        for (double g : gamma) CHECK_CLOSE(g, 0.5, 1e-12);
    }

    // single gateway and channel saturates at 1
    {
        const std::vector<double> gamma = participation_rates({2.5}, 1);
        CHECK(gamma.size() == 1);
        CHECK_CLOSE(gamma[0], 1.0, 1e-12);
    }

    // inverse weighting: phi = (1, 2, 4) with one channel
    {
        const std::vector<double> gamma = participation_rates({1.0, 2.0, 4.0}, 1);
        CHECK_CLOSE(gamma[0], 4.0 / 7.0, 1e-12);
        CHECK_CLOSE(gamma[1], 2.0 / 7.0, 1e-12);
        CHECK_CLOSE(gamma[2], 1.0 / 7.0, 1e-12);
    }

    // scale invariance, ordering, and budget over random draws
    {
        Rng rng(11);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> phi(6);
            for (double& p : phi) p = 0.1 + rng.uniform01() * 5.0;
            const std::vector<double> gamma = participation_rates(phi, 3);
            std::vector<double> scaled = phi;
            for (double& p : scaled) p *= 37.5;
            const std::vector<double> gamma_scaled = participation_rates(scaled, 3);
            bool clipped = false;
            double sum = 0;
            for (std::size_t m = 0; m < phi.size(); ++m) {
                CHECK_CLOSE(gamma[m], gamma_scaled[m], 1e-12);
                clipped = clipped || gamma[m] >= 1.0;
                sum += gamma[m];
                for (std::size_t k = 0; k < phi.size(); ++k) {
                    if (phi[m] < phi[k]) CHECK(gamma[m] >= gamma[k] - 1e-12);
                }
            }
            if (!clipped) CHECK_CLOSE(sum, 3.0, 1e-9);  // rate budget equals the channel count
        }
    }

    // no re-normalization after the cap binds
    {
        const std::vector<double> gamma = participation_rates({0.01, 1.0, 1.0}, 2);
        CHECK_CLOSE(gamma[0], 1.0, 1e-12);
        // remaining entries keep the raw formula value
        const double inv_sum = 1.0 / 0.01 + 1.0 + 1.0;
        CHECK_CLOSE(gamma[1], 2.0 * 1.0 / inv_sum, 1e-12);
        CHECK_CLOSE(gamma[2], 2.0 * 1.0 / inv_sum, 1e-12);
    }

    // degenerate divergence input is rejected
    {
        bool threw = false;
        try {
            participation_rates({1.0, 0.0}, 1);
        } catch (const std::invalid_argument&) {
            threw = true;
        }
        CHECK(threw);
    }

    // plan helper wires the two stages together on the default scenario
    {
        const ScenarioConfig config = ScenarioConfig::paper_default();
        const ParticipationPlan plan = make_participation_plan(
            config.scenario, config.device_stats, config.fl.step_size, config.scenario.local_epochs);
        CHECK(plan.phi.size() == 6);
        CHECK(plan.gamma.size() == 6);
        double sum = 0;
        for (double g : plan.gamma) {
            CHECK(g > 0 && g <= 1.0);
            sum += g;
        }
        CHECK(sum <= 3.0 + 1e-9);
        // lower skew (first floor) earns a higher rate
        CHECK(plan.gamma[0] >= plan.gamma[5]);
    }

    return checks::summary("participation");
}
