#include "ddsra/fl_kernel.hpp"

#include <algorithm>
#include <cmath>

#include "ddsra/config.hpp"
#include "ddsra/participation.hpp"
#include "ddsra/util.hpp"
#include "checks.hpp"

using namespace ddsra;

namespace {

double norm_of(const Vec& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

ScenarioConfig small_fl_config() {
    ScenarioConfig config = ScenarioConfig::paper_default();
    // shrink datasets so full-gradient trajectories stay cheap
    for (DeviceProfile& d : config.scenario.devices) {
        d.local_dataset_size = 60 + 10 * (d.id % 3);
        d.batch_size = 6;
    }
    config.fl.model_dim = 3;
    config.fl.step_size = 0.05;
    return config;
}

}  // namespace

int main() {
    const ScenarioConfig config = small_fl_config();
    const Scenario& scn = config.scenario;
    const SyntheticTask task = SyntheticTask::generate(scn, config.fl, config.device_skew, 99);

    // gradient of the convex family against central differences
    {
        Rng rng(5);
        for (int trial = 0; trial < 20; ++trial) {
            const int n = static_cast<int>(rng.next_u64() % task.device_count());
            Vec w(static_cast<std::size_t>(task.dim()));
            for (double& x : w) x = rng.uniform(-2.0, 2.0);
            const Vec grad = task.local_gradient(n, w);
            for (int c = 0; c < task.dim(); ++c) {
                const double h = 1e-6;
                Vec lo = w, hi = w;
                lo[static_cast<std::size_t>(c)] -= h;
                hi[static_cast<std::size_t>(c)] += h;
                const double fd = (task.local_loss(n, hi) - task.local_loss(n, lo)) / (2 * h);
                CHECK_CLOSE(grad[static_cast<std::size_t>(c)], fd, 1e-5);
            }
        }
    }

    // non-convex family gradient matches finite differences too
    {
        FlParams nc = config.fl;
        nc.family = LossFamily::NonConvex;
        const SyntheticTask bumpy = SyntheticTask::generate(scn, nc, config.device_skew, 99);
        Rng rng(6);
        Vec w(static_cast<std::size_t>(bumpy.dim()));
        for (double& x : w) x = rng.uniform(-1.0, 1.0);
        const Vec grad = bumpy.local_gradient(0, w);
        for (int c = 0; c < bumpy.dim(); ++c) {
            const double h = 1e-6;
            Vec lo = w, hi = w;
            lo[static_cast<std::size_t>(c)] -= h;
            hi[static_cast<std::size_t>(c)] += h;
            const double fd = (bumpy.local_loss(0, hi) - bumpy.local_loss(0, lo)) / (2 * h);
            CHECK_CLOSE(grad[static_cast<std::size_t>(c)], fd, 1e-5);
        }
    }

    // the pooled optimum is a fixed point of the centralized update
    {
        const Vec opt = task.centralized_optimum();
        const Vec grad = task.central_gradient(opt);
        CHECK(norm_of(grad) < 1e-8);
        const Vec stay = local_update(opt, grad, config.fl.step_size);
        for (std::size_t i = 0; i < opt.size(); ++i) CHECK_CLOSE(stay[i], opt[i], 1e-9);
    }

    // one-dimensional step follows the update rule exactly
    {
        ScenarioConfig tiny = small_fl_config();
        tiny.fl.model_dim = 1;
        tiny.fl.label_noise = 0.0;
        const SyntheticTask line = SyntheticTask::generate(tiny.scenario, tiny.fl, tiny.device_skew, 3);
        const Vec w{1.0};
        const Vec grad = line.local_gradient(0, w);
        const Vec next = local_update(w, grad, 0.25);
        CHECK_CLOSE(next[0], 1.0 - 0.25 * grad[0], 1e-12);
        // and the 1-d optimum zeroes the scalar gradient
        const Vec opt = line.centralized_optimum();
        CHECK(std::abs(line.central_gradient(opt)[0]) < 1e-9);
    }

    // aggregation weights
    {
        const std::vector<Vec> identical(static_cast<std::size_t>(task.device_count()),
                                         Vec{1.0, 2.0, 3.0});
        const Vec agg = shop_floor_aggregate(scn, 0, identical);
        CHECK_CLOSE(agg[0], 1.0, 1e-12);
        CHECK_CLOSE(agg[2], 3.0, 1e-12);

        // two devices with batch weights 1:3
        Scenario pair = scn;
        pair.devices.resize(2);
        pair.devices[0].gateway_id = 0;
        pair.devices[1].gateway_id = 0;
        pair.devices[0].batch_size = 5;
        pair.devices[1].batch_size = 15;
        pair.gateways.resize(1);
        pair.channel.channel_count = 1;
        const std::vector<Vec> locals{{0.0}, {4.0}};
        const Vec mix = shop_floor_aggregate(pair, 0, locals);
        CHECK_CLOSE(mix[0], 0.25 * 0.0 + 0.75 * 4.0, 1e-12);

        // single selected gateway: the global model is its shop-floor mean
        std::vector<Vec> shop(static_cast<std::size_t>(scn.gateway_count()), Vec{0.0});
        shop[2] = Vec{7.0};
        std::vector<bool> only(static_cast<std::size_t>(scn.gateway_count()), false);
        only[2] = true;
        const Vec global = global_aggregate(scn, shop, only, Vec{-1.0});
        CHECK_CLOSE(global[0], 7.0, 1e-12);

        // nothing selected: unchanged
        const std::vector<bool> nobody(static_cast<std::size_t>(scn.gateway_count()), false);
        const Vec kept = global_aggregate(scn, shop, nobody, Vec{-1.0});
        CHECK_CLOSE(kept[0], -1.0, 1e-12);

        // weights form an exact affine combination: constants pass through
        Rng rng(23);
        for (int trial = 0; trial < 30; ++trial) {
            const double value = rng.uniform(-5.0, 5.0);
            const std::vector<Vec> constant(static_cast<std::size_t>(task.device_count()),
                                            Vec{value});
            for (int m = 0; m < scn.gateway_count(); ++m) {
                CHECK_CLOSE(shop_floor_aggregate(scn, m, constant)[0], value, 1e-12);
            }
            std::vector<Vec> shop_const(static_cast<std::size_t>(scn.gateway_count()), Vec{value});
            std::vector<bool> some(static_cast<std::size_t>(scn.gateway_count()), false);
            bool any = false;
            for (std::size_t m = 0; m < some.size(); ++m) {
                some[m] = rng.uniform01() < 0.5;
                any = any || some[m];
            }
            if (any) CHECK_CLOSE(global_aggregate(scn, shop_const, some, Vec{0.0})[0], value, 1e-12);
        }
    }

    // trajectories: sync at round start is exact
    {
        FlRunner runner(task, scn, config.fl, 1234);
        const std::vector<bool> everyone(static_cast<std::size_t>(scn.gateway_count()), true);
        for (int t = 0; t < 3; ++t) runner.step(everyone);
        const FlRecords& records = runner.records();
        for (int t = 0; t < records.rounds; ++t) {
            for (int n = 0; n < records.devices; ++n) {
                CHECK(records.full_vs_central[records.dist_index(t, n, 0)] == 0.0);
                CHECK(records.batch_vs_full[records.dist_index(t, n, 0)] == 0.0);
            }
        }
    }

    // drift bounds hold with constants probed from the same runs
    {
        const int seeds = 5, rounds = 30;
        std::vector<FlRunner> runners;
        runners.reserve(seeds);
        ConstantsProbe envelope;
        for (int s = 0; s < seeds; ++s) {
            runners.emplace_back(task, scn, config.fl, 100 + s);
            const std::vector<bool> everyone(static_cast<std::size_t>(scn.gateway_count()), true);
            for (int t = 0; t < rounds; ++t) runners.back().step(everyone);
            envelope = s == 0 ? runners.back().probe()
                              : merge_probes(envelope, runners.back().probe());
        }
        const std::vector<DataStats> stats = estimate_constants(envelope);
        std::vector<const FlRecords*> all_records;
        std::vector<std::uint64_t> batches;
        for (int n = 0; n < task.device_count(); ++n) batches.push_back(task.batch_size(n));
        for (const FlRunner& r : runners) all_records.push_back(&r.records());

        for (const FlRunner& r : runners) {
            const BoundCheckReport full = check_local_drift_bound(r.records(), stats, config.fl.step_size);
            CHECK_MSG(full.violations == 0, "full-gradient bound violated %llu/%llu",
                      static_cast<unsigned long long>(full.violations),
                      static_cast<unsigned long long>(full.checks));
        }
        const BoundCheckReport batch =
            check_batch_drift_bound(all_records, stats, batches, config.fl.step_size);
        CHECK(batch.violations == 0);

        const std::vector<double> phi =
            divergence_bounds(scn, stats, config.fl.step_size, scn.local_epochs);
        const BoundCheckReport shop = check_divergence_bound(all_records, phi, 0.05);
        CHECK_MSG(shop.violations == 0, "divergence bound violated, worst ratio %.3f",
                  shop.worst_ratio);

        // estimated constants include the safety margin over the probes
        for (int n = 0; n < task.device_count(); ++n) {
            CHECK(stats[static_cast<std::size_t>(n)].sigma >=
                  envelope.sigma_scaled[static_cast<std::size_t>(n)]);
            CHECK(stats[static_cast<std::size_t>(n)].smoothness >=
                  envelope.ratio[static_cast<std::size_t>(n)]);
        }

        // convergence report comes out finite and self-consistent
        const std::vector<double> gamma =
            participation_rates(phi, scn.channel.channel_count);
        const ConvergenceReport report = convergence_report(
            task, scn, config.fl, runners.front().records(), stats, gamma, runners.front().global());
        CHECK(std::isfinite(report.convex_lhs));
        CHECK(report.convex_lhs >= -1e-9);
        if (report.convex_valid) CHECK(report.convex_rhs > 0);
    }

    // non-convex family: the measured bound pieces dominate the mean gradient
    {
        FlParams nc = config.fl;
        nc.family = LossFamily::NonConvex;
        nc.nonconvex_weight = 1.0;
        const SyntheticTask bumpy = SyntheticTask::generate(scn, nc, config.device_skew, 17);
        FlRunner runner(bumpy, scn, nc, 555);
        const std::vector<bool> everyone(static_cast<std::size_t>(scn.gateway_count()), true);
        for (int t = 0; t < 25; ++t) runner.step(everyone);
        const std::vector<DataStats> stats = estimate_constants(runner.probe());
        const std::vector<double> phi = divergence_bounds(scn, stats, nc.step_size, scn.local_epochs);
        const std::vector<double> gamma = participation_rates(phi, scn.channel.channel_count);
        const ConvergenceReport report = convergence_report(bumpy, scn, nc, runner.records(), stats,
                                                            gamma, runner.global());
        CHECK(std::isfinite(report.nonconvex_lhs));
        CHECK(std::isfinite(report.nonconvex_rhs));
        CHECK_MSG(report.nonconvex_lhs <= report.nonconvex_rhs,
                  "nonconvex report: lhs %.4g rhs %.4g", report.nonconvex_lhs, report.nonconvex_rhs);
    }

    // batch sampling: right size, no duplicates, deterministic per seed
    {
        for (int n = 0; n < task.device_count(); ++n) {
            const auto batch = task.sample_batch(n, 42);
            CHECK(batch.size() == task.batch_size(n));
            auto sorted = batch;
            std::sort(sorted.begin(), sorted.end());
            CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
            CHECK(sorted.back() < task.samples(n));
            CHECK(task.sample_batch(n, 42) == batch);
        }
    }

    // weighted selection favors the heavy gateway; a rate-weighted schedule
    // beats uniform on a skewed task at the same per-round budget
    {
        Rng rng(8);
        std::vector<double> gamma{1.0, 0.4, 0.3, 0.3, 0.25, 0.25};
        std::vector<int> hits(6, 0);
        for (int t = 0; t < 4000; ++t) {
            const std::vector<bool> sel = select_weighted(gamma, 3, rng);
            int count = 0;
            for (int m = 0; m < 6; ++m) {
                if (sel[static_cast<std::size_t>(m)]) {
                    ++hits[static_cast<std::size_t>(m)];
                    ++count;
                }
            }
            CHECK(count == 3);
        }
        CHECK(hits[0] > hits[5]);

        // strong-contrast task: erratic high-skew floors, rate-weighted
        // scheduling keeps them out of the average
        ScenarioConfig skew_config = small_fl_config();
        for (DeviceProfile& d : skew_config.scenario.devices) {
            d.local_dataset_size = 240 - 30 * (d.id / 2);
            d.batch_size = std::max<std::uint64_t>(4, d.local_dataset_size / 12);
        }
        skew_config.fl.step_size = 0.1;
        skew_config.fl.label_noise = 0.4;
        for (int n = 0; n < 12; ++n) {
            skew_config.device_skew[static_cast<std::size_t>(n)] = 0.1 + 3.9 * (n / 2) / 5.0;
        }
        const Scenario& skew_scn = skew_config.scenario;
        int wins = 0;
        const int trials = 7;
        for (int s = 0; s < trials; ++s) {
            const SyntheticTask skewed =
                SyntheticTask::generate(skew_scn, skew_config.fl, skew_config.device_skew, 700 + s);
            FlRunner probe_run(skewed, skew_scn, skew_config.fl, 900 + s);
            const std::vector<bool> everyone(static_cast<std::size_t>(skew_scn.gateway_count()), true);
            for (int t = 0; t < 60; ++t) probe_run.step(everyone);
            const std::vector<DataStats> stats = estimate_constants(probe_run.probe());
            const std::vector<double> phi =
                divergence_bounds(skew_scn, stats, skew_config.fl.step_size, skew_scn.local_epochs);
            const std::vector<double> rates = participation_rates(phi, skew_scn.channel.channel_count);
            const double weighted =
                run_selection_fl(skewed, skew_scn, skew_config.fl, SelectionRule::GammaWeighted,
                                 rates, 150, 70 + s);
            const double uniform = run_selection_fl(skewed, skew_scn, skew_config.fl,
                                                    SelectionRule::Uniform, rates, 150, 70 + s);
            if (weighted <= uniform) ++wins;
        }
        CHECK_MSG(wins * 2 > trials, "weighted schedule won only %d/%d", wins, trials);
    }

    return checks::summary("fl_kernel");
}
