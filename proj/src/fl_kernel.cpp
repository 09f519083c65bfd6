#include "ddsra/fl_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ddsra/util.hpp"

namespace ddsra {

namespace {

double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

Vec sub(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

void axpy(Vec& y, double c, const Vec& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += c * x[i];
}

}  // namespace

SyntheticTask SyntheticTask::generate(const Scenario& scenario, const FlParams& params,
                                      const std::vector<double>& device_skew, std::uint64_t seed) {
    SyntheticTask task;
    task.dim_ = params.model_dim;
    task.family_ = params.family;
    task.nonconvex_weight_ = params.nonconvex_weight;
    const int d = params.model_dim;

    Vec base(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        base[static_cast<std::size_t>(i)] = (i % 2 == 0 ? 1.0 : -1.0) * (1.0 + 0.25 * i);
    }

    task.dataset_.resize(scenario.devices.size());
    task.batch_size_.resize(scenario.devices.size());
    for (std::size_t n = 0; n < scenario.devices.size(); ++n) {
        const DeviceProfile& dev = scenario.devices[n];
        const double skew = n < device_skew.size() ? device_skew[n] : 0.0;
        Rng rng(mix_seed(seed, 0xda7a0000ULL + n));

        // Every device samples the same regression target; skew degrades how
        // representative the samples are: the feature cloud flattens along a
        // device-specific direction and the labels pick up extra noise, so
        // skewed devices fit erratic local models.
        Vec flat_dir(static_cast<std::size_t>(d), 0.0);
        double dir_norm = 0;
        for (int i = 0; i < d; ++i) {
            flat_dir[static_cast<std::size_t>(i)] = rng.gaussian();
            dir_norm += flat_dir[static_cast<std::size_t>(i)] * flat_dir[static_cast<std::size_t>(i)];
        }
        dir_norm = std::sqrt(std::max(dir_norm, 1e-12));
        for (double& v : flat_dir) v /= dir_norm;
        const double shrink = 1.0 / (1.0 + 2.0 * skew);
        const double noise = params.label_noise * (1.0 + 2.0 * skew);

        DeviceData& data = task.dataset_[n];
        data.count = dev.local_dataset_size;
        data.x.resize(static_cast<std::size_t>(data.count) * d);
        data.y.resize(static_cast<std::size_t>(data.count));
        Vec sample(static_cast<std::size_t>(d));
        for (std::uint64_t i = 0; i < data.count; ++i) {
            double along = 0;
            for (int c = 0; c < d; ++c) {
                sample[static_cast<std::size_t>(c)] = rng.gaussian();
                along += sample[static_cast<std::size_t>(c)] * flat_dir[static_cast<std::size_t>(c)];
            }
            double yi = 0;
            for (int c = 0; c < d; ++c) {
                const double xv = sample[static_cast<std::size_t>(c)] -
                                  (1.0 - shrink) * along * flat_dir[static_cast<std::size_t>(c)];
                data.x[static_cast<std::size_t>(i) * d + c] = xv;
                yi += xv * base[static_cast<std::size_t>(c)];
            }
            data.y[static_cast<std::size_t>(i)] = yi + noise * rng.gaussian();
        }
        task.batch_size_[n] = dev.batch_size;
        if (task.batch_size_[n] == 0 || task.batch_size_[n] > data.count) {
            throw std::runtime_error("synthetic task: device batch size out of range");
        }
        task.total_samples_ += data.count;
    }
    return task;
}

double SyntheticTask::sample_residual(int n, std::uint32_t i, const Vec& w) const {
    const DeviceData& data = dataset_[static_cast<std::size_t>(n)];
    double r = -data.y[i];
    const double* row = &data.x[static_cast<std::size_t>(i) * dim_];
    for (int c = 0; c < dim_; ++c) r += row[c] * w[static_cast<std::size_t>(c)];
    return r;
}

double SyntheticTask::local_loss(int n, const Vec& w) const {
    const DeviceData& data = dataset_[static_cast<std::size_t>(n)];
    double loss = 0;
    for (std::uint32_t i = 0; i < data.count; ++i) {
        const double r = sample_residual(n, i, w);
        loss += 0.5 * r * r;
        if (family_ == LossFamily::NonConvex) {
            const double s = std::sin(r);
            loss += nonconvex_weight_ * s * s;
        }
    }
    return loss / static_cast<double>(data.count);
}

double SyntheticTask::central_loss(const Vec& w) const {
    double loss = 0;
    for (int n = 0; n < device_count(); ++n) {
        loss += static_cast<double>(samples(n)) * local_loss(n, w);
    }
    return loss / static_cast<double>(total_samples_);
}

double SyntheticTask::batch_loss(int n, const Vec& w, const std::vector<std::uint32_t>& batch) const {
    double loss = 0;
    for (std::uint32_t i : batch) {
        const double r = sample_residual(n, i, w);
        loss += 0.5 * r * r;
        if (family_ == LossFamily::NonConvex) {
            const double s = std::sin(r);
            loss += nonconvex_weight_ * s * s;
        }
    }
    return loss / static_cast<double>(batch.size());
}

Vec SyntheticTask::local_gradient(int n, const Vec& w) const {
    const DeviceData& data = dataset_[static_cast<std::size_t>(n)];
    Vec grad(static_cast<std::size_t>(dim_), 0.0);
    for (std::uint32_t i = 0; i < data.count; ++i) {
        double r = sample_residual(n, i, w);
        if (family_ == LossFamily::NonConvex) {
            r += nonconvex_weight_ * std::sin(2.0 * r);
        }
        const double* row = &data.x[static_cast<std::size_t>(i) * dim_];
        for (int c = 0; c < dim_; ++c) grad[static_cast<std::size_t>(c)] += r * row[c];
    }
    const double inv = 1.0 / static_cast<double>(data.count);
    for (double& g : grad) g *= inv;
    return grad;
}

Vec SyntheticTask::batch_gradient(int n, const Vec& w, const std::vector<std::uint32_t>& batch) const {
    Vec grad(static_cast<std::size_t>(dim_), 0.0);
    const DeviceData& data = dataset_[static_cast<std::size_t>(n)];
    for (std::uint32_t i : batch) {
        double r = sample_residual(n, i, w);
        if (family_ == LossFamily::NonConvex) {
            r += nonconvex_weight_ * std::sin(2.0 * r);
        }
        const double* row = &data.x[static_cast<std::size_t>(i) * dim_];
        for (int c = 0; c < dim_; ++c) grad[static_cast<std::size_t>(c)] += r * row[c];
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) g *= inv;
    return grad;
}

Vec SyntheticTask::central_gradient(const Vec& w) const {
    Vec grad(static_cast<std::size_t>(dim_), 0.0);
    for (int n = 0; n < device_count(); ++n) {
        const Vec local = local_gradient(n, w);
        axpy(grad, static_cast<double>(samples(n)) / static_cast<double>(total_samples_), local);
    }
    return grad;
}

std::vector<std::uint32_t> SyntheticTask::sample_batch(int n, std::uint64_t seed) const {
    const std::uint64_t count = samples(n);
    const std::uint64_t want = batch_size_[static_cast<std::size_t>(n)];
    std::vector<std::uint32_t> index(count);
    std::iota(index.begin(), index.end(), 0u);
    Rng rng(mix_seed(seed, 0xba7c0000ULL + static_cast<std::uint64_t>(n)));
    for (std::uint64_t i = 0; i < want; ++i) {
        const std::uint64_t pick = i + rng.next_u64() % (count - i);
        std::swap(index[i], index[pick]);
    }
    index.resize(want);
    return index;
}

double SyntheticTask::smoothness(int n) const {
    const DeviceData& data = dataset_[static_cast<std::size_t>(n)];
    // power iteration on X^T X / count
    Vec v(static_cast<std::size_t>(dim_), 1.0 / std::sqrt(static_cast<double>(dim_)));
    double eig = 0;
    for (int iter = 0; iter < 120; ++iter) {
        Vec u(static_cast<std::size_t>(dim_), 0.0);
        for (std::uint32_t i = 0; i < data.count; ++i) {
            const double* row = &data.x[static_cast<std::size_t>(i) * dim_];
            double p = 0;
            for (int c = 0; c < dim_; ++c) p += row[c] * v[static_cast<std::size_t>(c)];
            for (int c = 0; c < dim_; ++c) u[static_cast<std::size_t>(c)] += p * row[c];
        }
        for (double& x : u) x /= static_cast<double>(data.count);
        eig = norm(u);
        if (eig == 0) break;
        for (double& x : u) x /= eig;
        v = std::move(u);
    }
    const double curvature = family_ == LossFamily::NonConvex ? 1.0 + 2.0 * nonconvex_weight_ : 1.0;
    return curvature * eig;
}

Vec SyntheticTask::centralized_optimum() const {
    // pooled normal equations, solved by Cholesky (dim is small)
    const int d = dim_;
    std::vector<double> a(static_cast<std::size_t>(d) * d, 0.0);
    Vec b(static_cast<std::size_t>(d), 0.0);
    for (const DeviceData& data : dataset_) {
        for (std::uint32_t i = 0; i < data.count; ++i) {
            const double* row = &data.x[static_cast<std::size_t>(i) * d];
            for (int r = 0; r < d; ++r) {
                for (int c = 0; c < d; ++c) {
                    a[static_cast<std::size_t>(r) * d + c] += row[r] * row[c];
                }
                b[static_cast<std::size_t>(r)] += row[r] * data.y[i];
            }
        }
    }
    // lower-triangular factor in place
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c <= r; ++c) {
            double s = a[static_cast<std::size_t>(r) * d + c];
            for (int k = 0; k < c; ++k) {
                s -= a[static_cast<std::size_t>(r) * d + k] * a[static_cast<std::size_t>(c) * d + k];
            }
            if (r == c) {
                a[static_cast<std::size_t>(r) * d + c] = std::sqrt(std::max(s, 1e-12));
            } else {
                a[static_cast<std::size_t>(r) * d + c] = s / a[static_cast<std::size_t>(c) * d + c];
            }
        }
    }
    Vec y(static_cast<std::size_t>(d));
    for (int r = 0; r < d; ++r) {
        double s = b[static_cast<std::size_t>(r)];
        for (int k = 0; k < r; ++k) s -= a[static_cast<std::size_t>(r) * d + k] * y[static_cast<std::size_t>(k)];
        y[static_cast<std::size_t>(r)] = s / a[static_cast<std::size_t>(r) * d + r];
    }
    Vec w(static_cast<std::size_t>(d));
    for (int r = d - 1; r >= 0; --r) {
        double s = y[static_cast<std::size_t>(r)];
        for (int k = r + 1; k < d; ++k) s -= a[static_cast<std::size_t>(k) * d + r] * w[static_cast<std::size_t>(k)];
        w[static_cast<std::size_t>(r)] = s / a[static_cast<std::size_t>(r) * d + r];
    }
    return w;
}

std::vector<DataStats> estimate_constants(const ConstantsProbe& probe, double margin) {
    std::vector<DataStats> stats(probe.sigma_scaled.size());
    for (std::size_t n = 0; n < stats.size(); ++n) {
        stats[n].sigma = probe.sigma_scaled[n] * margin;
        stats[n].delta = probe.delta[n] * margin;
        stats[n].smoothness = std::max(probe.ratio[n] * margin, 1e-9);
        stats[n].lipschitz = probe.grad_norm[n] * margin;
    }
    return stats;
}

ConstantsProbe merge_probes(const ConstantsProbe& a, const ConstantsProbe& b) {
    auto max_of = [](const std::vector<double>& x, const std::vector<double>& y) {
        std::vector<double> r(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) r[i] = std::max(x[i], y[i]);
        return r;
    };
    ConstantsProbe merged;
    merged.sigma_scaled = max_of(a.sigma_scaled, b.sigma_scaled);
    merged.delta = max_of(a.delta, b.delta);
    merged.ratio = max_of(a.ratio, b.ratio);
    merged.grad_norm = max_of(a.grad_norm, b.grad_norm);
    return merged;
}

Vec local_update(const Vec& w, const Vec& gradient, double beta) {
    Vec next = w;
    axpy(next, -beta, gradient);
    return next;
}

Vec shop_floor_aggregate(const Scenario& scenario, int m, const std::vector<Vec>& local_models) {
    const auto by_gateway = scenario.device_index();
    const std::vector<int>& assoc = by_gateway[static_cast<std::size_t>(m)];
    double weight_sum = 0;
    Vec agg(local_models[0].size(), 0.0);
    for (int n : assoc) {
        const double w = static_cast<double>(scenario.devices[static_cast<std::size_t>(n)].batch_size);
        weight_sum += w;
        axpy(agg, w, local_models[static_cast<std::size_t>(n)]);
    }
    for (double& v : agg) v /= weight_sum;
    return agg;
}

Vec global_aggregate(const Scenario& scenario, const std::vector<Vec>& shop_floor,
                     const std::vector<bool>& selected, const Vec& current) {
    const auto by_gateway = scenario.device_index();
    double weight_sum = 0;
    Vec agg(current.size(), 0.0);
    for (int m = 0; m < scenario.gateway_count(); ++m) {
        if (!selected[static_cast<std::size_t>(m)]) continue;
        double dm = 0;
        for (int n : by_gateway[static_cast<std::size_t>(m)]) {
            dm += static_cast<double>(scenario.devices[static_cast<std::size_t>(n)].batch_size);
        }
        weight_sum += dm;
        axpy(agg, dm, shop_floor[static_cast<std::size_t>(m)]);
    }
    if (weight_sum == 0) return current;
    for (double& v : agg) v /= weight_sum;
    return agg;
}

FlRunner::FlRunner(const SyntheticTask& task, const Scenario& scenario, const FlParams& params,
                   std::uint64_t seed)
    : task_(&task), scenario_(&scenario), params_(params), seed_(seed) {
    global_.assign(static_cast<std::size_t>(task.dim()), 0.0);
    records_.epochs = scenario.local_epochs;
    records_.devices = task.device_count();
    records_.gateways = scenario.gateway_count();
    by_gateway_ = scenario.device_index();
    const std::size_t n = static_cast<std::size_t>(task.device_count());
    probe_.sigma_scaled.assign(n, 0.0);
    probe_.delta.assign(n, 0.0);
    probe_.ratio.assign(n, 0.0);
    probe_.grad_norm.assign(n, 0.0);
}

FlRoundOutcome FlRunner::step(const std::vector<bool>& selected_gateways, bool apply_update) {
    const SyntheticTask& task = *task_;
    const int devices = task.device_count();
    const int k_steps = scenario_->local_epochs;
    const int t = round_;

    FlRoundOutcome outcome;
    outcome.device_loss.resize(static_cast<std::size_t>(devices));
    outcome.gateway_loss.resize(static_cast<std::size_t>(records_.gateways));
    outcome.shop_divergence.resize(static_cast<std::size_t>(records_.gateways));

    if (!params_.track_bounds) {
        // fast path: only the batch trajectory actually trains; the reference
        // trajectories exist for bound validation and are skipped here
        std::vector<Vec> batch_model(static_cast<std::size_t>(devices), global_);
        for (int n = 0; n < devices; ++n) {
            const auto batch =
                task.sample_batch(n, mix_seed(seed_, static_cast<std::uint64_t>(t) * 0x10001ULL + n));
            Vec& bw = batch_model[static_cast<std::size_t>(n)];
            for (int k = 0; k < k_steps; ++k) {
                bw = local_update(bw, task.batch_gradient(n, bw, batch), params_.step_size);
            }
            outcome.device_loss[static_cast<std::size_t>(n)] = task.local_loss(n, bw);
        }
        for (int m = 0; m < records_.gateways; ++m) {
            double weight_sum = 0, loss = 0;
            for (int n : by_gateway_[static_cast<std::size_t>(m)]) {
                const double w = static_cast<double>(task.batch_size(n));
                weight_sum += w;
                loss += w * outcome.device_loss[static_cast<std::size_t>(n)];
            }
            outcome.gateway_loss[static_cast<std::size_t>(m)] = loss / weight_sum;
        }
        outcome.global_loss = task.central_loss(global_);
        records_.global_loss.push_back(outcome.global_loss);
        if (apply_update) {
            bool any = false;
            for (bool s : selected_gateways) any = any || s;
            if (any) {
                std::vector<Vec> shop(static_cast<std::size_t>(records_.gateways));
                for (int m = 0; m < records_.gateways; ++m) {
                    shop[static_cast<std::size_t>(m)] = shop_floor_aggregate(*scenario_, m, batch_model);
                }
                global_ = global_aggregate(*scenario_, shop, selected_gateways, global_);
                outcome.updated = true;
            }
        }
        ++round_;
        return outcome;
    }

    records_.rounds = t + 1;
    records_.full_vs_central.resize(static_cast<std::size_t>(records_.rounds) * devices * (k_steps + 1));
    records_.batch_vs_full.resize(records_.full_vs_central.size());
    records_.shop_divergence.resize(static_cast<std::size_t>(records_.rounds) * records_.gateways);
    records_.batch_grad_norm_sq.resize(static_cast<std::size_t>(records_.rounds) * devices * k_steps);

    const Vec start = global_;
    records_.global_loss.push_back(task.central_loss(start));
    {
        const Vec g0 = task.central_gradient(start);
        records_.global_grad_norm_sq.push_back(dot(g0, g0));
    }

    // the three trajectories share the synchronization point
    Vec central = start;
    std::vector<Vec> batch_model(static_cast<std::size_t>(devices), start);
    std::vector<Vec> full_model(static_cast<std::size_t>(devices), start);
    std::vector<std::vector<std::uint32_t>> batches(static_cast<std::size_t>(devices));
    for (int n = 0; n < devices; ++n) {
        batches[static_cast<std::size_t>(n)] =
            task.sample_batch(n, mix_seed(seed_, static_cast<std::uint64_t>(t) * 0x10001ULL + n));
    }

    const double data_total = [&] {
        double s = 0;
        for (int n = 0; n < devices; ++n) s += static_cast<double>(task.samples(n));
        return s;
    }();

    for (int k = 0; k <= k_steps; ++k) {
        // every local full gradient at the centralized point, pooled into the
        // centralized gradient
        std::vector<Vec> local_at_central(static_cast<std::size_t>(devices));
        Vec central_grad(static_cast<std::size_t>(task.dim()), 0.0);
        for (int n = 0; n < devices; ++n) {
            local_at_central[static_cast<std::size_t>(n)] = task.local_gradient(n, central);
            axpy(central_grad, static_cast<double>(task.samples(n)) / data_total,
                 local_at_central[static_cast<std::size_t>(n)]);
        }

        for (int n = 0; n < devices; ++n) {
            Vec& bw = batch_model[static_cast<std::size_t>(n)];
            Vec& fw = full_model[static_cast<std::size_t>(n)];

            const double dist_fc = norm(sub(fw, central));
            const double dist_bf = norm(sub(bw, fw));
            records_.full_vs_central[records_.dist_index(t, n, k)] = dist_fc;
            records_.batch_vs_full[records_.dist_index(t, n, k)] = dist_bf;

            probe_.delta[static_cast<std::size_t>(n)] =
                std::max(probe_.delta[static_cast<std::size_t>(n)],
                         norm(sub(local_at_central[static_cast<std::size_t>(n)], central_grad)));

            const Vec local_at_full = task.local_gradient(n, fw);
            probe_.grad_norm[static_cast<std::size_t>(n)] =
                std::max(probe_.grad_norm[static_cast<std::size_t>(n)], norm(local_at_full));
            if (dist_fc > 1e-12) {
                probe_.ratio[static_cast<std::size_t>(n)] =
                    std::max(probe_.ratio[static_cast<std::size_t>(n)],
                             norm(sub(local_at_full, local_at_central[static_cast<std::size_t>(n)])) / dist_fc);
            }

            if (k == k_steps) continue;

            const Vec local_at_batch = task.local_gradient(n, bw);
            const Vec batch_grad = task.batch_gradient(n, bw, batches[static_cast<std::size_t>(n)]);
            records_.batch_grad_norm_sq[records_.grad_index(t, n, k)] =
                dot(local_at_batch, local_at_batch);
            probe_.sigma_scaled[static_cast<std::size_t>(n)] =
                std::max(probe_.sigma_scaled[static_cast<std::size_t>(n)],
                         std::sqrt(static_cast<double>(task.batch_size(n))) *
                             norm(sub(batch_grad, local_at_batch)));
            if (dist_bf > 1e-12) {
                probe_.ratio[static_cast<std::size_t>(n)] =
                    std::max(probe_.ratio[static_cast<std::size_t>(n)],
                             norm(sub(local_at_batch, local_at_full)) / dist_bf);
            }

            bw = local_update(bw, batch_grad, params_.step_size);
            fw = local_update(fw, local_at_full, params_.step_size);
        }
        if (k < k_steps) {
            central = local_update(central, central_grad, params_.step_size);
        }
    }

    records_.central_loss_end.push_back(task.central_loss(central));
    if (task.family() == LossFamily::LeastSquares) {
        if (cached_optimum_.empty()) cached_optimum_ = task.centralized_optimum();
        records_.central_dist_opt.push_back(norm(sub(central, cached_optimum_)));
    }

    std::vector<Vec> shop(static_cast<std::size_t>(records_.gateways));
    for (int m = 0; m < records_.gateways; ++m) {
        shop[static_cast<std::size_t>(m)] = shop_floor_aggregate(*scenario_, m, batch_model);
        const double div = norm(sub(shop[static_cast<std::size_t>(m)], central));
        records_.shop_divergence[static_cast<std::size_t>(t) * records_.gateways + m] = div;
        outcome.shop_divergence[static_cast<std::size_t>(m)] = div;
    }

    for (int n = 0; n < devices; ++n) {
        outcome.device_loss[static_cast<std::size_t>(n)] =
            task.local_loss(n, batch_model[static_cast<std::size_t>(n)]);
    }
    for (int m = 0; m < records_.gateways; ++m) {
        double weight_sum = 0, loss = 0;
        for (int n : by_gateway_[static_cast<std::size_t>(m)]) {
            const double w = static_cast<double>(task.batch_size(n));
            weight_sum += w;
            loss += w * outcome.device_loss[static_cast<std::size_t>(n)];
        }
        outcome.gateway_loss[static_cast<std::size_t>(m)] = loss / weight_sum;
    }

    outcome.global_loss = records_.global_loss.back();
    if (apply_update) {
        bool any = false;
        for (bool s : selected_gateways) any = any || s;
        if (any) {
            global_ = global_aggregate(*scenario_, shop, selected_gateways, global_);
            outcome.updated = true;
        }
    }
    ++round_;
    return outcome;
}

namespace {

double growth(double beta, double smoothness, int k) {
    return std::pow(beta * smoothness + 1.0, k) - 1.0;
}

}  // namespace

BoundCheckReport check_local_drift_bound(const FlRecords& records, const std::vector<DataStats>& stats,
                                   double beta) {
    BoundCheckReport report;
    for (int t = 0; t < records.rounds; ++t) {
        for (int n = 0; n < records.devices; ++n) {
            const DataStats& s = stats[static_cast<std::size_t>(n)];
            for (int k = 0; k <= records.epochs; ++k) {
                const double bound = s.delta / s.smoothness * growth(beta, s.smoothness, k);
                const double value = records.full_vs_central[records.dist_index(t, n, k)];
                ++report.checks;
                if (value > bound + 1e-12) ++report.violations;
                if (bound > 0) report.worst_ratio = std::max(report.worst_ratio, value / bound);
            }
        }
    }
    return report;
}

BoundCheckReport check_batch_drift_bound(const std::vector<const FlRecords*>& runs,
                                    const std::vector<DataStats>& stats,
                                    const std::vector<std::uint64_t>& batch_sizes, double beta) {
    BoundCheckReport report;
    const FlRecords& first = *runs.front();
    for (int t = 0; t < first.rounds; ++t) {
        for (int n = 0; n < first.devices; ++n) {
            const DataStats& s = stats[static_cast<std::size_t>(n)];
            const double scale = s.sigma / (s.smoothness * std::sqrt(static_cast<double>(
                                                               batch_sizes[static_cast<std::size_t>(n)])));
            for (int k = 0; k <= first.epochs; ++k) {
                double mean = 0;
                for (const FlRecords* r : runs) mean += r->batch_vs_full[r->dist_index(t, n, k)];
                mean /= static_cast<double>(runs.size());
                const double bound = scale * growth(beta, s.smoothness, k);
                ++report.checks;
                if (mean > bound + 1e-12) ++report.violations;
                if (bound > 0) report.worst_ratio = std::max(report.worst_ratio, mean / bound);
            }
        }
    }
    return report;
}

BoundCheckReport check_divergence_bound(const std::vector<const FlRecords*>& runs,
                                const std::vector<double>& phi, double slack) {
    BoundCheckReport report;
    const FlRecords& first = *runs.front();
    for (int t = 0; t < first.rounds; ++t) {
        for (int m = 0; m < first.gateways; ++m) {
            double mean = 0;
            for (const FlRecords* r : runs) {
                mean += r->shop_divergence[static_cast<std::size_t>(t) * first.gateways + m];
            }
            mean /= static_cast<double>(runs.size());
            const double bound = phi[static_cast<std::size_t>(m)] * (1.0 + slack);
            ++report.checks;
            if (mean > bound + 1e-12) ++report.violations;
            if (bound > 0) report.worst_ratio = std::max(report.worst_ratio, mean / bound);
        }
    }
    return report;
}

bool ConvergenceReport::holds() const {
    if (convex_valid) return convex_lhs <= convex_rhs;
    return nonconvex_lhs <= nonconvex_rhs;
}

ConvergenceReport convergence_report(const SyntheticTask& task, const Scenario& scenario,
                                     const FlParams& params, const FlRecords& records,
                                     const std::vector<DataStats>& stats,
                                     const std::vector<double>& gamma, const Vec& final_global) {
    ConvergenceReport report;
    const int devices = task.device_count();
    const int rounds = records.rounds;
    const int k_steps = records.epochs;
    const double beta = params.step_size;

    // participation-weighted aggregation share of each device
    std::vector<double> xi(static_cast<std::size_t>(devices), 0.0);
    {
        double total = 0;
        for (int n = 0; n < devices; ++n) {
            const int m = scenario.devices[static_cast<std::size_t>(n)].gateway_id;
            xi[static_cast<std::size_t>(n)] = gamma[static_cast<std::size_t>(m)] *
                                              static_cast<double>(task.batch_size(n));
            total += xi[static_cast<std::size_t>(n)];
        }
        for (double& v : xi) v /= total;
    }

    double smooth_max = 0, lip_max = 0, delta_max = 0;
    for (int n = 0; n < devices; ++n) {
        smooth_max = std::max(smooth_max, stats[static_cast<std::size_t>(n)].smoothness);
        lip_max = std::max(lip_max, stats[static_cast<std::size_t>(n)].lipschitz);
        delta_max = std::max(delta_max, stats[static_cast<std::size_t>(n)].delta);
    }

    if (task.family() == LossFamily::LeastSquares && !records.central_dist_opt.empty()) {
        const Vec opt = task.centralized_optimum();
        const double f_opt = task.central_loss(opt);
        report.convex_lhs = task.central_loss(final_global) - f_opt;

        double worst_dist = 0, eps = kInfinity;
        for (int t = 0; t < rounds; ++t) {
            worst_dist = std::max(worst_dist, records.central_dist_opt[static_cast<std::size_t>(t)]);
            eps = std::min(eps, records.central_loss_end[static_cast<std::size_t>(t)] - f_opt);
        }
        report.omega = worst_dist > 0 ? 1.0 / (worst_dist * worst_dist) : 0.0;
        report.epsilon = eps;
        report.phi_coef = report.omega * (1.0 - beta * smooth_max / 2.0);

        double sigma_term = delta_max;
        double mismatch_term = delta_max;
        const double total_data = [&] {
            double s = 0;
            for (int n = 0; n < devices; ++n) s += static_cast<double>(task.samples(n));
            return s;
        }();
        for (int n = 0; n < devices; ++n) {
            sigma_term += xi[static_cast<std::size_t>(n)] * stats[static_cast<std::size_t>(n)].sigma /
                          std::sqrt(static_cast<double>(task.batch_size(n)));
            mismatch_term += std::abs(xi[static_cast<std::size_t>(n)] -
                                      static_cast<double>(task.samples(n)) / total_data) *
                             stats[static_cast<std::size_t>(n)].lipschitz;
        }
        const double correction =
            (lip_max * sigma_term * growth(beta, smooth_max, k_steps) + beta * mismatch_term) /
            std::max(report.epsilon * report.epsilon * k_steps * smooth_max, 1e-300);
        const double denom = beta * report.phi_coef - correction;
        report.convex_valid = denom > 0;
        report.convex_rhs = report.convex_valid ? 1.0 / (rounds * denom) : kInfinity;
    }

    // non-convex bound pieces, all measured along the batch trajectory
    {
        double lhs = 0;
        for (double g : records.global_grad_norm_sq) lhs += g;
        lhs /= std::max(rounds, 1);
        report.nonconvex_lhs = lhs;

        const double f0 = records.global_loss.empty() ? 0.0 : records.global_loss.front();
        const double f_end = task.central_loss(final_global);
        double term1 = 2.0 / (k_steps * beta * rounds) * (f0 - f_end);

        double term2 = 0, term3 = 0;
        for (int t = 0; t < rounds; ++t) {
            for (int n = 0; n < devices; ++n) {
                const double x2 = xi[static_cast<std::size_t>(n)] * xi[static_cast<std::size_t>(n)];
                const double ln = stats[static_cast<std::size_t>(n)].smoothness;
                for (int k = 0; k < k_steps; ++k) {
                    const double g2 = records.batch_grad_norm_sq[records.grad_index(t, n, k)];
                    term2 += x2 * g2;
                    double inner = 0;
                    for (int jj = 0; jj < k; ++jj) {
                        inner += records.batch_grad_norm_sq[records.grad_index(t, n, jj)];
                    }
                    term3 += x2 * ln * ln * k * inner;
                }
            }
        }
        term2 *= smooth_max * beta * devices / rounds;
        term3 *= devices * beta * beta / (k_steps * rounds) * beta * beta;
        report.nonconvex_rhs = term1 + term2 + term3;
    }
    return report;
}

std::vector<bool> select_uniform(int gateways, int channels, Rng& rng) {
    std::vector<int> order(static_cast<std::size_t>(gateways));
    std::iota(order.begin(), order.end(), 0);
    for (int i = 0; i < channels; ++i) {
        const int pick = i + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(gateways - i));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick)]);
    }
    std::vector<bool> selected(static_cast<std::size_t>(gateways), false);
    for (int i = 0; i < channels; ++i) selected[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;
    return selected;
}

std::vector<bool> select_weighted(const std::vector<double>& gamma, int channels, Rng& rng) {
    // weighted sampling without replacement via exponential keys
    std::vector<std::pair<double, int>> keyed(gamma.size());
    for (std::size_t m = 0; m < gamma.size(); ++m) {
        const double u = std::max(rng.uniform01(), 1e-300);
        keyed[m] = {std::pow(u, 1.0 / std::max(gamma[m], 1e-12)), static_cast<int>(m)};
    }
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<bool> selected(gamma.size(), false);
    for (int i = 0; i < channels && i < static_cast<int>(keyed.size()); ++i) {
        selected[static_cast<std::size_t>(keyed[static_cast<std::size_t>(i)].second)] = true;
    }
    return selected;
}

double run_selection_fl(const SyntheticTask& task, const Scenario& scenario, const FlParams& params,
                        SelectionRule rule, const std::vector<double>& gamma, int rounds,
                        std::uint64_t seed) {
    FlRunner runner(task, scenario, params, mix_seed(seed, 0xf1));
    Rng rng(mix_seed(seed, 0x5e1ec7));
    const int channels = scenario.channel.channel_count;
    for (int t = 0; t < rounds; ++t) {
        const std::vector<bool> selected = rule == SelectionRule::Uniform
                                               ? select_uniform(scenario.gateway_count(), channels, rng)
                                               : select_weighted(gamma, channels, rng);
        runner.step(selected);
    }
    return task.central_loss(runner.global());
}

}  // namespace ddsra
