#pragma once

#include "irlang/integrators.hpp"
#include "irlang/observables.hpp"
#include "irlang/parallel.hpp"
#include "irlang/rng.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace irlang {

struct SamplingConfig {
    double T_total = 2000.0;
    double T_burn = 20.0;
    int n_batches = 20;
    int n_replicates = 2000;
    std::string observable = "x+y^2";

    void validate() const {
        if (!(T_burn < T_total)) throw ConfigError("sampling: T_burn must be < T_total");
        if (n_batches < 2) throw ConfigError("sampling: n_batches must be >= 2");
        if (n_replicates < 0) throw ConfigError("sampling: n_replicates must be >= 0");
    }
};

// Per-replicate outcome. avar_f is the sample variance of the batch means at
// the protocol's batch duration -- the convention the result tables use.
// Multiply by the batch duration (see batch_means_avar) to get the
// time-scaled asymptotic variance of the estimator.
struct RunStats {
    double time_average = 0.0;
    double err_f = 0.0;
    double avar_f = 0.0;
    bool diverged = false;
};

namespace detail {
inline double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double sample_variance(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double mu = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return s / static_cast<double>(v.size() - 1);
}

inline std::vector<double> batch_means(std::span<const double> samples, int n_batches) {
    const std::size_t m = samples.size() / static_cast<std::size_t>(n_batches);
    std::vector<double> means(static_cast<std::size_t>(n_batches));
    for (int b = 0; b < n_batches; ++b) {
        double s = 0.0;
        const std::size_t off = static_cast<std::size_t>(b) * m;
        for (std::size_t k = 0; k < m; ++k) s += samples[off + k];
        means[static_cast<std::size_t>(b)] = s / static_cast<double>(m);
    }
    return means;
}
}  // namespace detail

// Variance of the consecutive-batch means; trailing samples that do not fill
// a complete batch are dropped.
inline double batch_mean_variance(std::span<const double> samples, int n_batches) {
    if (n_batches < 2) throw ConfigError("batch means: need at least 2 batches");
    if (samples.size() < static_cast<std::size_t>(n_batches))
        throw ConfigError("batch means: fewer samples than batches");
    const auto means = detail::batch_means(samples, n_batches);
    return detail::sample_variance(means);
}

// Standard batch-means estimator of the asymptotic variance
//   avar = (batch duration) * Var(batch means),
// which for large batch durations approximates 2 int_0^inf cov(f_0, f_t) dt.
inline double batch_means_avar(std::span<const double> samples, int n_batches,
                               double batch_duration) {
    return batch_duration * batch_mean_variance(samples, n_batches);
}

// Accumulates observable samples at macro boundaries, dropping t < T_burn.
class TimeAverager {
  public:
    explicit TimeAverager(double t_burn) : t_burn_(t_burn) {}

    void observe(double t, double f_value) {
        if (t >= t_burn_) samples_.push_back(f_value);
    }

    double mean() const { return detail::mean_of(samples_); }
    std::span<const double> samples() const { return samples_; }
    std::size_t count() const { return samples_.size(); }
    void reserve(std::size_t n) { samples_.reserve(n); }
    void clear() { samples_.clear(); }

  private:
    double t_burn_;
    std::vector<double> samples_;
};

// Runs one trajectory and reduces it to RunStats against a known reference
// average. Diverged runs keep whatever partial average was accumulated and
// are flagged.
template <PotentialModel P, class C>
RunStats run_single(Scheme scheme, const IntegratorParams& params, const SamplingConfig& cfg,
                    const P& pot, const C& drift, const Regularizer* reg, const Vec2& z0,
                    const Observable& f, double true_average, NormalStream& rng) {
    TimeAverager avg(cfg.T_burn);
    avg.reserve(static_cast<std::size_t>((cfg.T_total - cfg.T_burn) / params.delta) + 2);
    const SimResult sim = simulate(
        z0, scheme, params, pot, drift, reg, cfg.T_total,
        [&](double t, const Vec2& z) { avg.observe(t, f(z)); }, rng);

    RunStats out;
    out.diverged = sim.status == StepStatus::diverged;
    out.time_average = avg.mean();
    out.err_f = std::abs(out.time_average - true_average);
    if (!out.diverged && avg.count() >= static_cast<std::size_t>(cfg.n_batches))
        out.avar_f = batch_mean_variance(avg.samples(), cfg.n_batches);
    return out;
}

struct EnsembleStats {
    double mean_err = 0.0, std_err = 0.0;
    double mean_avar = 0.0, std_avar = 0.0;
    double divergence_fraction = 0.0;
    int n_total = 0, n_ok = 0;
    std::vector<RunStats> replicates;
};

// Independent replicates in parallel; replicate r derives its stream from
// (params.seed, r), so results are identical for any thread count. Diverged
// replicates are excluded from the moments and reported as a fraction.
template <PotentialModel P, class C>
EnsembleStats replicate_ensemble(Scheme scheme, const IntegratorParams& params,
                                 const SamplingConfig& cfg, const P& pot, const C& drift,
                                 const Regularizer* reg, const Vec2& z0, double true_average,
                                 int n_threads = default_thread_count()) {
    cfg.validate();
    const Observable f = make_observable(cfg.observable);
    EnsembleStats out;
    out.n_total = cfg.n_replicates;
    out.replicates.resize(static_cast<std::size_t>(cfg.n_replicates));
    parallel_for_index(out.replicates.size(), n_threads, [&](std::size_t r) {
        NormalStream rng(replicate_seed(params.seed, r));
        out.replicates[r] =
            run_single(scheme, params, cfg, pot, drift, reg, z0, f, true_average, rng);
    });

    std::vector<double> errs, avars;
    errs.reserve(out.replicates.size());
    avars.reserve(out.replicates.size());
    for (const RunStats& rs : out.replicates) {
        if (rs.diverged) continue;
        errs.push_back(rs.err_f);
        avars.push_back(rs.avar_f);
    }
    out.n_ok = static_cast<int>(errs.size());
    out.divergence_fraction =
        out.n_total == 0 ? 0.0
                         : static_cast<double>(out.n_total - out.n_ok) / out.n_total;
    out.mean_err = detail::mean_of(errs);
    out.std_err = std::sqrt(detail::sample_variance(errs));
    out.mean_avar = detail::mean_of(avars);
    out.std_avar = std::sqrt(detail::sample_variance(avars));
    return out;
}

}  // namespace irlang
