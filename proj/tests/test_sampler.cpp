#include <catch2/catch_amalgamated.hpp>

#include "irlang/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace irlang;

TEST_CASE("time averaging with burn-in", "[sampler]") {
    TimeAverager avg(20.0);
    avg.observe(0.0, 100.0);   // burn-in, dropped
    avg.observe(19.99, 50.0);  // burn-in, dropped
    for (int i = 0; i < 10; ++i) avg.observe(20.0 + i, 1.0);
    CHECK(avg.count() == 10);
    CHECK(avg.mean() == Catch::Approx(1.0));

    TimeAverager alt(0.0);
    for (int i = 0; i < 100; ++i) alt.observe(i, i % 2 == 0 ? 0.0 : 1.0);
    CHECK(alt.mean() == Catch::Approx(0.5));
}

TEST_CASE("batch means: degenerate and error cases", "[sampler]") {
    std::vector<double> constant(400, 3.25);
    CHECK(batch_mean_variance(constant, 20) == Catch::Approx(0.0).margin(1e-26));
    CHECK(batch_means_avar(constant, 20, 5.0) == Catch::Approx(0.0).margin(1e-25));
    std::vector<double> few(10, 1.0);
    CHECK_THROWS_AS(batch_mean_variance(few, 20), ConfigError);
    CHECK_THROWS_AS(batch_mean_variance(few, 1), ConfigError);
}

TEST_CASE("batch means estimator on independent samples", "[sampler][mc]") {
    // independent draws of variance v at spacing dt have asymptotic variance
    // v * dt; average the estimator over blocks to beat its own noise
    const double v = 2.3, dt = 0.01;
    NormalStream rng(77);
    const int n_blocks = 200, samples_per_block = 4000, n_batches = 20;
    double acc = 0.0;
    for (int b = 0; b < n_blocks; ++b) {
        std::vector<double> x(samples_per_block);
        for (auto& xi : x) xi = std::sqrt(v) * rng.normal();
        const double batch_duration = (samples_per_block / n_batches) * dt;
        acc += batch_means_avar(x, n_batches, batch_duration);
    }
    acc /= n_blocks;
    CHECK(acc == Catch::Approx(v * dt).epsilon(0.05));
}

TEST_CASE("batch means estimator against the analytic OU value", "[sampler][mc]") {
    // dX = -a X dt + sqrt(2 D) dW: stationary variance D/a, asymptotic
    // variance 2 D / a^2; exact discretization at spacing dt
    const double a = 1.0, D = 1.0, dt = 0.01;
    const double rho = std::exp(-a * dt);
    const double svar = D / a;
    NormalStream rng(123);
    const std::size_t n = 4000000;
    std::vector<double> x(n);
    double xi = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        xi = rho * xi + std::sqrt(svar * (1.0 - rho * rho)) * rng.normal();
        x[k] = xi;
    }
    const int n_batches = 200;
    const double batch_duration = (static_cast<double>(n) / n_batches) * dt;
    const double est = batch_means_avar(x, n_batches, batch_duration);
    const double analytic = 2.0 * D / (a * a);
    CHECK(std::abs(est - analytic) < 0.2 * analytic);
}

TEST_CASE("batch means: shift invariance and quadratic scaling", "[sampler]") {
    NormalStream rng(9);
    std::vector<double> x(1000);
    for (auto& xi : x) xi = rng.normal() + 0.3 * rng.uniform();
    std::vector<double> shifted(x), scaled(x);
    for (auto& s : shifted) s += 17.5;
    for (auto& s : scaled) s *= -2.5;
    const double base = batch_mean_variance(x, 10);
    CHECK(batch_mean_variance(shifted, 10) == Catch::Approx(base));
    CHECK(batch_mean_variance(scaled, 10) == Catch::Approx(2.5 * 2.5 * base));
}

TEST_CASE("frozen dynamics gives the exact sampling error", "[sampler]") {
    DoubleWell dw;
    const auto drift = j_drift(dw);
    IntegratorParams p;
    p.beta = 0.0;  // noise off
    p.eps = 1e-2;
    p.tau = 5e-4;
    p.delta = 5e-3;
    SamplingConfig cfg;
    cfg.T_total = 10.0;
    cfg.T_burn = 1.0;
    cfg.n_replicates = 1;
    const EnsembleStats st = replicate_ensemble(Scheme::hmm, p, cfg, dw, drift, nullptr,
                                                Vec2{1.0, 0.0}, 0.05, 1);
    // z0 is the minimum: the trajectory stays put, f = x + y^2 = 1
    CHECK(st.n_ok == 1);
    CHECK(st.mean_err == Catch::Approx(std::abs(1.0 - 0.05)).margin(1e-12));
}

TEST_CASE("ensemble moments ignore replicate order", "[sampler]") {
    DoubleWell dw;
    const auto drift = j_drift(dw);
    IntegratorParams p;
    p.eps = 1e-2;
    p.tau = 5e-4;
    p.delta = 5e-3;
    p.seed = 5;
    SamplingConfig cfg;
    cfg.T_total = 30.0;
    cfg.T_burn = 5.0;
    cfg.n_replicates = 16;
    const EnsembleStats st =
        replicate_ensemble(Scheme::hmm, p, cfg, dw, drift, nullptr, Vec2{0, 0}, 0.05, 2);

    std::vector<double> errs;
    for (const RunStats& r : st.replicates)
        if (!r.diverged) errs.push_back(r.err_f);
    std::mt19937 shuffler(3);
    std::shuffle(errs.begin(), errs.end(), shuffler);
    double mu = 0.0;
    for (double e : errs) mu += e;
    mu /= static_cast<double>(errs.size());
    CHECK(mu == Catch::Approx(st.mean_err).epsilon(1e-12));
}

TEST_CASE("ensemble is deterministic across thread counts", "[sampler]") {
    DoubleWell dw;
    const auto drift = j_drift(dw);
    IntegratorParams p;
    p.eps = 1e-2;
    p.tau = 5e-4;
    p.delta = 5e-3;
    p.seed = 99;
    SamplingConfig cfg;
    cfg.T_total = 25.0;
    cfg.T_burn = 5.0;
    cfg.n_replicates = 8;
    const EnsembleStats a =
        replicate_ensemble(Scheme::hmm, p, cfg, dw, drift, nullptr, Vec2{0, 0}, 0.05, 1);
    const EnsembleStats b =
        replicate_ensemble(Scheme::hmm, p, cfg, dw, drift, nullptr, Vec2{0, 0}, 0.05, 4);
    REQUIRE(a.replicates.size() == b.replicates.size());
    for (std::size_t r = 0; r < a.replicates.size(); ++r) {
        REQUIRE(a.replicates[r].time_average == b.replicates[r].time_average);
        REQUIRE(a.replicates[r].avar_f == b.replicates[r].avar_f);
    }
    CHECK(a.mean_err == b.mean_err);
    CHECK(a.std_avar == b.std_avar);
}

TEST_CASE("diverged replicates are excluded and counted", "[sampler]") {
    DoubleWell dw;
    const auto drift = j_drift(dw);
    IntegratorParams p;
    p.eps = 5e-2;  // unstable for the direct scheme at this step
    p.delta = 5e-3;
    p.tau = 5e-3;
    p.seed = 31;
    SamplingConfig cfg;
    cfg.T_total = 100.0;
    cfg.T_burn = 10.0;
    cfg.n_replicates = 10;
    const EnsembleStats st =
        replicate_ensemble(Scheme::em, p, cfg, dw, drift, nullptr, Vec2{0, 0}, 0.05, 2);
    CHECK(st.n_ok == 0);
    CHECK(st.divergence_fraction == Catch::Approx(1.0));
}

TEST_CASE("sampling config validation", "[sampler]") {
    SamplingConfig cfg;
    cfg.T_burn = cfg.T_total;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.n_batches = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("undersampling the fast motion degrades the batch variance", "[sampler][mc][heavy]") {
    // at delta = 1e-3 the micro step tau = 10*delta*eps underuses the fast
    // drift and the batch-means variance roughly doubles vs tau = 20*delta*eps
    DoubleWell dw;
    const auto drift = j_drift(dw);
    SamplingConfig cfg;
    cfg.n_replicates = 30;
    auto run = [&](double ratio) {
        IntegratorParams p;
        p.eps = 1e-4;
        p.delta = 1e-3;
        p.tau = ratio * p.delta * p.eps;
        p.seed = 808;
        return replicate_ensemble(Scheme::hmm, p, cfg, dw, drift, nullptr, Vec2{0, 0}, 0.05);
    };
    const EnsembleStats good = run(20.0);
    const EnsembleStats bad = run(10.0);
    CHECK(good.divergence_fraction == 0.0);
    CHECK(bad.divergence_fraction == 0.0);
    CHECK(bad.mean_avar > 1.5 * good.mean_avar);
    CHECK(good.mean_avar == Catch::Approx(0.0165).margin(0.004));
    CHECK(bad.mean_avar == Catch::Approx(0.0374).margin(0.009));
}
