#pragma once

#include "irlang/potentials.hpp"
#include "irlang/rng.hpp"
#include "irlang/types.hpp"

#include <cmath>
#include <cstddef>
#include <optional>

namespace irlang {

// Step sizes and physical parameters of the scheme. The split-step method
// needs tau < delta < tau/eps; outside that window it still runs but the
// caller is warned via hmm_regime_ok().
struct IntegratorParams {
    double eps = 1e-2;        // irreversible drift strength 1/eps
    double tau = 5e-4;        // micro step (full drift)
    double delta = 5e-3;      // macro step
    double beta = 0.1;        // noise level, amplitude sqrt(2 beta)
    double kappa = 0.0;       // regularizing-noise strength
    double blowup_norm = 1e6; // |z| beyond which the step reports divergence
    std::uint64_t seed = 0;
    int micro_steps = 1;

    void validate() const {
        if (!(eps > 0.0) || !(tau > 0.0) || !(delta > 0.0) || !(beta > 0.0))
            throw ConfigError("integrator params: eps, tau, delta, beta must be positive");
        if (kappa < 0.0) throw ConfigError("integrator params: kappa must be >= 0");
        if (micro_steps < 1) throw ConfigError("integrator params: micro_steps must be >= 1");
        if (tau * micro_steps > delta)
            throw ConfigError("integrator params: micro steps exceed the macro step");
    }

    bool hmm_regime_ok() const { return tau < delta && delta < tau / eps; }
    double alpha_fast() const { return 1.0 / eps; }
};

template <class State>
struct BasicStepOutcome {
    State z;
    StepStatus status = StepStatus::ok;
};
using StepOutcome = BasicStepOutcome<Vec2>;
using StepOutcomeX = BasicStepOutcome<VecX>;

enum class Scheme { em, hmm };

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "em") return Scheme::em;
    if (s == "hmm") return Scheme::hmm;
    throw ConfigError("unknown scheme: " + s + " (expected em|hmm)");
}

namespace detail {
inline bool step_ok(const Vec2& z, double blowup_norm) {
    return std::isfinite(z.x()) && std::isfinite(z.y()) && z.norm() <= blowup_norm;
}
}  // namespace detail

// One Euler-Maruyama map
//   z' = z - h grad U + alpha h C~(z) + sqrt(2 beta h) xi
//        + sqrt(kappa alpha h) sigma(z) xi',
// xi, xi' independent standard normals; the xi' term only participates when
// kappa > 0 and alpha > 0.
template <PotentialModel P, class C>
StepOutcome phi_step(const Vec2& z, double h, double alpha, const P& pot, const C& drift,
                     const Regularizer* reg, const IntegratorParams& params,
                     NormalStream& rng) {
    const Vec2 g = pot.gradient(z);
    Vec2 zn = z - h * g;
    if (alpha != 0.0) {
        Vec2 c;
        if constexpr (GradientBasedDrift<C>) {
            c = C::from_gradient(g);
        } else {
            c = drift(z);
        }
        if (params.kappa > 0.0 && reg && reg->ssq_div)
            c += 0.5 * params.kappa * reg->ssq_div(z);
        zn += alpha * h * c;
    }
    const double noise = std::sqrt(2.0 * params.beta * h);
    zn.x() += noise * rng.normal();
    zn.y() += noise * rng.normal();
    if (params.kappa > 0.0 && alpha > 0.0 && reg && reg->sigma) {
        const Vec2 xi{rng.normal(), rng.normal()};
        zn += std::sqrt(params.kappa * alpha * h) * (reg->sigma(z) * xi);
    }
    return {zn, detail::step_ok(zn, params.blowup_norm) ? StepStatus::ok : StepStatus::diverged};
}

// Split step: micro step(s) with the full stiff drift, then the remainder of
// the macro interval without it. Gaussians are drawn micro-first so a single
// seeded stream reproduces the trajectory exactly.
template <PotentialModel P, class C>
StepOutcome hmm_macro_step(const Vec2& z, const IntegratorParams& params, const P& pot,
                           const C& drift, const Regularizer* reg, NormalStream& rng) {
    StepOutcome s{z, StepStatus::ok};
    for (int k = 0; k < params.micro_steps; ++k) {
        s = phi_step(s.z, params.tau, params.alpha_fast(), pot, drift, reg, params, rng);
        if (s.status != StepStatus::ok) return s;
    }
    const double rest = params.delta - params.micro_steps * params.tau;
    s = phi_step(s.z, rest, 0.0, pot, drift, reg, params, rng);
    return s;
}

// Direct discretization of the stiff equation with step delta.
template <PotentialModel P, class C>
StepOutcome em_step(const Vec2& z, const IntegratorParams& params, const P& pot,
                    const C& drift, NormalStream& rng) {
    return phi_step(z, params.delta, params.alpha_fast(), pot, drift, nullptr, params, rng);
}

// General-dimension variants on the evaluator record. The level-set
// machinery is 2d only, but the steppers work in any dimension.
inline StepOutcomeX phi_step(const VecX& z, double h, double alpha, const GenericPotential& pot,
                             const GenericDrift& drift, const IntegratorParams& params,
                             NormalStream& rng) {
    VecX zn = z - h * pot.gradient(z);
    if (alpha != 0.0) zn += alpha * h * drift(z);
    const double noise = std::sqrt(2.0 * params.beta * h);
    for (Eigen::Index k = 0; k < zn.size(); ++k) zn[k] += noise * rng.normal();
    const bool ok = zn.allFinite() && zn.norm() <= params.blowup_norm;
    return {std::move(zn), ok ? StepStatus::ok : StepStatus::diverged};
}

inline StepOutcomeX hmm_macro_step(const VecX& z, const IntegratorParams& params,
                                   const GenericPotential& pot, const GenericDrift& drift,
                                   NormalStream& rng) {
    StepOutcomeX s{z, StepStatus::ok};
    for (int k = 0; k < params.micro_steps; ++k) {
        s = phi_step(s.z, params.tau, params.alpha_fast(), pot, drift, params, rng);
        if (s.status != StepStatus::ok) return s;
    }
    return phi_step(s.z, params.delta - params.micro_steps * params.tau, 0.0, pot, drift,
                    params, rng);
}

struct SimResult {
    StepStatus status = StepStatus::ok;
    double t_end = 0.0;
    std::size_t steps = 0;
    std::optional<std::size_t> diverged_step;
    Vec2 z_end = Vec2::Zero();
};

// Drives a trajectory over [0, T]; the observer sees (t_n, z_n) at every
// macro boundary t_n = n delta, including the initial state at t = 0.
// Stops early on divergence and reports when it happened.
template <PotentialModel P, class C, class Obs>
SimResult simulate(const Vec2& z0, Scheme scheme, const IntegratorParams& params,
                   const P& pot, const C& drift, const Regularizer* reg, double T,
                   Obs&& observer, NormalStream& rng) {
    const auto n_steps = static_cast<std::size_t>(std::llround(T / params.delta));
    SimResult res;
    res.z_end = z0;
    observer(0.0, z0);
    for (std::size_t n = 0; n < n_steps; ++n) {
        const StepOutcome out = (scheme == Scheme::hmm)
                                    ? hmm_macro_step(res.z_end, params, pot, drift, reg, rng)
                                    : em_step(res.z_end, params, pot, drift, rng);
        res.z_end = out.z;
        res.steps = n + 1;
        res.t_end = static_cast<double>(n + 1) * params.delta;
        if (out.status == StepStatus::diverged) {
            res.status = StepStatus::diverged;
            res.diverged_step = n;
            return res;
        }
        observer(res.t_end, res.z_end);
    }
    return res;
}

template <PotentialModel P, class C, class Obs>
SimResult simulate(const Vec2& z0, Scheme scheme, const IntegratorParams& params,
                   const P& pot, const C& drift, const Regularizer* reg, double T,
                   Obs&& observer) {
    NormalStream rng(params.seed);
    return simulate(z0, scheme, params, pot, drift, reg, T, std::forward<Obs>(observer), rng);
}

}  // namespace irlang
