#pragma once

#include "irlang/types.hpp"

#include <cmath>
#include <concepts>
#include <functional>
#include <string>
#include <utility>

namespace irlang {

// A potential provides the energy U, its gradient, the trace of the Hessian
// (Laplacian) and, for the 2d geometric machinery, the full Hessian. All
// built-ins are closed-form; finite differences appear only in tests.
template <class P>
concept PotentialModel = requires(const P& p, const Vec2& z) {
    { p.energy(z) } -> std::convertible_to<double>;
    { p.gradient(z) } -> std::convertible_to<Vec2>;
    { p.laplacian(z) } -> std::convertible_to<double>;
};

template <class P>
concept HessianModel = PotentialModel<P> && requires(const P& p, const Vec2& z) {
    { p.hessian(z) } -> std::convertible_to<Mat2>;
};

// U(x,y) = (x^2-1)^2/4 + y^2, minima (+-1,0), saddle (0,0).
struct DoubleWell {
    static constexpr int dimension = 2;

    double energy(const Vec2& z) const {
        const double a = z.x() * z.x() - 1.0;
        return 0.25 * a * a + z.y() * z.y();
    }
    Vec2 gradient(const Vec2& z) const {
        return {z.x() * (z.x() * z.x() - 1.0), 2.0 * z.y()};
    }
    double laplacian(const Vec2& z) const { return 3.0 * z.x() * z.x() + 1.0; }
    Mat2 hessian(const Vec2& z) const {
        Mat2 h;
        h << 3.0 * z.x() * z.x() - 1.0, 0.0, 0.0, 2.0;
        return h;
    }
};

// Symmetry-broken variant: U(x,y) = (x^2-1)^2/4 - x/8 + y^2.
struct TiltedDoubleWell {
    static constexpr int dimension = 2;

    double energy(const Vec2& z) const {
        const double a = z.x() * z.x() - 1.0;
        return 0.25 * a * a - 0.125 * z.x() + z.y() * z.y();
    }
    Vec2 gradient(const Vec2& z) const {
        return {z.x() * (z.x() * z.x() - 1.0) - 0.125, 2.0 * z.y()};
    }
    double laplacian(const Vec2& z) const { return 3.0 * z.x() * z.x() + 1.0; }
    Mat2 hessian(const Vec2& z) const {
        Mat2 h;
        h << 3.0 * z.x() * z.x() - 1.0, 0.0, 0.0, 2.0;
        return h;
    }
};

// U(x,y) = [ (x^2-1)^2 ((y^2-2)^2+1) + 2y^2 - y/8 ] / 4 + exp(-8x^2-4y^2).
struct Rbs3 {
    static constexpr int dimension = 2;

    double energy(const Vec2& z) const {
        const double x = z.x(), y = z.y();
        const double a = x * x - 1.0, b = y * y - 2.0;
        return 0.25 * (a * a * (b * b + 1.0) + 2.0 * y * y - y / 8.0) +
               std::exp(-8.0 * x * x - 4.0 * y * y);
    }
    Vec2 gradient(const Vec2& z) const {
        const double x = z.x(), y = z.y();
        const double a = x * x - 1.0, b = y * y - 2.0;
        const double q = b * b + 1.0;
        const double e = std::exp(-8.0 * x * x - 4.0 * y * y);
        return {x * a * q - 16.0 * x * e,
                a * a * b * y + y - 1.0 / 32.0 - 8.0 * y * e};
    }
    double laplacian(const Vec2& z) const {
        const Mat2 h = hessian(z);
        return h(0, 0) + h(1, 1);
    }
    Mat2 hessian(const Vec2& z) const {
        const double x = z.x(), y = z.y();
        const double a = x * x - 1.0, b = y * y - 2.0;
        const double q = b * b + 1.0;
        const double e = std::exp(-8.0 * x * x - 4.0 * y * y);
        Mat2 h;
        h(0, 0) = q * (a + 2.0 * x * x) + (256.0 * x * x - 16.0) * e;
        h(1, 1) = a * a * (b + 2.0 * y * y) + 1.0 + (64.0 * y * y - 8.0) * e;
        h(0, 1) = h(1, 0) = 4.0 * x * y * a * b + 128.0 * x * y * e;
        return h;
    }
};

// U(z) = |z|^2 / 2; level sets are circles, handy as an exactly solvable case.
struct QuadraticBowl {
    static constexpr int dimension = 2;

    double energy(const Vec2& z) const { return 0.5 * z.squaredNorm(); }
    Vec2 gradient(const Vec2& z) const { return z; }
    double laplacian(const Vec2&) const { return 2.0; }
    Mat2 hessian(const Vec2&) const { return Mat2::Identity(); }
};

// Evaluator record for potentials in general dimension; only d = 2 is wired
// into the level-set geometry.
struct GenericPotential {
    int dimension = 2;
    std::function<double(const VecX&)> energy;
    std::function<VecX(const VecX&)> gradient;
    std::function<double(const VecX&)> laplacian;
    std::function<MatX(const VecX&)> hessian;  // may be empty
};

// Irreversible drift C(z) = J grad U(z) with the quarter-turn rotation
// J = [[0,1],[-1,0]]. Divergence-free and orthogonal to grad U by
// antisymmetry, and |C| = |grad U| everywhere.
template <PotentialModel P>
struct JDrift {
    P pot;

    Vec2 operator()(const Vec2& z) const { return from_gradient(pot.gradient(z)); }
    static Vec2 from_gradient(const Vec2& g) { return {g.y(), -g.x()}; }
};

template <PotentialModel P>
JDrift<P> j_drift(const P& pot) {
    return JDrift<P>{pot};
}

struct GenericDrift {
    std::function<VecX(const VecX&)> eval;
    VecX operator()(const VecX& z) const { return eval(z); }
};

// General antisymmetric-J construction; the quarter-turn constructor above is
// the d = 2 case. Odd dimensions are rejected (an antisymmetric J is then
// singular and C would vanish along a direction of grad U).
inline GenericDrift j_drift(const GenericPotential& pot, const MatX& J) {
    if (pot.dimension % 2 != 0)
        throw std::invalid_argument("j_drift: antisymmetric J requires even dimension");
    if (J.rows() != pot.dimension || J.cols() != pot.dimension)
        throw std::invalid_argument("j_drift: J has wrong shape");
    if ((J + J.transpose()).norm() > 1e-12 * (1.0 + J.norm()))
        throw std::invalid_argument("j_drift: J is not antisymmetric");
    auto grad = pot.gradient;
    return GenericDrift{[J, grad](const VecX& z) -> VecX { return J * grad(z); }};
}

inline GenericDrift j_drift(const GenericPotential& pot) {
    if (pot.dimension != 2)
        throw std::invalid_argument("j_drift: default rotation only defined for d = 2");
    MatX J(2, 2);
    J << 0.0, 1.0, -1.0, 0.0;
    return j_drift(pot, J);
}

template <class C>
concept GradientBasedDrift = requires(const Vec2& g) {
    { C::from_gradient(g) } -> std::convertible_to<Vec2>;
};

// Regularizing noise sigma for the fast dynamics (kappa > 0). ssq_div is the
// row divergence of sigma sigma^T entering the corrected drift
// C~ = C + (kappa/2) div(sigma sigma^T).
struct Regularizer {
    std::function<Mat2(const Vec2&)> sigma;
    std::function<Vec2(const Vec2&)> ssq_div;
};

// Projector onto the tangent of the level set: sigma = I - n n^T with
// n = grad U / |grad U|. Satisfies sigma sigma^T grad U = 0 away from
// critical points.
template <PotentialModel P>
Regularizer tangential_regularizer(const P& pot, double tiny = 1e-14) {
    Regularizer r;
    r.sigma = [pot, tiny](const Vec2& z) -> Mat2 {
        const Vec2 g = pot.gradient(z);
        const double n2 = g.squaredNorm();
        if (n2 < tiny) return Mat2::Zero();
        return Mat2::Identity() - (g * g.transpose()) / n2;
    };
    r.ssq_div = [pot, tiny](const Vec2& z) -> Vec2 {
        // central differences; the correction term is test/diagnostic only
        const double h = 1e-6;
        Mat2 sp, sm;
        Vec2 out = Vec2::Zero();
        for (int j = 0; j < 2; ++j) {
            Vec2 zp = z, zm = z;
            zp[j] += h;
            zm[j] -= h;
            const Vec2 gp = pot.gradient(zp), gm = pot.gradient(zm);
            const double np = gp.squaredNorm(), nm = gm.squaredNorm();
            sp = (np < tiny) ? Mat2::Zero() : Mat2(Mat2::Identity() - gp * gp.transpose() / np);
            sm = (nm < tiny) ? Mat2::Zero() : Mat2(Mat2::Identity() - gm * gm.transpose() / nm);
            // sigma is a projector, so sigma sigma^T = sigma
            out += (sp.row(j) - sm.row(j)).transpose() / (2.0 * h);
        }
        return out;
    };
    return r;
}

// Dispatch a callable over the potential named by a config id.
template <class F>
decltype(auto) with_potential(const std::string& id, F&& f) {
    if (id == "double_well") return std::forward<F>(f)(DoubleWell{});
    if (id == "tilted_double_well") return std::forward<F>(f)(TiltedDoubleWell{});
    if (id == "rbs3") return std::forward<F>(f)(Rbs3{});
    if (id == "quadratic_bowl") return std::forward<F>(f)(QuadraticBowl{});
    throw ConfigError("unknown potential id: " + id);
}

}  // namespace irlang
