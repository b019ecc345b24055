#pragma once

#include "irlang/contour.hpp"
#include "irlang/reeb.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

namespace irlang {

// Level-curve averages tabulated along one edge: the period integral
//   T(x)   = loop m / |grad U| dl,
// the averaged drift of the energy coordinate
//   drift(x) = loop (-|grad U|^2 + beta tr D2U) m / |grad U| dl / T(x),
// and the averaged squared noise
//   diffusion(x) = loop 2 beta |grad U| m dl / T(x),
// with m the invariant density of the fast motion on the curve (identically
// one for the quarter-turn drift, |grad U|/|C| in general).
struct EdgeCoefficients {
    int edge = -1;
    std::vector<double> x;          // ascending tabulation energies
    std::vector<double> period;
    std::vector<double> drift;
    std::vector<double> diffusion;

    bool in_range(double xq) const { return xq >= x.front() && xq <= x.back(); }

    // queries outside the tabulated range extend the nearest value
    double interp(const std::vector<double>& ys, double xq) const {
        if (xq <= x.front()) return ys.front();
        if (xq >= x.back()) return ys.back();
        const auto it = std::upper_bound(x.begin(), x.end(), xq);
        const std::size_t hi = static_cast<std::size_t>(it - x.begin());
        const double w = (xq - x[hi - 1]) / (x[hi] - x[hi - 1]);
        return ys[hi - 1] * (1.0 - w) + ys[hi] * w;
    }
    double period_at(double xq) const { return interp(period, xq); }
    double drift_at(double xq) const { return interp(drift, xq); }
    double diffusion_at(double xq) const { return interp(diffusion, xq); }
};

namespace detail {

// one loop extraction, three reduced integrals
struct LoopAverages {
    double T = 0.0, G = 0.0, H = 0.0;
    double min_grad = 0.0;
};

template <PotentialModel P, class M>
LoopAverages loop_averages(const P& pot, const SampledField& field, double level,
                           const Vec2& seed, const M& m_weight) {
    const auto loops = field.extract(level);
    const LevelLoop* loop = nearest_loop(loops, seed);
    if (!loop) throw GeometryError("edge averages: no level curve found");
    if (!loop->closed) throw GeometryError("edge averages: level curve left the box");
    LoopAverages out;
    out.min_grad = std::numeric_limits<double>::infinity();
    const std::size_t n = loop->pts.size();
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2& a = loop->pts[k];
        const Vec2& b = loop->pts[(k + 1) % n];
        const Vec2 mid = 0.5 * (a + b);
        const double dl = (b - a).norm();
        const double gn = pot.gradient(mid).norm();
        out.min_grad = std::min(out.min_grad, gn);
        if (gn <= 0.0) continue;
        const double m = m_weight(mid, gn);
        out.T += m / gn * dl;
        out.G += m * gn * dl;
        out.H += m * pot.laplacian(mid) / gn * dl;
    }
    return out;
}

template <class C, PotentialModel P>
auto make_m_weight(const P& pot, const C& drift) {
    return [&pot, &drift](const Vec2& z, double grad_norm) -> double {
        if constexpr (GradientBasedDrift<C>) {
            (void)pot;
            (void)z;
            (void)grad_norm;
            return 1.0;  // |C| = |grad U| pointwise
        } else {
            const double cn = drift(z).norm();
            return cn > 0.0 ? grad_norm / cn : 1.0;
        }
    };
}

template <PotentialModel P>
Vec2 walk_to_level(const P& pot, Vec2 z, double level, int iters = 40) {
    for (int i = 0; i < iters; ++i) {
        const double u = pot.energy(z);
        const Vec2 g = pot.gradient(z);
        const double g2 = g.squaredNorm();
        if (g2 < 1e-18) break;
        z += ((level - u) / g2) * g;
        if (std::abs(pot.energy(z) - level) < 1e-12 * (1.0 + std::abs(level))) break;
    }
    return z;
}

inline std::vector<double> chebyshev_nodes(double a, double b, int n) {
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        xs[static_cast<std::size_t>(k)] =
            0.5 * (a + b) + 0.5 * (b - a) * std::cos(M_PI * (2.0 * k + 1.0) / (2.0 * n));
    std::sort(xs.begin(), xs.end());
    return xs;
}

}  // namespace detail

// Tabulates T, drift and diffusion on a Chebyshev energy grid over the edge
// interior, staying zeta_res away from the vertex energies. Every integral is
// Richardson-extrapolated across a lattice doubling.
template <PotentialModel P, class C>
EdgeCoefficients edge_coefficients(const P& pot, const C& drift, const ReebGraph& g, int edge,
                                   double beta, int n_energies = 64,
                                   const ContourOptions& opt = {}) {
    const ReebEdge& e = g.edges.at(static_cast<std::size_t>(edge));
    const double lo = e.e_lo + g.zeta_res;
    const double hi = (e.v_hi >= 0 ? e.e_hi - g.zeta_res : e.e_hi);
    if (!(lo < hi)) throw GeometryError("edge_coefficients: empty edge interior");

    const SampledField coarse = SampledField::sample(pot, opt.box, opt.grid_n);
    const SampledField fine = SampledField::sample(pot, opt.box, 2 * opt.grid_n);
    const auto m_weight = detail::make_m_weight(pot, drift);

    EdgeCoefficients out;
    out.edge = edge;
    out.x = detail::chebyshev_nodes(lo, hi, n_energies);
    out.period.resize(out.x.size());
    out.drift.resize(out.x.size());
    out.diffusion.resize(out.x.size());
    for (std::size_t k = 0; k < out.x.size(); ++k) {
        const double x = out.x[k];
        // seed on the correct component: representative of the band the
        // energy falls in, pushed to the level along the gradient
        const auto& reps = e.band_reps;
        const Vec2 rep = std::min_element(reps.begin(), reps.end(),
                                          [&](const auto& a, const auto& b) {
                                              return std::abs(a.first - x) < std::abs(b.first - x);
                                          })
                             ->second;
        const Vec2 seed = detail::walk_to_level(pot, rep, x);
        const auto c = detail::loop_averages(pot, coarse, x, seed, m_weight);
        const auto f = detail::loop_averages(pot, fine, x, seed, m_weight);
        const double T = (4.0 * f.T - c.T) / 3.0;
        const double G = (4.0 * f.G - c.G) / 3.0;
        const double H = (4.0 * f.H - c.H) / 3.0;
        out.period[k] = T;
        out.drift[k] = (-G + beta * H) / T;
        out.diffusion[k] = 2.0 * beta * G / T;
    }
    return out;
}

struct GluingWeights {
    int vertex = -1;
    std::vector<int> edges;     // incident edges, same order as b and p
    std::vector<double> b;      // flux weights 2 beta * loop |grad U| m dl
    std::vector<double> p;      // b normalised over the incident edges

    double p_of(int edge) const {
        for (std::size_t k = 0; k < edges.size(); ++k)
            if (edges[k] == edge) return p[k];
        throw GeometryError("gluing weights: edge not incident");
    }
};

// Separatrix flux weights at an interior vertex. The loops at the saddle
// energy itself are singular to parametrise, so each weight is evaluated at
// energies U(O_j) -+ eta and -+ eta/2 on the edge's side and extrapolated
// linearly to eta -> 0.
template <PotentialModel P, class C>
GluingWeights gluing_probabilities(const P& pot, const C& drift, const ReebGraph& g, int vertex,
                                   double beta, double eta = 1e-4,
                                   const ContourOptions& opt = {}) {
    const ReebVertex& v = g.vertices.at(static_cast<std::size_t>(vertex));
    if (!v.interior()) throw GeometryError("gluing_probabilities: vertex is not interior");

    const SampledField coarse = SampledField::sample(pot, opt.box, opt.grid_n);
    const SampledField fine = SampledField::sample(pot, opt.box, 2 * opt.grid_n);
    const auto m_weight = detail::make_m_weight(pot, drift);

    GluingWeights out;
    out.vertex = vertex;
    for (int e : g.incident_edges(vertex)) {
        const ReebEdge& edge = g.edges[static_cast<std::size_t>(e)];
        const double side = (edge.v_hi == vertex) ? -1.0 : 1.0;  // below or above the saddle
        auto flux_at = [&](double off) {
            const double x = v.energy + side * off;
            const auto& reps = edge.band_reps;
            const Vec2 rep = (side < 0 ? reps.back() : reps.front()).second;
            const Vec2 seed = detail::walk_to_level(pot, rep, x);
            const auto c = detail::loop_averages(pot, coarse, x, seed, m_weight);
            const auto f = detail::loop_averages(pot, fine, x, seed, m_weight);
            return 2.0 * beta * (4.0 * f.G - c.G) / 3.0;
        };
        const double b_eta = flux_at(eta);
        const double b_half = flux_at(0.5 * eta);
        out.edges.push_back(e);
        out.b.push_back(2.0 * b_half - b_eta);
    }
    double sum = 0.0;
    for (double b : out.b) sum += b;
    if (!(sum > 0.0)) throw GeometryError("gluing_probabilities: non-positive flux sum");
    for (double b : out.b) out.p.push_back(b / sum);
    return out;
}

// Counts energy descents through an interior vertex: a transition fires when
// U drops from above U(O_j) + hysteresis to below U(O_j) - hysteresis, and is
// attributed to the component the state resolves to at the crossing sample.
// The hysteresis band suppresses double counting from noise jitter.
class TransitionCounter {
  public:
    TransitionCounter(const ReebGraph& g, int vertex, double hysteresis = 5e-3)
        : graph_(&g), vertex_(vertex), hyst_(hysteresis),
          vertex_energy_(g.vertices.at(static_cast<std::size_t>(vertex)).energy) {
        for (int e : g.descending_edges(vertex)) counts_[e] = 0;
    }

    template <PotentialModel P>
    void observe(const P& pot, double /*t*/, const Vec2& z) {
        const double u = pot.energy(z);
        if (u > vertex_energy_ + hyst_) {
            armed_ = true;
        } else if (armed_ && u < vertex_energy_ - hyst_) {
            armed_ = false;
            const int e = graph_->resolve_edge(pot, z, u);
            ++counts_[e];
            ++total_;
        }
    }

    const std::map<int, long>& counts() const { return counts_; }
    long total() const { return total_; }

  private:
    const ReebGraph* graph_;
    int vertex_;
    double hyst_;
    double vertex_energy_;
    bool armed_ = false;
    std::map<int, long> counts_;
    long total_ = 0;
};

}  // namespace irlang
