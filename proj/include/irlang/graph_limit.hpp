#pragma once

#include "irlang/graph_averages.hpp"
#include "irlang/parallel.hpp"
#include "irlang/reeb.hpp"
#include "irlang/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <span>
#include <vector>

namespace irlang {

struct GraphState {
    double x = 0.0;
    int edge = -1;  // -1 marks "at vertex" / unresolved samples
};

// The limiting energy diffusion on the graph: Euler-Maruyama inside an edge
// with the tabulated averaged drift and diffusion, plus crossing rules at the
// vertices. Interior vertices are transparent: a trajectory crossing the
// vertex energy continues into an adjacent edge on the other side, drawn with
// the flux probabilities; exterior vertices reflect.
class GraphDiffusion {
  public:
    GraphDiffusion(const ReebGraph& graph, std::vector<EdgeCoefficients> coefficients,
                   std::map<int, GluingWeights> gluing)
        : graph_(&graph), coeffs_(std::move(coefficients)), gluing_(std::move(gluing)) {
        for (const auto& c : coeffs_)
            if (c.edge < 0 || c.edge >= static_cast<int>(graph.edges.size()))
                throw GeometryError("graph diffusion: coefficients for unknown edge");
        by_edge_.assign(graph.edges.size(), nullptr);
        for (const auto& c : coeffs_) by_edge_[static_cast<std::size_t>(c.edge)] = &c;
    }

    GraphDiffusion(GraphDiffusion&& o) noexcept
        : graph_(o.graph_), coeffs_(std::move(o.coeffs_)), gluing_(std::move(o.gluing_)),
          by_edge_(std::move(o.by_edge_)), clamped_(o.clamped_.load()) {
        dt_edge = o.dt_edge;
        dt_vertex = o.dt_vertex;
        vertex_margin = o.vertex_margin;
    }
    GraphDiffusion(const GraphDiffusion&) = delete;
    GraphDiffusion& operator=(const GraphDiffusion&) = delete;
    GraphDiffusion& operator=(GraphDiffusion&&) = delete;

    double dt_edge = 1e-3;
    double dt_vertex = 1e-4;
    double vertex_margin = 2e-2;  // energy distance switching to the small step

    double pick_dt(const GraphState& s) const {
        for (const auto& v : graph_->vertices)
            if (std::abs(s.x - v.energy) < vertex_margin) return dt_vertex;
        return dt_edge;
    }

    GraphState step(GraphState s, double dt, NormalStream& rng) const {
        const EdgeCoefficients* c = by_edge_.at(static_cast<std::size_t>(s.edge));
        if (!c) throw GeometryError("graph diffusion: edge has no coefficients");
        if (!c->in_range(s.x)) clamped_.store(true, std::memory_order_relaxed);
        const double b = c->drift_at(s.x);
        const double a = std::max(0.0, c->diffusion_at(s.x));
        double xn = s.x + b * dt + std::sqrt(a * dt) * rng.normal();
        int edge = s.edge;
        for (int guard = 0; guard < 64; ++guard) {
            const ReebEdge& e = graph_->edges[static_cast<std::size_t>(edge)];
            const double hi = (e.v_hi >= 0) ? e.e_hi : graph_->energy_cap;
            if (xn < e.e_lo) {
                const ReebVertex& v = graph_->vertices[static_cast<std::size_t>(e.v_lo)];
                if (!v.interior()) {
                    xn = 2.0 * e.e_lo - xn;  // reflect at the minimum
                } else {
                    edge = draw_edge(graph_->descending_edges(e.v_lo), e.v_lo, rng);
                }
            } else if (xn > hi) {
                if (e.v_hi < 0) {
                    xn = 2.0 * hi - xn;  // reflect at the cap
                } else {
                    const ReebVertex& v = graph_->vertices[static_cast<std::size_t>(e.v_hi)];
                    if (!v.interior()) {
                        xn = 2.0 * hi - xn;  // reflect at a maximum
                    } else {
                        edge = draw_edge(graph_->ascending_edges(e.v_hi), e.v_hi, rng);
                    }
                }
            } else {
                return {xn, edge};
            }
        }
        throw GeometryError("graph diffusion: step did not settle in an edge");
    }

    GraphState advance(GraphState s, double t, NormalStream& rng) const {
        double remaining = t;
        while (remaining > 0.0) {
            const double dt = std::min(pick_dt(s), remaining);
            s = step(s, dt, rng);
            remaining -= dt;
        }
        return s;
    }

    std::vector<GraphState> ensemble(const GraphState& s0, double t, std::size_t n,
                                     std::uint64_t seed,
                                     int n_threads = default_thread_count()) const {
        std::vector<GraphState> out(n);
        parallel_for_index(n, n_threads, [&](std::size_t r) {
            NormalStream rng(replicate_seed(seed, r));
            out[r] = advance(s0, t, rng);
        });
        return out;
    }

    const ReebGraph& graph() const { return *graph_; }

    // a query fell outside a coefficient table and used the nearest value
    bool clamped_queries() const { return clamped_.load(std::memory_order_relaxed); }

  private:
    int draw_edge(const std::vector<int>& candidates, int vertex, NormalStream& rng) const {
        if (candidates.empty())
            throw GeometryError("graph diffusion: vertex with no continuation edges");
        if (candidates.size() == 1) return candidates.front();
        const auto git = gluing_.find(vertex);
        if (git == gluing_.end())
            throw GeometryError("graph diffusion: missing gluing weights at vertex");
        double total = 0.0;
        for (int e : candidates) total += git->second.p_of(e);
        double u = rng.uniform() * total;
        for (int e : candidates) {
            u -= git->second.p_of(e);
            if (u <= 0.0) return e;
        }
        return candidates.back();
    }

    const ReebGraph* graph_;
    std::vector<EdgeCoefficients> coeffs_;
    std::map<int, GluingWeights> gluing_;
    std::vector<const EdgeCoefficients*> by_edge_;
    mutable std::atomic<bool> clamped_{false};
};

struct LawComparison {
    double ks_energy = 0.0;    // sup-distance between the energy CDFs
    double tv_occupancy = 0.0; // half L1 distance between edge histograms
    std::size_t n_a = 0, n_b = 0;
};

inline double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        // advance past ties on both sides before comparing the CDFs
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        const double fa = static_cast<double>(i) / static_cast<double>(a.size());
        const double fb = static_cast<double>(j) / static_cast<double>(b.size());
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

// Distances between two ensembles of graph points at matched times. Samples
// flagged "at vertex" (edge < 0) enter the energy comparison but are left out
// of the occupancy histogram on both sides.
inline LawComparison compare_projected_law(std::span<const GraphState> a,
                                           std::span<const GraphState> b, int n_edges) {
    LawComparison out;
    out.n_a = a.size();
    out.n_b = b.size();
    std::vector<double> xa, xb;
    xa.reserve(a.size());
    xb.reserve(b.size());
    std::vector<double> ha(static_cast<std::size_t>(n_edges), 0.0);
    std::vector<double> hb(static_cast<std::size_t>(n_edges), 0.0);
    double na = 0.0, nb = 0.0;
    for (const auto& s : a) {
        xa.push_back(s.x);
        if (s.edge >= 0) {
            ha[static_cast<std::size_t>(s.edge)] += 1.0;
            na += 1.0;
        }
    }
    for (const auto& s : b) {
        xb.push_back(s.x);
        if (s.edge >= 0) {
            hb[static_cast<std::size_t>(s.edge)] += 1.0;
            nb += 1.0;
        }
    }
    out.ks_energy = ks_distance(std::move(xa), std::move(xb));
    double tv = 0.0;
    for (int e = 0; e < n_edges; ++e)
        tv += std::abs((na > 0 ? ha[static_cast<std::size_t>(e)] / na : 0.0) -
                       (nb > 0 ? hb[static_cast<std::size_t>(e)] / nb : 0.0));
    out.tv_occupancy = 0.5 * tv;
    return out;
}

}  // namespace irlang
