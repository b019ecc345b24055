#pragma once

#include "irlang/contour.hpp"
#include "irlang/potentials.hpp"
#include "irlang/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace irlang {

enum class CriticalKind { minimum, saddle, maximum };

struct CriticalPoint {
    Vec2 z = Vec2::Zero();
    double energy = 0.0;
    CriticalKind kind = CriticalKind::minimum;
    Mat2 hessian = Mat2::Zero();
};

struct CriticalSearchOptions {
    Box2 box{};
    int seed_grid_n = 48;
    double dedupe_tol = 1e-6;
    double degenerate_det = 1e-8;
    int max_newton_iters = 60;
};

// Newton from a coarse grid of seeds, deduplicated and classified by the
// Hessian eigenvalue signs. Degenerate critical points are a structural
// violation and are reported as such.
template <HessianModel P>
std::vector<CriticalPoint> find_critical_points(const P& pot,
                                                const CriticalSearchOptions& opt = {}) {
    std::vector<CriticalPoint> out;
    const int n = opt.seed_grid_n;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Vec2 z{opt.box.x0 + (i + 0.5) * opt.box.width() / n,
                   opt.box.y0 + (j + 0.5) * opt.box.height() / n};
            bool ok = false;
            for (int it = 0; it < opt.max_newton_iters; ++it) {
                const Vec2 g = pot.gradient(z);
                if (g.norm() < 1e-12) {
                    ok = true;
                    break;
                }
                const Mat2 h = pot.hessian(z);
                if (std::abs(h.determinant()) < 1e-14) {
                    // Newton stalled against a flat Hessian; if the gradient
                    // is already small this is a degenerate critical point
                    if (g.norm() < 1e-6)
                        throw GeometryError(
                            "find_critical_points: degenerate Hessian at critical point");
                    break;
                }
                Vec2 step = h.colPivHouseholderQr().solve(-g);
                const double sn = step.norm();
                if (sn > 0.5) step *= 0.5 / sn;
                z += step;
                if (!opt.box.contains(z)) break;
            }
            if (!ok || !opt.box.contains(z)) continue;
            bool dup = false;
            for (const auto& c : out)
                if ((c.z - z).norm() < opt.dedupe_tol) {
                    dup = true;
                    break;
                }
            if (dup) continue;

            CriticalPoint c;
            c.z = z;
            c.energy = pot.energy(z);
            c.hessian = pot.hessian(z);
            if (std::abs(c.hessian.determinant()) < opt.degenerate_det)
                throw GeometryError("find_critical_points: degenerate Hessian at critical point");
            const Eigen::SelfAdjointEigenSolver<Mat2> es(c.hessian);
            const double l0 = es.eigenvalues()(0), l1 = es.eigenvalues()(1);
            c.kind = l0 > 0.0 ? CriticalKind::minimum
                              : (l1 < 0.0 ? CriticalKind::maximum : CriticalKind::saddle);
            out.push_back(c);
        }
    }
    std::sort(out.begin(), out.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
        if (a.energy != b.energy) return a.energy < b.energy;
        return a.z.x() < b.z.x();
    });
    return out;
}

// Admissible strength of the regularizing noise: kappa must stay below
// 1 / (sup |sigma sigma^T| * max |Hessian eigenvalue at a critical point|).
// Callers enable the check when kappa > 0; sigma_sup is 1 for projector
// regularizers.
inline double kappa_upper_bound(const std::vector<CriticalPoint>& criticals,
                                double sigma_sup = 1.0) {
    double lam = 0.0;
    for (const auto& c : criticals) {
        const Eigen::SelfAdjointEigenSolver<Mat2> es(c.hessian);
        lam = std::max({lam, std::abs(es.eigenvalues()(0)), std::abs(es.eigenvalues()(1))});
    }
    if (!(lam > 0.0) || !(sigma_sup > 0.0))
        throw GeometryError("kappa_upper_bound: ill-posed inputs");
    return 1.0 / (sigma_sup * lam);
}

struct ReebVertex {
    Vec2 z = Vec2::Zero();
    double energy = 0.0;
    CriticalKind kind = CriticalKind::minimum;

    bool interior() const { return kind == CriticalKind::saddle; }
};

struct ReebEdge {
    double e_lo = 0.0, e_hi = 0.0;
    int v_lo = -1, v_hi = -1;  // -1: unbounded top (capped at energy_cap)
    // one representative interior point per band the edge spans
    std::vector<std::pair<double, Vec2>> band_reps;  // (band mid energy, point)
};

struct ProjectResult {
    double x = 0.0;
    int edge = -1;
    bool at_vertex = false;
    int vertex = -1;
};

struct ReebOptions {
    Box2 box{};
    int label_n = 1024;
    double energy_cap_pad = 2.5;
    double zeta_res = 1e-3;  // vertex resolution band for project()
    // cells this close to a critical point are left out of the shell
    // labelling; a saddle pinches its level set to a point there and the
    // lattice would otherwise bridge the two sides
    double critical_exclusion_cells = 3.5;
};

class ReebGraph;

template <PotentialModel P>
ReebGraph build_reeb_graph(const P& pot, const std::vector<CriticalPoint>& criticals,
                           const ReebOptions& opt = {});

// The graph of connected level-set components: exterior vertices at extrema,
// interior vertices at saddles, one edge per family of components. Built by
// labelling the connected components of the open shells between consecutive
// critical energies on a lattice; the label grids double as an O(1)
// projection cache.
class ReebGraph {
  public:
    std::vector<ReebVertex> vertices;
    std::vector<ReebEdge> edges;
    double energy_cap = 0.0;
    double zeta_res = 1e-3;

    std::vector<int> incident_edges(int vertex) const {
        std::vector<int> out;
        for (int e = 0; e < static_cast<int>(edges.size()); ++e)
            if (edges[static_cast<std::size_t>(e)].v_lo == vertex ||
                edges[static_cast<std::size_t>(e)].v_hi == vertex)
                out.push_back(e);
        return out;
    }
    std::vector<int> descending_edges(int vertex) const {
        std::vector<int> out;
        for (int e = 0; e < static_cast<int>(edges.size()); ++e)
            if (edges[static_cast<std::size_t>(e)].v_hi == vertex) out.push_back(e);
        return out;
    }
    std::vector<int> ascending_edges(int vertex) const {
        std::vector<int> out;
        for (int e = 0; e < static_cast<int>(edges.size()); ++e)
            if (edges[static_cast<std::size_t>(e)].v_lo == vertex) out.push_back(e);
        return out;
    }

    int band_of(double x) const {
        const auto it = std::upper_bound(band_bounds_.begin(), band_bounds_.end(), x);
        int b = static_cast<int>(it - band_bounds_.begin()) - 1;
        b = std::clamp(b, 0, static_cast<int>(band_bounds_.size()) - 2);
        return b;
    }

    // Projection Q(z) = (U(z), edge). Within zeta_res of a vertex energy the
    // edge index is ambiguous and the point is flagged as "at vertex".
    template <PotentialModel P>
    ProjectResult project(const P& pot, const Vec2& z) const {
        ProjectResult r;
        r.x = pot.energy(z);
        // several vertices can share an energy (symmetric minima); the
        // nearest one in space is the graph point the state sits at
        double best = std::numeric_limits<double>::infinity();
        for (int v = 0; v < static_cast<int>(vertices.size()); ++v) {
            const auto& vert = vertices[static_cast<std::size_t>(v)];
            if (std::abs(r.x - vert.energy) < zeta_res) {
                const double d = (z - vert.z).squaredNorm();
                if (d < best) {
                    best = d;
                    r.at_vertex = true;
                    r.vertex = v;
                }
            }
        }
        if (r.at_vertex) return r;
        r.edge = resolve_edge(pot, z, r.x);
        return r;
    }

    // Finds the edge whose level-set component contains z at energy x by
    // looking up the band label grid, walking along +-grad U toward the
    // middle of the band when the cell itself is unresolved. The gradient
    // flow cannot leave the shell component, so the walk is exact up to the
    // lattice resolution.
    template <PotentialModel P>
    int resolve_edge(const P& pot, const Vec2& z, double x) const {
        const int b = band_of(std::min(x, energy_cap));
        const double mid = 0.5 * (band_bounds_[static_cast<std::size_t>(b)] +
                                  band_bounds_[static_cast<std::size_t>(b) + 1]);
        Vec2 w = z;
        for (int it = 0; it < 48; ++it) {
            const int e = lookup(b, w);
            if (e >= 0) return e;
            const Vec2 g = pot.gradient(w);
            const double g2 = g.squaredNorm();
            if (g2 < 1e-18) break;
            const double du = mid - pot.energy(w);
            Vec2 step = (du / g2) * g;
            const double cell = box_.width() / (label_n_ - 1);
            const double sn = step.norm();
            if (sn > 4.0 * cell) step *= 4.0 * cell / sn;
            w += step;
            if (!box_.contains(w)) break;
        }
        throw GeometryError("ReebGraph::project: could not resolve level-set component");
    }

    template <PotentialModel P>
    friend ReebGraph build_reeb_graph(const P& pot, const std::vector<CriticalPoint>& criticals,
                                      const ReebOptions& opt);

    std::string describe() const;

  private:
    int lookup(int band, const Vec2& z) const {
        const double cx = (z.x() - box_.x0) / box_.width() * (label_n_ - 1);
        const double cy = (z.y() - box_.y0) / box_.height() * (label_n_ - 1);
        const int i = static_cast<int>(std::lround(cx));
        const int j = static_cast<int>(std::lround(cy));
        if (i < 0 || j < 0 || i >= label_n_ || j >= label_n_) return -1;
        return band_edge_[static_cast<std::size_t>(band)]
                         [static_cast<std::size_t>(j) * static_cast<std::size_t>(label_n_) +
                          static_cast<std::size_t>(i)];
    }

    Box2 box_{};
    int label_n_ = 0;
    std::vector<double> band_bounds_;                // nb+1 energies
    std::vector<std::vector<std::int32_t>> band_edge_;  // per band: node -> edge id
};

template <PotentialModel P>
ReebGraph build_reeb_graph(const P& pot, const std::vector<CriticalPoint>& criticals,
                           const ReebOptions& opt) {
    if (criticals.empty()) throw GeometryError("build_reeb_graph: no critical points");
    ReebGraph g;
    g.box_ = opt.box;
    g.label_n_ = opt.label_n;
    g.zeta_res = opt.zeta_res;
    for (const auto& c : criticals) g.vertices.push_back({c.z, c.energy, c.kind});

    // distinct critical energies -> band boundaries, capped top band
    std::vector<double> energies;
    for (const auto& c : criticals) energies.push_back(c.energy);
    std::sort(energies.begin(), energies.end());
    energies.erase(std::unique(energies.begin(), energies.end(),
                               [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                   energies.end());

    const SampledField field = SampledField::sample(pot, opt.box, opt.label_n);
    const int n = opt.label_n;
    double boundary_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        boundary_min = std::min({boundary_min, field.value(i, 0), field.value(i, n - 1),
                                 field.value(0, i), field.value(n - 1, i)});
    }
    g.energy_cap = std::min(energies.back() + opt.energy_cap_pad, 0.95 * boundary_min);
    if (g.energy_cap <= energies.back())
        throw GeometryError("build_reeb_graph: analysis box too small for the energy cap");

    g.band_bounds_ = energies;
    g.band_bounds_.push_back(g.energy_cap);
    const int nb = static_cast<int>(g.band_bounds_.size()) - 1;

    // nodes masked out around every critical point
    std::vector<bool> near_critical(static_cast<std::size_t>(n) * n, false);
    {
        const double rx = opt.critical_exclusion_cells * opt.box.width() / (n - 1);
        const double ry = opt.critical_exclusion_cells * opt.box.height() / (n - 1);
        const int span = static_cast<int>(std::ceil(opt.critical_exclusion_cells)) + 1;
        for (const auto& c : criticals) {
            const int ic = static_cast<int>(std::lround((c.z.x() - opt.box.x0) / opt.box.width() * (n - 1)));
            const int jc = static_cast<int>(std::lround((c.z.y() - opt.box.y0) / opt.box.height() * (n - 1)));
            for (int dj = -span; dj <= span; ++dj) {
                for (int di = -span; di <= span; ++di) {
                    const int i = ic + di, j = jc + dj;
                    if (i < 0 || j < 0 || i >= n || j >= n) continue;
                    const Vec2 d = field.node(i, j) - c.z;
                    if (std::abs(d.x()) <= rx && std::abs(d.y()) <= ry)
                        near_critical[static_cast<std::size_t>(j) * n +
                                      static_cast<std::size_t>(i)] = true;
                }
            }
        }
    }

    // label shell components per band
    std::vector<std::vector<std::int32_t>> comp(static_cast<std::size_t>(nb));
    std::vector<int> comp_count(static_cast<std::size_t>(nb), 0);
    std::vector<std::vector<Vec2>> comp_rep(static_cast<std::size_t>(nb));
    for (int b = 0; b < nb; ++b) {
        const double lo = g.band_bounds_[static_cast<std::size_t>(b)];
        const double hi = g.band_bounds_[static_cast<std::size_t>(b) + 1];
        auto& labels = comp[static_cast<std::size_t>(b)];
        labels.assign(static_cast<std::size_t>(n) * n, -1);
        auto in_band = [&](int i, int j) {
            if (near_critical[static_cast<std::size_t>(j) * n + static_cast<std::size_t>(i)])
                return false;
            const double v = field.value(i, j);
            return v > lo && v < hi;
        };
        std::int32_t next_id = 0;
        std::deque<std::pair<int, int>> queue;
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                const std::size_t at = static_cast<std::size_t>(j) * n + i;
                if (labels[at] != -1 || !in_band(i, j)) continue;
                labels[at] = next_id;
                comp_rep[static_cast<std::size_t>(b)].push_back(field.node(i, j));
                queue.emplace_back(i, j);
                while (!queue.empty()) {
                    const auto [ci, cj] = queue.front();
                    queue.pop_front();
                    constexpr int di[4] = {1, -1, 0, 0};
                    constexpr int dj[4] = {0, 0, 1, -1};
                    for (int k = 0; k < 4; ++k) {
                        const int ni = ci + di[k], nj = cj + dj[k];
                        if (ni < 0 || nj < 0 || ni >= n || nj >= n) continue;
                        const std::size_t nat = static_cast<std::size_t>(nj) * n + ni;
                        if (labels[nat] != -1 || !in_band(ni, nj)) continue;
                        labels[nat] = next_id;
                        queue.emplace_back(ni, nj);
                    }
                }
                ++next_id;
            }
        }
        comp_count[static_cast<std::size_t>(b)] = next_id;
    }

    // vertex incidence: components with labelled nodes in a small ring
    // around each critical point, one band below and one above
    auto band_index_of_energy = [&](double e) {
        for (int b = 0; b < nb; ++b)
            if (std::abs(g.band_bounds_[static_cast<std::size_t>(b)] - e) < 1e-9) return b;
        return -1;
    };
    struct BandComp {
        int band, id;
        bool operator<(const BandComp& o) const {
            return band != o.band ? band < o.band : id < o.id;
        }
    };
    std::map<BandComp, std::vector<int>> incident_lo, incident_hi;  // vertex lists
    const int ring = 8;
    for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v) {
        const Vec2& zc = g.vertices[static_cast<std::size_t>(v)].z;
        const int ic = static_cast<int>(std::lround((zc.x() - opt.box.x0) / opt.box.width() * (n - 1)));
        const int jc = static_cast<int>(std::lround((zc.y() - opt.box.y0) / opt.box.height() * (n - 1)));
        const int vb = band_index_of_energy(g.vertices[static_cast<std::size_t>(v)].energy);
        for (int dj = -ring; dj <= ring; ++dj) {
            for (int di = -ring; di <= ring; ++di) {
                const int i = ic + di, j = jc + dj;
                if (i < 0 || j < 0 || i >= n || j >= n) continue;
                for (int b : {vb - 1, vb}) {
                    if (b < 0 || b >= nb) continue;
                    const std::int32_t id =
                        comp[static_cast<std::size_t>(b)]
                            [static_cast<std::size_t>(j) * n + static_cast<std::size_t>(i)];
                    if (id < 0) continue;
                    // vertex sits at the top of band vb-1 and bottom of band vb
                    auto& reg = (b == vb - 1) ? incident_hi[{b, id}] : incident_lo[{b, id}];
                    if (std::find(reg.begin(), reg.end(), v) == reg.end()) reg.push_back(v);
                }
            }
        }
    }

    // stitch band components into edges: adjacent components in consecutive
    // bands continue the same edge unless the contact happens at a vertex
    std::vector<int> offset(static_cast<std::size_t>(nb) + 1, 0);
    for (int b = 0; b < nb; ++b)
        offset[static_cast<std::size_t>(b) + 1] =
            offset[static_cast<std::size_t>(b)] + comp_count[static_cast<std::size_t>(b)];
    const int total = offset[static_cast<std::size_t>(nb)];
    std::vector<int> uf(static_cast<std::size_t>(total));
    std::iota(uf.begin(), uf.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (uf[static_cast<std::size_t>(a)] != a) {
            uf[static_cast<std::size_t>(a)] = uf[static_cast<std::size_t>(uf[static_cast<std::size_t>(a)])];
            a = uf[static_cast<std::size_t>(a)];
        }
        return a;
    };
    auto unite = [&](int a, int b) { uf[static_cast<std::size_t>(find(a))] = find(b); };

    auto mediated = [&](int b, std::int32_t low_id, std::int32_t high_id) {
        const auto lo_it = incident_hi.find({b, low_id});
        const auto hi_it = incident_lo.find({b + 1, high_id});
        if (lo_it == incident_hi.end() || hi_it == incident_lo.end()) return false;
        for (int v : lo_it->second)
            if (std::find(hi_it->second.begin(), hi_it->second.end(), v) != hi_it->second.end())
                return true;
        return false;
    };
    for (int b = 0; b + 1 < nb; ++b) {
        const auto& lo = comp[static_cast<std::size_t>(b)];
        const auto& hi = comp[static_cast<std::size_t>(b) + 1];
        std::vector<std::pair<std::int32_t, std::int32_t>> seen;
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                const std::size_t at = static_cast<std::size_t>(j) * n + i;
                if (lo[at] < 0) continue;
                constexpr int di[4] = {1, -1, 0, 0};
                constexpr int dj[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    const int ni = i + di[k], nj = j + dj[k];
                    if (ni < 0 || nj < 0 || ni >= n || nj >= n) continue;
                    const std::int32_t h =
                        hi[static_cast<std::size_t>(nj) * n + static_cast<std::size_t>(ni)];
                    if (h < 0) continue;
                    const auto pr = std::make_pair(lo[at], h);
                    if (std::find(seen.begin(), seen.end(), pr) != seen.end()) continue;
                    seen.push_back(pr);
                }
            }
        }
        for (const auto& [a, c] : seen)
            if (!mediated(b, a, c))
                unite(offset[static_cast<std::size_t>(b)] + a,
                      offset[static_cast<std::size_t>(b) + 1] + c);
    }

    // assemble edges from the union-find chains
    std::map<int, int> root_to_edge;
    std::vector<std::vector<BandComp>> edge_members;
    for (int b = 0; b < nb; ++b) {
        for (int id = 0; id < comp_count[static_cast<std::size_t>(b)]; ++id) {
            const int root = find(offset[static_cast<std::size_t>(b)] + id);
            auto [it, fresh] = root_to_edge.try_emplace(root, static_cast<int>(edge_members.size()));
            if (fresh) edge_members.emplace_back();
            edge_members[static_cast<std::size_t>(it->second)].push_back({b, id});
        }
    }

    g.band_edge_.assign(static_cast<std::size_t>(nb), {});
    for (int b = 0; b < nb; ++b)
        g.band_edge_[static_cast<std::size_t>(b)].assign(static_cast<std::size_t>(n) * n, -1);

    for (std::size_t e = 0; e < edge_members.size(); ++e) {
        auto& members = edge_members[e];
        std::sort(members.begin(), members.end());
        ReebEdge edge;
        edge.e_lo = g.band_bounds_[static_cast<std::size_t>(members.front().band)];
        edge.e_hi = g.band_bounds_[static_cast<std::size_t>(members.back().band) + 1];
        const auto vlo_it = incident_lo.find(members.front());
        const auto vhi_it = incident_hi.find(members.back());
        auto two_criticals = [&](const std::vector<int>& vs, const char* side) {
            std::string msg = "build_reeb_graph: level component touches two critical points (";
            msg += side;
            for (int v : vs) msg += " v" + std::to_string(v);
            return GeometryError(msg + ")");
        };
        if (vlo_it != incident_lo.end()) {
            if (vlo_it->second.size() > 1) throw two_criticals(vlo_it->second, "lower");
            edge.v_lo = vlo_it->second.front();
        }
        if (vhi_it != incident_hi.end()) {
            if (vhi_it->second.size() > 1) throw two_criticals(vhi_it->second, "upper");
            edge.v_hi = vhi_it->second.front();
        }
        for (const auto& m : members) {
            const double mid = 0.5 * (g.band_bounds_[static_cast<std::size_t>(m.band)] +
                                      g.band_bounds_[static_cast<std::size_t>(m.band) + 1]);
            edge.band_reps.emplace_back(mid, comp_rep[static_cast<std::size_t>(m.band)]
                                                     [static_cast<std::size_t>(m.id)]);
            auto& grid = g.band_edge_[static_cast<std::size_t>(m.band)];
            const auto& labels = comp[static_cast<std::size_t>(m.band)];
            for (std::size_t k = 0; k < labels.size(); ++k)
                if (labels[k] == m.id) grid[k] = static_cast<std::int32_t>(e);
        }
        g.edges.push_back(std::move(edge));
    }
    return g;
}

inline std::string ReebGraph::describe() const {
    std::string s;
    auto kind_name = [](CriticalKind k) {
        switch (k) {
            case CriticalKind::minimum: return "minimum";
            case CriticalKind::saddle: return "saddle";
            default: return "maximum";
        }
    };
    char buf[160];
    std::snprintf(buf, sizeof buf, "reeb graph: %zu vertices, %zu edges, energy cap %.6g\n",
                  vertices.size(), edges.size(), energy_cap);
    s += buf;
    for (std::size_t v = 0; v < vertices.size(); ++v) {
        std::snprintf(buf, sizeof buf, "  vertex %zu: %s at (%.6g, %.6g), U = %.6g\n", v,
                      kind_name(vertices[v].kind), vertices[v].z.x(), vertices[v].z.y(),
                      vertices[v].energy);
        s += buf;
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
        std::snprintf(buf, sizeof buf, "  edge %zu: [%.6g, %.6g] vertices (%d, %d)\n", e,
                      edges[e].e_lo, edges[e].e_hi, edges[e].v_lo, edges[e].v_hi);
        s += buf;
    }
    return s;
}

}  // namespace irlang
