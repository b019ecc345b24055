#pragma once

#include "irlang/potentials.hpp"
#include "irlang/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

namespace irlang {

struct ContourOptions {
    Box2 box{};
    int grid_n = 2048;           // marching-squares lattice per axis
    double near_critical_grad = 1e-4;
};

struct LevelLoop {
    std::vector<Vec2> pts;
    bool closed = false;

    double length() const {
        double s = 0.0;
        for (std::size_t k = 0; k + 1 < pts.size(); ++k) s += (pts[k + 1] - pts[k]).norm();
        if (closed && pts.size() > 1) s += (pts.front() - pts.back()).norm();
        return s;
    }
};

// Scalar field sampled on an n x n node lattice; levels are extracted by
// marching squares with linear interpolation along cell edges. Row ranges are
// cached so level extraction skips rows the level set cannot cross.
class SampledField {
  public:
    template <PotentialModel P>
    static SampledField sample(const P& pot, const Box2& box, int n) {
        SampledField f;
        f.box_ = box;
        f.n_ = n;
        f.v_.resize(static_cast<std::size_t>(n) * n);
        f.row_min_.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
        f.row_max_.assign(static_cast<std::size_t>(n), -std::numeric_limits<double>::infinity());
        for (int j = 0; j < n; ++j) {
            const double y = box.y0 + j * box.height() / (n - 1);
            for (int i = 0; i < n; ++i) {
                const double x = box.x0 + i * box.width() / (n - 1);
                const double u = pot.energy(Vec2{x, y});
                f.v_[f.idx(i, j)] = u;
                f.row_min_[static_cast<std::size_t>(j)] = std::min(f.row_min_[static_cast<std::size_t>(j)], u);
                f.row_max_[static_cast<std::size_t>(j)] = std::max(f.row_max_[static_cast<std::size_t>(j)], u);
            }
        }
        return f;
    }

    int n() const { return n_; }
    const Box2& box() const { return box_; }
    double value(int i, int j) const { return v_[idx(i, j)]; }
    Vec2 node(int i, int j) const {
        return {box_.x0 + i * box_.width() / (n_ - 1), box_.y0 + j * box_.height() / (n_ - 1)};
    }

    std::vector<LevelLoop> extract(double level) const;

  private:
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(n_) +
               static_cast<std::size_t>(i);
    }

    Box2 box_{};
    int n_ = 0;
    std::vector<double> v_;
    std::vector<double> row_min_, row_max_;
};

namespace detail {

// A crossing point lives on a unique lattice edge; the key makes stitching a
// matter of matching edge ids, with no floating-point comparisons.
inline std::uint64_t edge_key(int i, int j, int n, bool horizontal) {
    return (static_cast<std::uint64_t>(j) * static_cast<std::uint64_t>(n) +
            static_cast<std::uint64_t>(i)) * 2ull + (horizontal ? 0ull : 1ull);
}

struct CrossingGraph {
    std::unordered_map<std::uint64_t, Vec2> point;
    std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> adj;

    void add_segment(std::uint64_t a, std::uint64_t b) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
};

}  // namespace detail

inline std::vector<LevelLoop> SampledField::extract(double level) const {
    detail::CrossingGraph g;
    const int n = n_;
    auto inside = [&](int i, int j) { return value(i, j) > level; };
    auto cross_h = [&](int i, int j) -> Vec2 {
        const double a = value(i, j), b = value(i + 1, j);
        double t = (level - a) / (b - a);
        t = std::clamp(t, 0.0, 1.0);
        const Vec2 pa = node(i, j), pb = node(i + 1, j);
        return pa + t * (pb - pa);
    };
    auto cross_v = [&](int i, int j) -> Vec2 {
        const double a = value(i, j), b = value(i, j + 1);
        double t = (level - a) / (b - a);
        t = std::clamp(t, 0.0, 1.0);
        const Vec2 pa = node(i, j), pb = node(i, j + 1);
        return pa + t * (pb - pa);
    };

    for (int j = 0; j + 1 < n; ++j) {
        if (level <= std::min(row_min_[static_cast<std::size_t>(j)],
                              row_min_[static_cast<std::size_t>(j + 1)]) ||
            level >= std::max(row_max_[static_cast<std::size_t>(j)],
                              row_max_[static_cast<std::size_t>(j + 1)]))
            continue;
        for (int i = 0; i + 1 < n; ++i) {
            const int m = (inside(i, j) ? 1 : 0) | (inside(i + 1, j) ? 2 : 0) |
                          (inside(i + 1, j + 1) ? 4 : 0) | (inside(i, j + 1) ? 8 : 0);
            if (m == 0 || m == 15) continue;

            const std::uint64_t e0 = detail::edge_key(i, j, n, true);
            const std::uint64_t e1 = detail::edge_key(i + 1, j, n, false);
            const std::uint64_t e2 = detail::edge_key(i, j + 1, n, true);
            const std::uint64_t e3 = detail::edge_key(i, j, n, false);
            auto put = [&](std::uint64_t k) {
                if (g.point.count(k)) return;
                if (k == e0) g.point.emplace(k, cross_h(i, j));
                else if (k == e1) g.point.emplace(k, cross_v(i + 1, j));
                else if (k == e2) g.point.emplace(k, cross_h(i, j + 1));
                else g.point.emplace(k, cross_v(i, j));
            };
            auto seg = [&](std::uint64_t a, std::uint64_t b) {
                put(a);
                put(b);
                g.add_segment(a, b);
            };

            switch (m) {
                case 1: seg(e0, e3); break;
                case 2: seg(e0, e1); break;
                case 3: seg(e3, e1); break;
                case 4: seg(e1, e2); break;
                case 6: seg(e0, e2); break;
                case 7: seg(e3, e2); break;
                case 8: seg(e2, e3); break;
                case 9: seg(e0, e2); break;
                case 11: seg(e1, e2); break;
                case 12: seg(e3, e1); break;
                case 13: seg(e0, e1); break;
                case 14: seg(e0, e3); break;
                case 5:
                case 10: {
                    const double center = 0.25 * (value(i, j) + value(i + 1, j) +
                                                  value(i, j + 1) + value(i + 1, j + 1));
                    const bool cin = center > level;
                    const bool diag02 = (m == 5);
                    if (diag02 == cin) {
                        seg(e0, e1);
                        seg(e2, e3);
                    } else {
                        seg(e0, e3);
                        seg(e1, e2);
                    }
                    break;
                }
                default: break;
            }
        }
    }

    // walk the crossing graph into chains; open chains (curves leaving the
    // box) are traced from their free ends, everything else is a loop
    std::vector<LevelLoop> loops;
    std::unordered_map<std::uint64_t, bool> used;
    used.reserve(g.point.size());
    auto walk = [&](std::uint64_t start) -> LevelLoop {
        LevelLoop loop;
        std::uint64_t prev = start, cur = start;
        loop.pts.push_back(g.point.at(cur));
        used[cur] = true;
        for (;;) {
            const auto& a = g.adj.at(cur);
            std::uint64_t next = 0;
            bool found = false;
            for (std::uint64_t cand : a) {
                if (cand == prev && cur != start) continue;
                auto it = used.find(cand);
                if (it != used.end() && it->second) {
                    if (cand == start && prev != start) loop.closed = true;
                    continue;
                }
                next = cand;
                found = true;
                break;
            }
            if (!found) break;
            loop.pts.push_back(g.point.at(next));
            used[next] = true;
            prev = cur;
            cur = next;
        }
        return loop;
    };
    for (const auto& [key, nbrs] : g.adj) {
        if (nbrs.size() == 1 && !used[key]) loops.push_back(walk(key));
    }
    for (const auto& [key, nbrs] : g.adj) {
        if (!used[key]) {
            LevelLoop loop = walk(key);
            if (loop.pts.size() >= 3) loops.push_back(std::move(loop));
        }
    }
    return loops;
}

// Midpoint line integral along the polyline.
template <class G>
double line_integral(const LevelLoop& loop, G&& g) {
    double s = 0.0;
    const std::size_t m = loop.pts.size();
    if (m < 2) return 0.0;
    const std::size_t last = loop.closed ? m : m - 1;
    for (std::size_t k = 0; k < last; ++k) {
        const Vec2& a = loop.pts[k];
        const Vec2& b = loop.pts[(k + 1) % m];
        s += g(Vec2(0.5 * (a + b))) * (b - a).norm();
    }
    return s;
}

inline const LevelLoop* nearest_loop(const std::vector<LevelLoop>& loops, const Vec2& seed) {
    const LevelLoop* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& l : loops) {
        for (const Vec2& p : l.pts) {
            const double d = (p - seed).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = &l;
            }
        }
    }
    return best;
}

struct ContourIntegralResult {
    double value = 0.0;
    double coarse_value = 0.0;     // pre-extrapolation value on the base grid
    double min_grad = 0.0;         // smallest |grad U| seen along the curve
    bool near_critical = false;
};

// Line integral of g along the closed level-set component through the seed
// point, with one step of Richardson extrapolation (h^2 -> h^4) across a
// grid doubling.
template <PotentialModel P, class G>
ContourIntegralResult contour_integral(const P& pot, double level, const Vec2& seed, G&& g,
                                       const ContourOptions& opt = {}) {
    auto eval = [&](int n) -> std::pair<double, double> {
        const SampledField f = SampledField::sample(pot, opt.box, n);
        const auto loops = f.extract(level);
        const LevelLoop* loop = nearest_loop(loops, seed);
        if (!loop) throw GeometryError("contour_integral: no level curve at this energy");
        if (!loop->closed)
            throw GeometryError("contour_integral: level curve did not close inside the box");
        double min_grad = std::numeric_limits<double>::infinity();
        for (const Vec2& p : loop->pts) min_grad = std::min(min_grad, pot.gradient(p).norm());
        return {line_integral(*loop, g), min_grad};
    };
    const auto [coarse, mg1] = eval(opt.grid_n);
    const auto [fine, mg2] = eval(2 * opt.grid_n);
    ContourIntegralResult r;
    r.coarse_value = coarse;
    r.value = (4.0 * fine - coarse) / 3.0;
    r.min_grad = std::min(mg1, mg2);
    r.near_critical = r.min_grad < opt.near_critical_grad;
    return r;
}

}  // namespace irlang
