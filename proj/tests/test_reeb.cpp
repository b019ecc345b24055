#include <catch2/catch_amalgamated.hpp>

#include "irlang/graph_averages.hpp"
#include "irlang/integrators.hpp"
#include "irlang/reeb.hpp"

#include <cmath>

using namespace irlang;

namespace {
ContourOptions fast_contours() {
    ContourOptions opt;
    opt.grid_n = 1024;
    return opt;
}
}  // namespace

TEST_CASE("critical points of the built-in potentials", "[reeb]") {
    DoubleWell dw;
    const auto crit = find_critical_points(dw);
    REQUIRE(crit.size() == 3);
    CHECK(crit[0].kind == CriticalKind::minimum);
    CHECK(crit[1].kind == CriticalKind::minimum);
    CHECK(crit[2].kind == CriticalKind::saddle);
    CHECK(std::abs(crit[0].z.x()) == Catch::Approx(1.0).margin(1e-8));
    CHECK(crit[2].z.norm() < 1e-8);
    for (const auto& c : crit) CHECK(dw.gradient(c.z).norm() < 1e-10);

    TiltedDoubleWell tw;
    const auto tc = find_critical_points(tw);
    REQUIRE(tc.size() == 3);
    // roots of x^3 - x - 1/8, frozen from an independent root finder
    CHECK(tc[0].z.x() == Catch::Approx(1.05745377073863).margin(1e-8));
    CHECK(tc[1].z.x() == Catch::Approx(-0.93040292655585).margin(1e-8));
    CHECK(tc[2].z.x() == Catch::Approx(-0.12705084418253).margin(1e-8));
    CHECK(tc[2].kind == CriticalKind::saddle);
    CHECK(tc[2].energy == Catch::Approx(0.25787553739024).margin(1e-10));

    QuadraticBowl bowl;
    const auto bc = find_critical_points(bowl);
    REQUIRE(bc.size() == 1);
    CHECK(bc[0].kind == CriticalKind::minimum);
    CHECK(bc[0].z.norm() < 1e-10);
}

TEST_CASE("double well graph topology", "[reeb]") {
    DoubleWell dw;
    const ReebGraph g = build_reeb_graph(dw, find_critical_points(dw));
    REQUIRE(g.vertices.size() == 3);
    REQUIRE(g.edges.size() == 3);
    int exterior = 0, interior = 0;
    for (const auto& v : g.vertices) (v.interior() ? interior : exterior)++;
    CHECK(exterior == 2);
    CHECK(interior == 1);

    int wells = 0, outer = 0;
    for (const auto& e : g.edges) {
        if (e.e_lo == Catch::Approx(0.0).margin(1e-12) &&
            e.e_hi == Catch::Approx(0.25).margin(1e-9))
            ++wells;
        if (e.v_hi == -1) {
            ++outer;
            CHECK(e.e_lo == Catch::Approx(0.25).margin(1e-9));
            CHECK(e.e_hi > 2.0);
        }
    }
    CHECK(wells == 2);
    CHECK(outer == 1);
}

TEST_CASE("bowl graph is a single edge", "[reeb]") {
    QuadraticBowl bowl;
    const ReebGraph g = build_reeb_graph(bowl, find_critical_points(bowl));
    CHECK(g.vertices.size() == 1);
    CHECK(g.edges.size() == 1);
    CHECK(g.edges[0].v_hi == -1);
}

TEST_CASE("tilted graph has the double-well topology", "[reeb]") {
    TiltedDoubleWell tw;
    const ReebGraph g = build_reeb_graph(tw, find_critical_points(tw));
    CHECK(g.vertices.size() == 3);
    CHECK(g.edges.size() == 3);
    int below = 0;
    for (const auto& e : g.edges)
        if (e.v_hi >= 0 && g.vertices[static_cast<std::size_t>(e.v_hi)].interior()) ++below;
    CHECK(below == 2);
}

TEST_CASE("graph of a potential with an interior maximum", "[reeb]") {
    Rbs3 p;
    const auto crit = find_critical_points(p);
    REQUIRE(crit.size() == 5);
    int mins = 0, saddles = 0, maxs = 0;
    for (const auto& c : crit) {
        if (c.kind == CriticalKind::minimum) ++mins;
        if (c.kind == CriticalKind::saddle) ++saddles;
        if (c.kind == CriticalKind::maximum) ++maxs;
    }
    CHECK(mins == 2);
    CHECK(saddles == 2);
    CHECK(maxs == 1);

    const ReebGraph g = build_reeb_graph(p, crit);
    // two well edges, the section between the saddles, the loop shrinking to
    // the maximum, and the unbounded outer edge
    CHECK(g.edges.size() == 5);
    int capped_by_max = 0;
    for (const auto& e : g.edges)
        if (e.v_hi >= 0 &&
            g.vertices[static_cast<std::size_t>(e.v_hi)].kind == CriticalKind::maximum)
            ++capped_by_max;
    CHECK(capped_by_max == 1);
}

TEST_CASE("projection onto the graph", "[reeb]") {
    DoubleWell dw;
    const ReebGraph g = build_reeb_graph(dw, find_critical_points(dw));

    const ProjectResult left = g.project(dw, Vec2{-1.0, 0.1});
    CHECK(left.x == Catch::Approx(0.01));
    CHECK_FALSE(left.at_vertex);
    const ProjectResult right = g.project(dw, Vec2{1.0, 0.1});
    CHECK_FALSE(right.at_vertex);
    CHECK(left.edge != right.edge);

    const ProjectResult outer = g.project(dw, Vec2{0.0, 1.0});
    CHECK(outer.x == Catch::Approx(1.25));
    CHECK(g.edges[static_cast<std::size_t>(outer.edge)].v_hi == -1);

    const ProjectResult near_saddle = g.project(dw, Vec2{0.0, 0.5});  // U = 0.5^2 + 0.25
    CHECK_FALSE(near_saddle.at_vertex);
    const ProjectResult at_saddle = g.project(dw, Vec2{0.0, std::sqrt(0.25 + 2e-4) * 0.0 + 0.0});
    CHECK(at_saddle.at_vertex);  // U(0,0) = 0.25 exactly at the vertex energy
}

TEST_CASE("sign of x matches the flood-fill component below the saddle", "[reeb]") {
    for (int which = 0; which < 2; ++which) {
        const bool tilted = which == 1;
        auto run = [&](const auto& pot, double x_saddle) {
            const ReebGraph g = build_reeb_graph(pot, find_critical_points(pot));
            NormalStream rng(42);
            int checked = 0;
            while (checked < 200) {
                const Vec2 z{4.0 * rng.uniform() - 2.0, 2.0 * rng.uniform() - 1.0};
                const ProjectResult q = g.project(pot, z);
                if (q.at_vertex) continue;
                const ReebEdge& e = g.edges[static_cast<std::size_t>(q.edge)];
                if (e.v_hi < 0 || !g.vertices[static_cast<std::size_t>(e.v_hi)].interior())
                    continue;  // only the well edges have the sign fast path
                const double rep_x = e.band_reps.front().second.x();
                REQUIRE((z.x() < x_saddle) == (rep_x < x_saddle));
                ++checked;
            }
        };
        if (tilted) run(TiltedDoubleWell{}, -0.12705084418253);
        else run(DoubleWell{}, 0.0);
    }
}

TEST_CASE("tilted projection right of the saddle", "[reeb]") {
    TiltedDoubleWell tw;
    const ReebGraph g = build_reeb_graph(tw, find_critical_points(tw));
    // just right of the saddle, below the saddle energy: the deep right well
    const Vec2 z{0.05, 0.0};
    const ProjectResult q = g.project(tw, z);
    REQUIRE_FALSE(q.at_vertex);
    const ReebEdge& e = g.edges[static_cast<std::size_t>(q.edge)];
    CHECK(e.band_reps.front().second.x() > -0.127);
    CHECK(g.vertices[static_cast<std::size_t>(e.v_lo)].z.x() == Catch::Approx(1.05745).margin(1e-3));
}

TEST_CASE("bowl edge coefficients match the closed circle averages", "[reeb][coeffs]") {
    QuadraticBowl bowl;
    const auto drift = j_drift(bowl);
    const ReebGraph g = build_reeb_graph(bowl, find_critical_points(bowl));
    const double beta = 0.25;
    const EdgeCoefficients c = edge_coefficients(bowl, drift, g, 0, beta, 32, fast_contours());
    for (std::size_t k = 0; k < c.x.size(); ++k) {
        const double x = c.x[k];
        REQUIRE(c.period[k] == Catch::Approx(2.0 * M_PI).epsilon(1e-5));
        REQUIRE(c.drift[k] == Catch::Approx(-2.0 * x + 2.0 * beta).margin(2e-5));
        REQUIRE(c.diffusion[k] == Catch::Approx(4.0 * beta * x).margin(2e-5));
    }
    // interpolation between nodes
    const double xm = 0.5 * (c.x[3] + c.x[4]);
    CHECK(c.drift_at(xm) == Catch::Approx(-2.0 * xm + 2.0 * beta).margin(1e-3));
}

TEST_CASE("double well coefficients: positivity, continuity, small-oscillation limit",
          "[reeb][coeffs]") {
    DoubleWell dw;
    const auto drift = j_drift(dw);
    const ReebGraph g = build_reeb_graph(dw, find_critical_points(dw));
    const double beta = 0.1;
    // continuity in the form that catches a wrong-component extraction: each
    // interior node must sit within 5% of the line through its neighbours
    // (the diffusion vanishes linearly at a minimum and the period diverges
    // logarithmically at a saddle, so adjacent-node ratios are the wrong
    // yardstick near the vertices)
    auto locally_linear = [](const std::vector<double>& xs, const std::vector<double>& ys) {
        // the clustered end nodes resolve the singular parts themselves;
        // start the sweep a few nodes in
        for (std::size_t k = 3; k + 3 < xs.size(); ++k) {
            const double w = (xs[k] - xs[k - 1]) / (xs[k + 1] - xs[k - 1]);
            const double lin = ys[k - 1] * (1.0 - w) + ys[k + 1] * w;
            const double denom =
                std::max({std::abs(ys[k - 1]), std::abs(ys[k]), std::abs(ys[k + 1])});
            REQUIRE(std::abs(ys[k] - lin) < 0.05 * denom);
        }
    };
    for (int e = 0; e < 3; ++e) {
        const EdgeCoefficients c = edge_coefficients(dw, drift, g, e, beta, 48, fast_contours());
        for (std::size_t k = 0; k < c.x.size(); ++k) {
            REQUIRE(c.period[k] > 0.0);
            REQUIRE(c.diffusion[k] > 0.0);
        }
        locally_linear(c.x, c.period);
        locally_linear(c.x, c.diffusion);
        const ReebEdge& edge = g.edges[static_cast<std::size_t>(e)];
        if (edge.v_hi >= 0 && !g.vertices[static_cast<std::size_t>(edge.v_lo)].interior()) {
            // drift at the bottom of a well edge approaches beta tr D2U(min)
            const double expect = beta * dw.laplacian(Vec2{1.0, 0.0});
            CHECK(c.drift.front() == Catch::Approx(expect).margin(0.02));
        }
    }
}

TEST_CASE("stationary-shape identity links the averaged coefficients", "[reeb][coeffs]") {
    // zero-flux form: d/dx [diffusion * period * exp(-x/beta)] = 2 drift *
    // period * exp(-x/beta), checked by centred differences on the tabulation
    DoubleWell dw;
    const auto drift = j_drift(dw);
    const ReebGraph g = build_reeb_graph(dw, find_critical_points(dw));
    const double beta = 0.1;
    const EdgeCoefficients c = edge_coefficients(dw, drift, g, 0, beta, 48, fast_contours());
    auto flux = [&](std::size_t i) {
        return c.diffusion[i] * c.period[i] * std::exp(-c.x[i] / beta);
    };
    // three-point derivative on the non-uniform tabulation grid
    auto dflux = [&](std::size_t k) {
        const double x0 = c.x[k - 1], x1 = c.x[k], x2 = c.x[k + 1];
        return flux(k - 1) * (x1 - x2) / ((x0 - x1) * (x0 - x2)) +
               flux(k) * (2.0 * x1 - x0 - x2) / ((x1 - x0) * (x1 - x2)) +
               flux(k + 1) * (x1 - x0) / ((x2 - x0) * (x2 - x1));
    };
    for (std::size_t k = 4; k + 4 < c.x.size(); k += 5) {
        const double lhs = dflux(k);
        const double rhs = 2.0 * c.drift[k] * c.period[k] * std::exp(-c.x[k] / beta);
        REQUIRE(lhs == Catch::Approx(rhs).epsilon(0.03).margin(1e-6));
    }
}

TEST_CASE("gluing weights at the symmetric saddle", "[reeb][gluing]") {
    DoubleWell dw;
    const auto drift = j_drift(dw);
    const ReebGraph g = build_reeb_graph(dw, find_critical_points(dw));
    int saddle = -1;
    for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v)
        if (g.vertices[static_cast<std::size_t>(v)].interior()) saddle = v;
    const GluingWeights w = gluing_probabilities(dw, drift, g, saddle, 0.1, 1e-4, fast_contours());
    REQUIRE(w.edges.size() == 3);

    double b_low[2] = {0, 0}, b_up = 0;
    int lows = 0;
    for (std::size_t k = 0; k < w.edges.size(); ++k) {
        const ReebEdge& e = g.edges[static_cast<std::size_t>(w.edges[k])];
        if (e.v_hi == saddle) b_low[lows++] = w.b[k];
        else b_up = w.b[k];
    }
    REQUIRE(lows == 2);
    // exact symmetry of the lattice makes the two well fluxes identical
    CHECK(b_low[0] == Catch::Approx(b_low[1]).epsilon(1e-10));
    CHECK(b_low[0] / (b_low[0] + b_low[1]) == Catch::Approx(0.5).margin(1e-3));
    // the separatrix bounding the outer edge is the union of the two loops
    CHECK(b_up == Catch::Approx(b_low[0] + b_low[1]).epsilon(1e-3));
    double psum = 0.0;
    for (double p : w.p) psum += p;
    CHECK(psum == Catch::Approx(1.0).margin(1e-14));
    for (double b : w.b) CHECK(b > 0.0);
}

TEST_CASE("gluing weights at the tilted saddle", "[reeb][gluing]") {
    TiltedDoubleWell tw;
    const auto drift = j_drift(tw);
    const ReebGraph g = build_reeb_graph(tw, find_critical_points(tw));
    int saddle = -1;
    for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v)
        if (g.vertices[static_cast<std::size_t>(v)].interior()) saddle = v;
    const GluingWeights w = gluing_probabilities(tw, drift, g, saddle, 0.1, 1e-4, fast_contours());

    // frozen from an adaptive 1d reduction of the loop integrals
    double b_left = 0, b_right = 0;
    for (std::size_t k = 0; k < w.edges.size(); ++k) {
        const ReebEdge& e = g.edges[static_cast<std::size_t>(w.edges[k])];
        if (e.v_hi != saddle) continue;
        if (e.band_reps.front().second.x() < -0.127) b_left = w.b[k];
        else b_right = w.b[k];
    }
    CHECK(b_left == Catch::Approx(0.3580953).epsilon(5e-3));
    CHECK(b_right == Catch::Approx(0.9864139).epsilon(5e-3));
    CHECK(b_left / (b_left + b_right) == Catch::Approx(0.26634).margin(2e-3));
}

TEST_CASE("descent counting with hysteresis", "[reeb][transitions]") {
    DoubleWell dw;
    const ReebGraph g = build_reeb_graph(dw, find_critical_points(dw));
    int saddle = -1;
    for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v)
        if (g.vertices[static_cast<std::size_t>(v)].interior()) saddle = v;

    TransitionCounter counter(g, saddle, 5e-3);
    // synthetic path: rise above the saddle, dip into the band (no count),
    // rise again, then descend into the left well exactly once
    const Vec2 up{0.0, 0.8};         // U = 0.89
    const Vec2 band{0.0, 0.045};     // U = 0.252, inside the hysteresis band
    const Vec2 left{-1.0, 0.05};     // U well below the band, left well
    counter.observe(dw, 0.0, left);    // below band but not armed: no count
    counter.observe(dw, 1.0, up);      // armed
    counter.observe(dw, 2.0, band);    // inside hysteresis: nothing
    counter.observe(dw, 3.0, up);      // still armed
    counter.observe(dw, 4.0, left);    // fires once
    counter.observe(dw, 5.0, left);    // disarmed: nothing
    REQUIRE(counter.total() == 1);
    long left_count = 0;
    for (const auto& [e, c] : counter.counts())
        if (g.edges[static_cast<std::size_t>(e)].band_reps.front().second.x() < 0.0)
            left_count = c;
    CHECK(left_count == 1);
}

TEST_CASE("short stiff run splits descents evenly in the symmetric well",
          "[reeb][transitions][mc]") {
    DoubleWell dw;
    const auto drift = j_drift(dw);
    const ReebGraph g = build_reeb_graph(dw, find_critical_points(dw));
    int saddle = -1;
    for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v)
        if (g.vertices[static_cast<std::size_t>(v)].interior()) saddle = v;
    TransitionCounter counter(g, saddle, 5e-3);

    IntegratorParams p;
    p.eps = 1e-5;
    p.tau = 5e-7;
    p.delta = 5e-3;
    p.seed = 2718;
    simulate(Vec2{0, 0}, Scheme::hmm, p, dw, drift, nullptr, 420.0,
             [&](double t, const Vec2& z) {
                 if (t >= 20.0) counter.observe(dw, t, z);
             });
    REQUIRE(counter.total() > 600);
    const auto& counts = counter.counts();
    REQUIRE(counts.size() == 2);
    const double frac =
        static_cast<double>(counts.begin()->second) / static_cast<double>(counter.total());
    const double se = std::sqrt(0.25 / static_cast<double>(counter.total()));
    CHECK(std::abs(frac - 0.5) < 3.0 * se + 0.01);
}

TEST_CASE("degenerate critical points are rejected", "[reeb]") {
    struct Quartic {
        double energy(const Vec2& z) const { return 0.25 * std::pow(z.squaredNorm(), 2); }
        Vec2 gradient(const Vec2& z) const { return z.squaredNorm() * z; }
        double laplacian(const Vec2& z) const { return 4.0 * z.squaredNorm(); }
        Mat2 hessian(const Vec2& z) const {
            return z.squaredNorm() * Mat2::Identity() + 2.0 * z * z.transpose();
        }
    };
    CHECK_THROWS_AS(find_critical_points(Quartic{}), GeometryError);
}

TEST_CASE("admissible regularization strength", "[reeb]") {
    DoubleWell dw;
    const auto crit = find_critical_points(dw);
    // Hessian eigenvalues at the critical points are {2, 2} and {-1, 2}
    CHECK(kappa_upper_bound(crit) == Catch::Approx(0.5));
    CHECK(kappa_upper_bound(crit, 2.0) == Catch::Approx(0.25));
    CHECK_THROWS_AS(kappa_upper_bound({}, 1.0), GeometryError);
}
