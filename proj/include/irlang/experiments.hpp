#pragma once

#include "irlang/config.hpp"
#include "irlang/graph_limit.hpp"
#include "irlang/quadrature.hpp"
#include "irlang/sampler.hpp"

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace irlang {

// scientific notation with six significant digits, the tables' style
inline std::string sci(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.5e", v);
    return buf;
}

// Reference value the sampling error is measured against: closed form where
// one exists, grid quadrature otherwise.
template <PotentialModel P>
double true_average(const P& pot, double beta, const std::string& observable, const Box2& box) {
    if constexpr (std::is_same_v<P, DoubleWell>) {
        if (observable == "x+y^2") return 0.5 * beta;  // odd part vanishes, <y^2> = beta/2
    }
    const Observable f = make_observable(observable);
    const GibbsResult r = gibbs_average(pot, beta, f, GridSpec{box, 801, 801});
    if (!r.mass_ok)
        throw ConfigError("true_average: Gibbs mass not contained in the analysis box");
    return r.value;
}

struct TableRow {
    Scheme scheme;
    double eps, tau, delta;
};

// Sampling runs with kappa > 0 use the tangential projector as sigma; the
// admissibility bound on kappa is enforced up front.
template <PotentialModel P>
std::optional<Regularizer> make_regularizer(const P& pot, const ExperimentConfig& cfg) {
    if (cfg.kappa <= 0.0) return std::nullopt;
    const auto criticals = find_critical_points(pot, {.box = cfg.box()});
    const double bound = kappa_upper_bound(criticals);
    if (cfg.kappa >= bound)
        throw ConfigError("kappa = " + std::to_string(cfg.kappa) +
                          " exceeds the admissible bound " + std::to_string(bound));
    return tangential_regularizer(pot);
}

inline std::vector<TableRow> preset_rows(const ExperimentConfig& cfg) {
    std::vector<TableRow> rows;
    if (cfg.preset == "table1" || cfg.preset == "table3") {
        const double d = 5e-3;
        for (double e : {5.0, 5e-1, 1e-1}) rows.push_back({Scheme::em, e, 0.0, d});
        for (double e : {1e-2, 1e-3, 1e-4}) rows.push_back({Scheme::hmm, e, 10.0 * d * e, d});
    } else if (cfg.preset == "table2") {
        const double d = 1e-3;
        rows.push_back({Scheme::em, 5e-2, 0.0, d});
        for (double e : {1e-3, 1e-4, 1e-5}) rows.push_back({Scheme::hmm, e, 20.0 * d * e, d});
        for (double e : {1e-4, 1e-5}) rows.push_back({Scheme::hmm, e, 10.0 * d * e, d});
    } else if (cfg.preset.empty() || cfg.preset == "custom") {
        rows.push_back({scheme_from_string(cfg.scheme), cfg.eps, cfg.tau, cfg.delta});
    } else {
        throw ConfigError("unknown preset: " + cfg.preset);
    }
    return rows;
}

// Replicate-ensemble sweep over the preset's parameter rows; one CSV line per
// row in the layout of the published comparison tables.
inline std::string run_table(ExperimentConfig cfg) {
    if (cfg.preset == "table3") {
        cfg.potential = "rbs3";
        cfg.beta = 0.2;
        cfg.observable = "(x-1)^2+y^2";
    }
    return with_potential(cfg.potential, [&](const auto& pot) {
        const auto drift = j_drift(pot);
        const auto reg = make_regularizer(pot, cfg);
        const double ref = true_average(pot, cfg.beta, cfg.observable, cfg.quad_box());
        std::ostringstream os;
        os << cfg.provenance();
        os << "scheme,eps,tau,delta,mean_err,std_err,mean_avar,std_avar,divergence_fraction\n";
        for (const TableRow& row : preset_rows(cfg)) {
            IntegratorParams p = cfg.integrator();
            p.eps = row.eps;
            p.delta = row.delta;
            p.tau = row.scheme == Scheme::em ? row.delta : row.tau;
            if (row.scheme == Scheme::hmm && !p.hmm_regime_ok())
                os << "# warning: tau < delta < tau/eps violated for eps=" << sci(row.eps)
                   << "\n";
            if (cfg.n_replicates == 0) continue;
            const EnsembleStats st =
                replicate_ensemble(row.scheme, p, cfg.sampling(), pot, drift,
                                   reg ? &*reg : nullptr, cfg.z0(), ref, cfg.thread_count());
            os << (row.scheme == Scheme::em ? "em" : "hmm") << ',' << sci(row.eps) << ','
               << (row.scheme == Scheme::em ? std::string{} : sci(row.tau)) << ','
               << sci(row.delta) << ',' << sci(st.mean_err) << ',' << sci(st.std_err) << ','
               << sci(st.mean_avar) << ',' << sci(st.std_avar) << ','
               << sci(st.divergence_fraction) << "\n";
        }
        return os.str();
    });
}

struct TransitionReport {
    long total = 0;
    // per descending edge: count and a representative x-coordinate so the
    // wells can be told apart in output
    std::vector<int> edges;
    std::vector<long> counts;
    std::vector<double> rep_x;
    double vertex_energy = 0.0;
    StepStatus status = StepStatus::ok;

    double fraction(std::size_t k) const {
        return total > 0 ? static_cast<double>(counts[k]) / static_cast<double>(total) : 0.0;
    }
};

// One long trajectory; counts energy descents through each interior vertex.
// Only the lowest interior vertex is reported (the built-in double wells have
// exactly one).
inline TransitionReport run_transitions_report(const ExperimentConfig& cfg) {
    return with_potential(cfg.potential, [&](const auto& pot) {
        const auto drift = j_drift(pot);
        const auto criticals = find_critical_points(pot, {.box = cfg.box()});
        ReebOptions ropt;
        ropt.box = cfg.box();
        ropt.label_n = cfg.label_n;
        ropt.zeta_res = cfg.zeta_res;
        const ReebGraph g = build_reeb_graph(pot, criticals, ropt);
        int vertex = -1;
        for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v)
            if (g.vertices[static_cast<std::size_t>(v)].interior() &&
                (vertex < 0 || g.vertices[static_cast<std::size_t>(v)].energy <
                                   g.vertices[static_cast<std::size_t>(vertex)].energy))
                vertex = v;
        if (vertex < 0) throw GeometryError("transitions: potential has no interior vertex");

        TransitionCounter counter(g, vertex, cfg.hysteresis);
        const auto reg = make_regularizer(pot, cfg);
        const IntegratorParams p = cfg.integrator();
        NormalStream rng(p.seed);
        const SimResult sim = simulate(
            cfg.z0(), scheme_from_string(cfg.scheme), p, pot, drift,
            reg ? &*reg : nullptr, cfg.T_total,
            [&](double t, const Vec2& z) {
                if (t >= cfg.T_burn) counter.observe(pot, t, z);
            },
            rng);

        TransitionReport rep;
        rep.status = sim.status;
        rep.vertex_energy = g.vertices[static_cast<std::size_t>(vertex)].energy;
        rep.total = counter.total();
        for (const auto& [e, c] : counter.counts()) {
            rep.edges.push_back(e);
            rep.counts.push_back(c);
            rep.rep_x.push_back(g.edges[static_cast<std::size_t>(e)].band_reps.front().second.x());
        }
        return rep;
    });
}

inline std::string run_transitions(const ExperimentConfig& cfg) {
    const TransitionReport rep = run_transitions_report(cfg);
    std::ostringstream os;
    os << cfg.provenance();
    os << "vertex_energy," << sci(rep.vertex_energy) << "\n";
    os << "edge,rep_x,count,fraction\n";
    for (std::size_t k = 0; k < rep.edges.size(); ++k)
        os << rep.edges[k] << ',' << sci(rep.rep_x[k]) << ',' << rep.counts[k] << ','
           << sci(rep.fraction(k)) << "\n";
    os << "total," << rep.total << "\n";
    if (rep.status == StepStatus::diverged) os << "status,diverged\n";
    return os.str();
}

struct GraphAnalysis {
    std::string description;
    std::string coefficients_csv;
    std::string gluing_report;
};

inline GraphAnalysis run_graph_analysis(const ExperimentConfig& cfg) {
    return with_potential(cfg.potential, [&](const auto& pot) {
        const auto drift = j_drift(pot);
        const auto criticals = find_critical_points(pot, {.box = cfg.box()});
        ReebOptions ropt;
        ropt.box = cfg.box();
        ropt.label_n = cfg.label_n;
        ropt.zeta_res = cfg.zeta_res;
        const ReebGraph g = build_reeb_graph(pot, criticals, ropt);

        GraphAnalysis out;
        out.description = g.describe();

        ContourOptions copt;
        copt.box = cfg.box();
        copt.grid_n = cfg.contour_n;
        std::ostringstream cs;
        cs << cfg.provenance() << "edge,x,period,drift,diffusion\n";
        for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
            const EdgeCoefficients c =
                edge_coefficients(pot, drift, g, e, cfg.beta, cfg.n_energies, copt);
            for (std::size_t k = 0; k < c.x.size(); ++k)
                cs << e << ',' << sci(c.x[k]) << ',' << sci(c.period[k]) << ','
                   << sci(c.drift[k]) << ',' << sci(c.diffusion[k]) << "\n";
        }
        out.coefficients_csv = cs.str();

        std::ostringstream gs;
        for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v) {
            if (!g.vertices[static_cast<std::size_t>(v)].interior()) continue;
            const GluingWeights w = gluing_probabilities(pot, drift, g, v, cfg.beta, cfg.eta, copt);
            gs << "vertex " << v << " (U = " << sci(g.vertices[static_cast<std::size_t>(v)].energy)
               << ")\n";
            for (std::size_t k = 0; k < w.edges.size(); ++k)
                gs << "  edge " << w.edges[k] << ": b = " << sci(w.b[k])
                   << ", p = " << sci(w.p[k]) << "\n";
        }
        out.gluing_report = gs.str();
        return out;
    });
}

inline std::string run_gibbs(const ExperimentConfig& cfg) {
    return with_potential(cfg.potential, [&](const auto& pot) {
        const Observable f = make_observable(cfg.observable);
        const GibbsResult r =
            gibbs_average(pot, cfg.beta, f, GridSpec{cfg.quad_box(), 801, 801});
        std::ostringstream os;
        os << cfg.provenance();
        os << "average," << sci(r.value) << "\n";
        os << "converged," << (r.converged ? 1 : 0) << "\n";
        os << "last_rel_change," << sci(r.last_rel_change) << "\n";
        os << "grid," << r.nx_final << "x" << r.ny_final << "\n";
        os << "mass_contained," << (r.mass_ok ? 1 : 0) << "\n";
        os << "boundary_ratio," << sci(r.boundary_ratio) << "\n";
        return os.str();
    });
}

// Everything needed to run the limiting diffusion for one potential.
template <PotentialModel P>
GraphDiffusion make_graph_diffusion(const P& pot, const ExperimentConfig& cfg,
                                    const ReebGraph& g) {
    const auto drift = j_drift(pot);
    ContourOptions copt;
    copt.box = cfg.box();
    copt.grid_n = cfg.contour_n;
    std::vector<EdgeCoefficients> coeffs;
    for (int e = 0; e < static_cast<int>(g.edges.size()); ++e)
        coeffs.push_back(edge_coefficients(pot, drift, g, e, cfg.beta, cfg.n_energies, copt));
    std::map<int, GluingWeights> gluing;
    for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v)
        if (g.vertices[static_cast<std::size_t>(v)].interior())
            gluing[v] = gluing_probabilities(pot, drift, g, v, cfg.beta, cfg.eta, copt);
    GraphDiffusion y(g, std::move(coeffs), std::move(gluing));
    y.dt_edge = cfg.dt_edge;
    y.dt_vertex = cfg.dt_vertex;
    return y;
}

// Samples of the limiting diffusion started from the projection of z0,
// written as (t, x, edge) rows at the comparison time.
inline std::string run_ylimit(const ExperimentConfig& cfg) {
    return with_potential(cfg.potential, [&](const auto& pot) {
        const auto criticals = find_critical_points(pot, {.box = cfg.box()});
        ReebOptions ropt;
        ropt.box = cfg.box();
        ropt.label_n = cfg.label_n;
        ropt.zeta_res = cfg.zeta_res;
        const ReebGraph g = build_reeb_graph(pot, criticals, ropt);
        const GraphDiffusion y = make_graph_diffusion(pot, cfg, g);

        const ProjectResult q0 = g.project(pot, cfg.z0());
        GraphState s0{q0.x, q0.edge};
        if (q0.at_vertex) {
            // start on an adjacent edge right at the vertex energy
            const auto adj = g.incident_edges(q0.vertex);
            s0.edge = adj.front();
        }
        const auto states = y.ensemble(s0, cfg.t_compare, static_cast<std::size_t>(cfg.n_samples),
                                       cfg.seed, cfg.thread_count());
        std::ostringstream os;
        os << cfg.provenance();
        if (y.clamped_queries())
            os << "# warning: coefficient tables extended beyond their range\n";
        os << "t,x,edge\n";
        for (const GraphState& s : states)
            os << sci(cfg.t_compare) << ',' << sci(s.x) << ',' << s.edge << "\n";
        return os.str();
    });
}

struct CompareReport {
    LawComparison near;  // scheme at cfg.eps vs the graph limit
    LawComparison far;   // scheme at cfg.eps_far vs the graph limit
};

// Projected law of the split-step scheme at time t against the limiting
// diffusion, at the configured eps and at a far-from-limit eps.
inline CompareReport run_compare_report(const ExperimentConfig& cfg) {
    return with_potential(cfg.potential, [&](const auto& pot) {
        const auto drift = j_drift(pot);
        const auto criticals = find_critical_points(pot, {.box = cfg.box()});
        ReebOptions ropt;
        ropt.box = cfg.box();
        ropt.label_n = cfg.label_n;
        ropt.zeta_res = cfg.zeta_res;
        const ReebGraph g = build_reeb_graph(pot, criticals, ropt);
        const GraphDiffusion y = make_graph_diffusion(pot, cfg, g);

        const ProjectResult q0 = g.project(pot, cfg.z0());
        GraphState s0{q0.x, q0.edge};
        if (q0.at_vertex) s0.edge = g.incident_edges(q0.vertex).front();
        const auto ys = y.ensemble(s0, cfg.t_compare, static_cast<std::size_t>(cfg.n_samples),
                                   cfg.seed + 1, cfg.thread_count());

        auto project_ensemble = [&](const IntegratorParams& base) {
            std::vector<GraphState> out(static_cast<std::size_t>(cfg.n_samples));
            parallel_for_index(out.size(), cfg.thread_count(), [&](std::size_t r) {
                NormalStream rng(replicate_seed(base.seed, r));
                Vec2 z = cfg.z0();
                const SimResult sim = simulate(z, Scheme::hmm, base, pot, drift, nullptr,
                                               cfg.t_compare, [](double, const Vec2&) {}, rng);
                const ProjectResult q = g.project(pot, sim.z_end);
                out[r] = {q.x, q.at_vertex ? -1 : q.edge};
            });
            return out;
        };

        IntegratorParams near = cfg.integrator();
        IntegratorParams far = cfg.integrator();
        far.eps = cfg.eps_far;
        far.tau = 0.75 * far.delta;  // largest micro step still below delta
        far.seed = cfg.seed + 2;

        CompareReport rep;
        rep.near = compare_projected_law(project_ensemble(near), ys,
                                         static_cast<int>(g.edges.size()));
        rep.far = compare_projected_law(project_ensemble(far), ys,
                                        static_cast<int>(g.edges.size()));
        return rep;
    });
}

inline std::string run_compare(const ExperimentConfig& cfg) {
    const CompareReport rep = run_compare_report(cfg);
    std::ostringstream os;
    os << cfg.provenance();
    os << "case,eps,ks_energy,tv_occupancy\n";
    os << "near," << sci(cfg.eps) << ',' << sci(rep.near.ks_energy) << ','
       << sci(rep.near.tv_occupancy) << "\n";
    os << "far," << sci(cfg.eps_far) << ',' << sci(rep.far.ks_energy) << ','
       << sci(rep.far.tv_occupancy) << "\n";
    return os.str();
}

}  // namespace irlang
