#include "irlang/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> replicates;
    std::optional<int> threads;
    std::optional<std::string> preset;
    std::optional<std::string> potential;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "key = value config file");
    cmd->add_option("--seed", flags.seed, "master RNG seed");
    cmd->add_option("--out", flags.out, "output path (default: stdout)");
    cmd->add_option("--replicates", flags.replicates, "number of independent replicates");
    cmd->add_option("--threads", flags.threads, "worker threads (0 = all cores)");
    cmd->add_option("--preset", flags.preset, "table preset: table1|table2|table3|custom");
    cmd->add_option("--potential", flags.potential,
                    "potential id: double_well|tilted_double_well|rbs3|quadratic_bowl");
}

irlang::ExperimentConfig resolve(const CommonFlags& flags) {
    irlang::ExperimentConfig cfg;
    if (!flags.config_path.empty()) cfg = irlang::parse_config_file(flags.config_path);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.out) cfg.out = *flags.out;
    if (flags.replicates) cfg.n_replicates = *flags.replicates;
    if (flags.threads) cfg.threads = *flags.threads;
    if (flags.preset) cfg.preset = *flags.preset;
    if (flags.potential) cfg.potential = *flags.potential;
    return cfg;
}

void emit(const irlang::ExperimentConfig& cfg, const std::string& text) {
    if (cfg.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f) throw irlang::ConfigError("cannot open output file: " + cfg.out);
    f << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stiff irreversible Langevin sampling: split-step integrator, "
                 "Reeb-graph analysis and the limiting diffusion on the graph"};
    app.require_subcommand(1);

    CommonFlags f_table, f_trans, f_graph, f_gibbs, f_ylimit, f_compare;
    auto* c_table = app.add_subcommand("table", "replicate-ensemble sampling error tables");
    add_common(c_table, f_table);
    auto* c_trans = app.add_subcommand("transitions", "saddle descent counts on one long run");
    add_common(c_trans, f_trans);
    auto* c_graph = app.add_subcommand("graph", "Reeb graph, edge coefficients, gluing weights");
    add_common(c_graph, f_graph);
    auto* c_gibbs = app.add_subcommand("gibbs", "grid quadrature of the Gibbs average");
    add_common(c_gibbs, f_gibbs);
    auto* c_ylimit = app.add_subcommand("ylimit", "simulate the limiting diffusion on the graph");
    add_common(c_ylimit, f_ylimit);
    auto* c_compare = app.add_subcommand("compare",
                                         "projected integrator law vs the graph diffusion");
    add_common(c_compare, f_compare);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (c_table->parsed()) {
            const auto cfg = resolve(f_table);
            cfg.integrator().validate();
            cfg.sampling().validate();
            emit(cfg, irlang::run_table(cfg));
        } else if (c_trans->parsed()) {
            const auto cfg = resolve(f_trans);
            cfg.integrator().validate();
            emit(cfg, irlang::run_transitions(cfg));
        } else if (c_graph->parsed()) {
            const auto cfg = resolve(f_graph);
            const auto analysis = irlang::run_graph_analysis(cfg);
            emit(cfg, analysis.description + analysis.coefficients_csv + analysis.gluing_report);
        } else if (c_gibbs->parsed()) {
            const auto cfg = resolve(f_gibbs);
            emit(cfg, irlang::run_gibbs(cfg));
        } else if (c_ylimit->parsed()) {
            const auto cfg = resolve(f_ylimit);
            emit(cfg, irlang::run_ylimit(cfg));
        } else if (c_compare->parsed()) {
            const auto cfg = resolve(f_compare);
            cfg.integrator().validate();
            emit(cfg, irlang::run_compare(cfg));
        }
    } catch (const irlang::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
