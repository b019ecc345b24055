#pragma once

#include "irlang/integrators.hpp"
#include "irlang/sampler.hpp"
#include "irlang/types.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace irlang {

// One flat record drives every sub-command; unused keys are simply ignored by
// commands that do not need them. Parsed from `key = value` lines, then
// overridable by command-line flags.
struct ExperimentConfig {
    std::string potential = "double_well";
    std::string scheme = "hmm";
    std::string observable = "x+y^2";
    std::string preset;        // table1 | table2 | table3 | custom
    std::string out;           // output path; empty = stdout

    double eps = 1e-2;
    double tau = 5e-4;
    double delta = 5e-3;
    double beta = 0.1;
    double kappa = 0.0;

    double T_total = 2000.0;
    double T_burn = 20.0;
    int n_batches = 20;
    int n_replicates = 200;

    std::uint64_t seed = 42;
    int threads = 0;           // 0 = all hardware threads
    double z0x = 0.0, z0y = 0.0;

    // graph / comparison knobs
    double box_half = 3.0;
    double quad_half = 4.0;  // wider box for Gibbs quadrature mass containment
    int contour_n = 2048;
    int label_n = 1024;
    int n_energies = 64;
    double eta = 1e-4;
    double hysteresis = 5e-3;
    double zeta_res = 1e-3;
    double dt_edge = 1e-3;
    double dt_vertex = 1e-4;
    double t_compare = 1.0;
    int n_samples = 10000;
    double eps_far = 5e-1;     // the away-from-the-limit case in `compare`

    IntegratorParams integrator() const {
        IntegratorParams p;
        p.eps = eps;
        p.tau = tau;
        p.delta = delta;
        p.beta = beta;
        p.kappa = kappa;
        p.seed = seed;
        return p;
    }
    SamplingConfig sampling() const {
        SamplingConfig s;
        s.T_total = T_total;
        s.T_burn = T_burn;
        s.n_batches = n_batches;
        s.n_replicates = n_replicates;
        s.observable = observable;
        return s;
    }
    Box2 box() const { return Box2{-box_half, box_half, -box_half, box_half}; }
    Box2 quad_box() const { return Box2{-quad_half, quad_half, -quad_half, quad_half}; }
    Vec2 z0() const { return {z0x, z0y}; }
    int thread_count() const { return threads > 0 ? threads : default_thread_count(); }

    void set(const std::string& key, const std::string& value);
    std::string provenance() const;
};

namespace detail {
inline double to_double(const std::string& k, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value for " + k + ": '" + v + "'");
    }
}
inline long long to_int(const std::string& k, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer value for " + k + ": '" + v + "'");
    }
}
inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    const auto b = s.find_last_not_of(" \t\r\n");
    return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
}
}  // namespace detail

inline void ExperimentConfig::set(const std::string& key, const std::string& value) {
    using detail::to_double;
    using detail::to_int;
    if (key == "potential") potential = value;
    else if (key == "scheme") scheme = value;
    else if (key == "observable") observable = value;
    else if (key == "preset") preset = value;
    else if (key == "out") out = value;
    else if (key == "eps") eps = to_double(key, value);
    else if (key == "tau") tau = to_double(key, value);
    else if (key == "delta") delta = to_double(key, value);
    else if (key == "beta") beta = to_double(key, value);
    else if (key == "kappa") kappa = to_double(key, value);
    else if (key == "T_total") T_total = to_double(key, value);
    else if (key == "T_burn") T_burn = to_double(key, value);
    else if (key == "n_batches") n_batches = static_cast<int>(to_int(key, value));
    else if (key == "n_replicates") n_replicates = static_cast<int>(to_int(key, value));
    else if (key == "seed") seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "threads") threads = static_cast<int>(to_int(key, value));
    else if (key == "z0x") z0x = to_double(key, value);
    else if (key == "z0y") z0y = to_double(key, value);
    else if (key == "box_half") box_half = to_double(key, value);
    else if (key == "quad_half") quad_half = to_double(key, value);
    else if (key == "contour_n") contour_n = static_cast<int>(to_int(key, value));
    else if (key == "label_n") label_n = static_cast<int>(to_int(key, value));
    else if (key == "n_energies") n_energies = static_cast<int>(to_int(key, value));
    else if (key == "eta") eta = to_double(key, value);
    else if (key == "hysteresis") hysteresis = to_double(key, value);
    else if (key == "zeta_res") zeta_res = to_double(key, value);
    else if (key == "dt_edge") dt_edge = to_double(key, value);
    else if (key == "dt_vertex") dt_vertex = to_double(key, value);
    else if (key == "t_compare") t_compare = to_double(key, value);
    else if (key == "n_samples") n_samples = static_cast<int>(to_int(key, value));
    else if (key == "eps_far") eps_far = to_double(key, value);
    else throw ConfigError("config: unknown key '" + key + "'");
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key = value at " + path + ":" +
                              std::to_string(lineno));
        cfg.set(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return cfg;
}

inline std::string ExperimentConfig::provenance() const {
    char buf[96];
    std::ostringstream os;
    auto kv = [&](const char* k, const std::string& v) { os << "# " << k << " = " << v << "\n"; };
    auto kvd = [&](const char* k, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        kv(k, buf);
    };
    auto kvi = [&](const char* k, long long v) { kv(k, std::to_string(v)); };
    kv("potential", potential);
    kv("scheme", scheme);
    kv("observable", observable);
    if (!preset.empty()) kv("preset", preset);
    kvd("eps", eps);
    kvd("tau", tau);
    kvd("delta", delta);
    kvd("beta", beta);
    kvd("kappa", kappa);
    kvd("T_total", T_total);
    kvd("T_burn", T_burn);
    kvi("n_batches", n_batches);
    kvi("n_replicates", n_replicates);
    kvi("seed", static_cast<long long>(seed));
    kvd("z0x", z0x);
    kvd("z0y", z0y);
    return os.str();
}

}  // namespace irlang
