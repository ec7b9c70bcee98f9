#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "potential.hpp"
#include "schemes.hpp"

namespace qtensor {

enum class Experiment { Eoc, Defects2d, Random3d, Custom };

inline std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::Eoc: return "eoc";
        case Experiment::Defects2d: return "defects2d";
        case Experiment::Random3d: return "random3d";
        default: return "custom";
    }
}

inline Experiment parse_experiment(const std::string& s) {
    if (s == "eoc") return Experiment::Eoc;
    if (s == "defects2d") return Experiment::Defects2d;
    if (s == "random3d") return Experiment::Random3d;
    if (s == "custom") return Experiment::Custom;
    throw std::invalid_argument("unknown experiment '" + s + "'");
}

struct RunConfig {
    Experiment experiment = Experiment::Custom;
    int dim = 2;
    std::array<double, 3> extent{2, 2, 2};
    std::array<int, 3> cells{20, 20, 20};
    double dt = 1e-4;
    double t_final = 1e-2;
    int cadence = 100;
    SchemeId scheme = SchemeId::OD2C;
    BoundaryCondition::Kind bc = BoundaryCondition::Kind::Neumann;
    PotentialParams params;
    bool S1_set = false, S3_set = false;  // explicit overrides of the stabilization defaults
    unsigned long long seed = 1;
    std::string output_dir;  // empty: keep results in memory only
    bool strict_stability = false;
    bool full_scale = false;
    double tol = 1e-10;
    int max_iter = 10000;
    std::string init = "eoc";  // custom runs: eoc | defects | random | uniaxial | zero
    // eoc protocol
    double eoc_dt_base = 1e-5;
    std::vector<int> eoc_kappas{1, 2, 3, 4, 5};
    double eoc_dt_ref = 1e-7;

    long num_steps() const {
        if (t_final == 0) return 0;
        double n = t_final / dt;
        long r = std::lround(n);
        if (std::abs(n - r) > 1e-6 * std::max(1.0, n)) throw std::invalid_argument("t_final is not a multiple of dt");
        return r;
    }

    void validate() const {
        if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
        if (!(t_final == 0 || t_final >= dt * (1 - 1e-12))) throw std::invalid_argument("t_final must be 0 or >= dt");
        if (cadence < 1) throw std::invalid_argument("cadence must be >= 1");
        if (dim != 2 && dim != 3) throw std::invalid_argument("dim must be 2 or 3");
        for (int k = 0; k < dim; ++k) {
            if (cells[k] < 1) throw std::invalid_argument("cell counts must be >= 1");
            if (!(extent[k] > 0)) throw std::invalid_argument("extents must be positive");
        }
        if (bc == BoundaryCondition::Kind::DirichletCustom)
            throw std::invalid_argument("dirichlet-custom is only available through the library API");
        params.validate();
        num_steps();
        if (experiment == Experiment::Eoc) {
            if (eoc_kappas.size() < 2) throw std::invalid_argument("eoc needs at least two kappa values");
            if (!(eoc_dt_ref > 0) || !(eoc_dt_base > 0)) throw std::invalid_argument("eoc steps must be positive");
        }
    }
};

inline RunConfig preset(Experiment e, bool full_scale = false) {
    RunConfig c;
    c.experiment = e;
    c.full_scale = full_scale;
    switch (e) {
        case Experiment::Eoc:
            c.extent = {2, 2, 0};
            c.cells = full_scale ? std::array<int, 3>{100, 100, 0} : std::array<int, 3>{50, 50, 0};
            c.params.epsilon = 1e-2;
            c.t_final = 1e-4;
            c.dt = 1e-5;
            c.scheme = SchemeId::OD2C;
            break;
        case Experiment::Defects2d:
            c.extent = {4, 4, 0};
            c.cells = {50, 50, 0};
            c.params.epsilon = 1e-3;
            c.t_final = 1.0;
            c.dt = 1e-4;
            c.scheme = SchemeId::OD1D;
            break;
        case Experiment::Random3d:
            c.dim = 3;
            c.extent = {2, 2, 2};
            c.cells = full_scale ? std::array<int, 3>{50, 50, 50} : std::array<int, 3>{16, 16, 16};
            c.params.epsilon = 1.0;
            c.t_final = 0.2;
            c.dt = 1e-4;
            c.scheme = SchemeId::OD1D;
            break;
        case Experiment::Custom:
            c.extent = {2, 2, 0};
            c.cells = {20, 20, 0};
            c.t_final = 1e-2;
            c.dt = 1e-4;
            break;
    }
    return c;
}

// Fills S1/S3 from the stability bounds unless set explicitly.
inline void resolve_stabilization(RunConfig& c) {
    auto b = stability_bounds(c.params);
    if (!c.S1_set) c.params.S1 = b.S1_default;
    if (!c.S3_set) c.params.S3 = c.strict_stability ? b.s3F_report : b.S3_default;
}

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double x = 0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
    }
    if (pos != v.size()) throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
    return x;
}

inline long to_long(const std::string& key, const std::string& v) {
    double x = to_double(key, v);
    if (x != std::floor(x)) throw std::invalid_argument("config: '" + key + "' expects an integer");
    return static_cast<long>(x);
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config: '" + key + "' expects true/false");
}

inline std::vector<std::string> words(const std::string& v) {
    std::istringstream is(v);
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

}  // namespace detail

// Parses `key = value` lines grouped under [section] headers; '#' starts a comment.
inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw std::invalid_argument("config line " + std::to_string(lineno) + ": bad section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim(line.substr(0, eq));
        std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        kv[section.empty() ? key : section + "." + key] = val;
    }
    return kv;
}

inline void apply_config(RunConfig& c, const std::map<std::string, std::string>& kv) {
    using namespace detail;
    for (const auto& [key, v] : kv) {
        auto& p = c.params;
        if (key == "run.scheme") c.scheme = parse_scheme(v);
        else if (key == "run.dt") c.dt = to_double(key, v);
        else if (key == "run.t_final") c.t_final = to_double(key, v);
        else if (key == "run.cadence") c.cadence = static_cast<int>(to_long(key, v));
        else if (key == "run.seed") c.seed = static_cast<unsigned long long>(to_long(key, v));
        else if (key == "run.output") c.output_dir = v;
        else if (key == "run.init") c.init = v;
        else if (key == "run.strict_stability") c.strict_stability = to_bool(key, v);
        else if (key == "mesh.extent" || key == "mesh.cells") {
            auto w = words(v);
            if (w.size() < 2 || w.size() > 3) throw std::invalid_argument("config: '" + key + "' expects 2 or 3 values");
            c.dim = static_cast<int>(w.size());
            for (std::size_t k = 0; k < w.size(); ++k) {
                if (key == "mesh.extent") c.extent[k] = to_double(key, w[k]);
                else c.cells[k] = static_cast<int>(to_long(key, w[k]));
            }
        }
        else if (key == "model.A") p.A = to_double(key, v);
        else if (key == "model.B") p.B = to_double(key, v);
        else if (key == "model.C") p.C = to_double(key, v);
        else if (key == "model.epsilon") p.epsilon = to_double(key, v);
        else if (key == "model.gamma") p.gamma = to_double(key, v);
        else if (key == "model.alpha") p.alpha = to_double(key, v);
        else if (key == "model.alpha1") p.alpha1 = to_double(key, v);
        else if (key == "model.alpha2") p.alpha2 = to_double(key, v);
        else if (key == "model.S1") { p.S1 = to_double(key, v); c.S1_set = true; }
        else if (key == "model.S3") { p.S3 = to_double(key, v); c.S3_set = true; }
        else if (key == "model.psi3_tail_coeff") p.psi3_tail_coeff = to_double(key, v);
        else if (key == "boundary.type") c.bc = parse_bc(v);
        else if (key == "solver.tol") c.tol = to_double(key, v);
        else if (key == "solver.max_iter") c.max_iter = static_cast<int>(to_long(key, v));
        else if (key == "eoc.dt_base") c.eoc_dt_base = to_double(key, v);
        else if (key == "eoc.dt_ref") c.eoc_dt_ref = to_double(key, v);
        else if (key == "eoc.kappas") {
            c.eoc_kappas.clear();
            for (const auto& w : words(v)) c.eoc_kappas.push_back(static_cast<int>(to_long(key, w)));
        }
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    // alpha follows A, B, C unless given explicitly
    if (!kv.count("model.alpha") && (kv.count("model.A") || kv.count("model.B") || kv.count("model.C")))
        c.params.alpha = alpha_from_params(c.params.A, c.params.B, c.params.C);
}

inline void load_config_file(RunConfig& c, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config(c, parse_config_text(ss.str()));
}

}  // namespace qtensor
