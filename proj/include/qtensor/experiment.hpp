#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"
#include "diagnostics.hpp"
#include "mesh.hpp"
#include "schemes.hpp"
#include "vtk.hpp"

namespace qtensor {

inline Mesh make_mesh(const RunConfig& c) {
    if (c.dim == 2) return rect_mesh(c.extent[0], c.extent[1], c.cells[0], c.cells[1]);
    return box_mesh(c.extent[0], c.extent[1], c.extent[2], c.cells[0], c.cells[1], c.cells[2]);
}

// [Q0]_kl = 1/2 sin(k pi x) cos(pi (l y - 1/2)) for k <= l, Q33 from the trace.
inline TensorField init_eoc(const Mesh& m) {
    const double pi = std::numbers::pi;
    TensorField q(m.num_nodes(), true);
    for (std::size_t i = 0; i < m.num_nodes(); ++i) {
        double x = m.nodes[i][0], y = m.nodes[i][1];
        auto f = [&](int k, int l) { return 0.5 * std::sin(k * pi * x) * std::cos(pi * (l * y - 0.5)); };
        q[i] = make_traceless(f(1, 1), f(1, 2), f(1, 3), f(2, 2), f(2, 3));
    }
    return q;
}

inline TensorField init_defects(const Mesh& m) {
    TensorField q(m.num_nodes(), true);
    for (std::size_t i = 0; i < m.num_nodes(); ++i) {
        double x = m.nodes[i][0] - 2.0, y = m.nodes[i][1] - 2.0;
        Vec3 d{1, 0, 0};
        if (x != 0.0 || y != 0.0) {
            double th = 4.0 * std::atan2(x, y);
            d = {std::cos(th), std::sin(th), 0.0};
            double n = std::sqrt(d[0] * d[0] + d[1] * d[1]);
            d = {d[0] / n, d[1] / n, 0.0};
        }
        q[i] = make_traceless(d[0] * d[0] - 1.0 / 3, d[0] * d[1], 0.0, d[1] * d[1] - 1.0 / 3, 0.0);
    }
    return q;
}

inline TensorField init_random3d(const Mesh& m, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TensorField q(m.num_nodes(), true);
    for (std::size_t i = 0; i < m.num_nodes(); ++i) {
        Vec3 d;
        double n2;
        do {
            d = {u(rng), u(rng), u(rng)};
            n2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        } while (n2 > 1.0 || n2 < 1e-12);
        double n = std::sqrt(n2);
        for (auto& c : d) c /= n;
        q[i] = make_traceless(d[0] * d[0] - 1.0 / 3, d[0] * d[1], d[0] * d[2], d[1] * d[1] - 1.0 / 3, d[1] * d[2]);
    }
    return q;
}

inline TensorField initial_field(const RunConfig& c, const Mesh& m) {
    std::string kind = c.init;
    if (c.experiment == Experiment::Eoc) kind = "eoc";
    else if (c.experiment == Experiment::Defects2d) kind = "defects";
    else if (c.experiment == Experiment::Random3d) kind = "random";
    if (kind == "eoc") return init_eoc(m);
    if (kind == "defects") return init_defects(m);
    if (kind == "random") return init_random3d(m, c.seed);
    if (kind == "zero") return TensorField(m.num_nodes(), true);
    if (kind == "uniaxial") {
        TensorField q(m.num_nodes(), true);
        for (auto& v : q.values) v = uniaxial(uniaxial_critical_s(c.params.A, c.params.B, c.params.C), {0, 0, 1});
        return q;
    }
    throw std::invalid_argument("unknown init '" + kind + "'");
}

inline SchemeConfig scheme_config(const RunConfig& c) {
    SchemeConfig s;
    s.scheme = c.scheme;
    s.dt = c.dt;
    s.bc.kind = c.bc;
    s.params = c.params;
    s.tol = c.tol;
    s.max_iter = c.max_iter;
    return s;
}

struct RunOutput {
    std::string energy_csv;
    std::vector<std::string> vtk_snapshots;
    std::string eoc_table;
    std::string step_log;
    std::string failure_marker;  // set when a run stopped on an error
};

struct RunResult {
    RunOutput output;
    std::vector<EnergyRecord> records;
    TensorField final_field;
    double step_seconds = 0;          // time spent inside the scheme steps only
    std::vector<double> step_times;  // per step, same measure
    double max_trace = 0;     // max over steps of max-node |tr Q|
    long solvability_warnings = 0;
    EocTable eoc;
    std::vector<double> eoc_dts;
    bool failed = false;
    std::string error;
};

namespace detail {

inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline const char* kCsvHeader = "step,t,energy,modified_energy,nd_residual,nd_direct,trace_norm,max_q";

inline std::string csv_row(const EnergyRecord& r) {
    return std::to_string(r.step) + ',' + fmt(r.t) + ',' + fmt(r.E) + ',' + fmt(r.E_hat) + ',' + fmt(r.nd_residual) +
           ',' + fmt(r.nd_direct) + ',' + fmt(r.trace_norm) + ',' + fmt(r.max_q);
}

inline std::string snapshot_name(long step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snap_%07ld.vtk", step);
    return buf;
}

}  // namespace detail

// Runs the time loop from q0. Files are written only when cfg.output_dir is set.
inline RunResult simulate(const RunConfig& cfg, const Mesh& m, const TensorField& q0, const std::string& prefix = "",
                          bool snapshots = true) {
    RunResult res;
    const bool files = !cfg.output_dir.empty();
    const std::filesystem::path dir(cfg.output_dir);
    std::ofstream csv, log;
    if (files) {
        std::filesystem::create_directories(dir);
        res.output.energy_csv = (dir / (prefix + "energy.csv")).string();
        res.output.step_log = (dir / (prefix + "steps.log")).string();
        csv.open(res.output.energy_csv);
        log.open(res.output.step_log);
        if (!csv || !log) throw std::runtime_error("cannot open output files in '" + cfg.output_dir + "'");
        csv << detail::kCsvHeader << '\n';
        log << "# scheme " << to_string(cfg.scheme) << " dt " << detail::fmt(cfg.dt) << " bc " << to_string(cfg.bc)
            << " S1 " << detail::fmt(cfg.params.S1) << " S3 " << detail::fmt(cfg.params.S3) << '\n';
    }
    auto snapshot = [&](long step, const TensorField& q) {
        if (!files || !snapshots) return;
        auto path = (dir / (prefix + detail::snapshot_name(step))).string();
        write_vtk(m, q, path, "qtensor step " + std::to_string(step) + " t " + detail::fmt(step * cfg.dt));
        res.output.vtk_snapshots.push_back(path);
    };

    SchemeConfig sc = scheme_config(cfg);
    TensorField q = apply_dirichlet(q0, sc.bc, m);
    Stepper st(m, sc);
    const bool trunc = cfg.scheme == SchemeId::UES1D;
    auto make_record = [&](long step, const TensorField& f) {
        EnergyRecord r;
        r.step = step;
        r.t = step * cfg.dt;
        r.dt = cfg.dt;
        r.E = energy(st.space(), st.stiffness(), f, cfg.params, false);
        r.E_hat = energy(st.space(), st.stiffness(), f, cfg.params, true);
        r.trace_norm = trace_norm(f);
        r.max_q = max_principle_monitor(f, cfg.params.alpha).max_q;
        return r;
    };

    EnergyRecord prev = make_record(0, q);
    res.records.push_back(prev);
    res.max_trace = prev.trace_norm;
    if (files) csv << detail::csv_row(prev) << '\n';
    snapshot(0, q);

    const long n = cfg.num_steps();
    try {
        for (long k = 1; k <= n; ++k) {
            auto [qn, rep] = st.step(q);
            res.step_seconds += rep.wall_seconds;
            res.step_times.push_back(rep.wall_seconds);
            EnergyRecord r = make_record(k, qn);
            double e_new = trunc ? r.E_hat : r.E, e_old = trunc ? prev.E_hat : prev.E;
            auto nd = numerical_dissipation(st, qn, q, e_new, e_old);
            r.nd_residual = nd.residual;
            r.nd_direct = nd.direct;
            res.max_trace = std::max(res.max_trace, r.trace_norm);
            if (rep.solvability_warning) ++res.solvability_warnings;
            if (files) {
                csv << detail::csv_row(r) << '\n';
                log << "step " << k << " wall " << detail::fmt(rep.wall_seconds);
                for (std::size_t s = 0; s < rep.solves.size(); ++s)
                    log << " | " << rep.solves[s] << " it " << rep.iterations[s] << " res " << detail::fmt(rep.residuals[s]);
                log << " | trace " << detail::fmt(rep.trace_residual);
                if (rep.solvability_warning)
                    log << " | warning: dt exceeds solvability bound " << detail::fmt(rep.solvability_dt);
                log << '\n';
            }
            q = std::move(qn);
            prev = r;
            res.records.push_back(r);
            if (k % cfg.cadence == 0 || k == n) snapshot(k, q);
        }
    } catch (const SolverFailure& e) {
        res.failed = true;
        res.error = e.what();
    }
    res.final_field = std::move(q);
    if (res.failed && files) {
        res.output.failure_marker = (dir / (prefix + "FAILED")).string();
        std::ofstream(res.output.failure_marker) << res.error << '\n';
        log << "# failed: " << res.error << '\n';
    }
    return res;
}

// Errors per component at t = T against a reference run of the same scheme.
inline RunResult run_eoc(const RunConfig& cfg) {
    Mesh m = make_mesh(cfg);
    TensorField q0 = init_eoc(m);
    RunConfig ref = cfg;
    ref.dt = cfg.eoc_dt_ref;
    RunResult res = simulate(ref, m, q0, "reference_");
    if (res.failed) return res;
    const TensorField& exact = res.final_field;

    P1Space space(m);
    auto mass = assemble_mass(space);
    auto stiff = assemble_stiffness(space);
    std::vector<std::string> runs;
    for (int kappa : cfg.eoc_kappas) {
        RunConfig rc = cfg;
        rc.dt = cfg.eoc_dt_base / kappa;
        rc.output_dir.clear();
        RunResult r = simulate(rc, m, q0);
        res.max_trace = std::max(res.max_trace, r.max_trace);
        if (r.failed) {
            res.failed = true;
            res.error = r.error;
            break;
        }
        EocRow row;
        row.dt = rc.dt;
        for (int c = 0; c < 5; ++c) {
            ScalarField diff(m.num_nodes());
            for (std::size_t i = 0; i < m.num_nodes(); ++i) diff[i] = component(r.final_field[i], c) - component(exact[i], c);
            row.e2[c] = l2_norm(mass, diff);
            row.e1[c] = h1_norm(mass, stiff, diff);
        }
        res.eoc.rows.push_back(row);
        res.eoc_dts.push_back(rc.dt);
    }
    if (!res.failed) fill_rates(res.eoc);

    if (!cfg.output_dir.empty()) {
        const std::filesystem::path dir(cfg.output_dir);
        res.output.eoc_table = (dir / "eoc_table.csv").string();
        std::ofstream out(res.output.eoc_table);
        if (!out) throw std::runtime_error("cannot write '" + res.output.eoc_table + "'");
        out << "dt";
        for (const char* k : {"e2", "e1", "r2", "r1"})
            for (int c = 0; c < 5; ++c) out << ',' << k << '_' << component_label(c);
        out << '\n';
        for (const auto& row : res.eoc.rows) {
            out << detail::fmt(row.dt);
            for (double v : row.e2) out << ',' << detail::fmt(v);
            for (double v : row.e1) out << ',' << detail::fmt(v);
            for (const auto* rates : {&row.r2, &row.r1})
                for (double v : *rates) out << ',' << (row.has_rate ? detail::fmt(v) : "");
            out << '\n';
        }
        if (res.failed) {
            res.output.failure_marker = (dir / "FAILED").string();
            std::ofstream(res.output.failure_marker) << res.error << '\n';
        }
    }
    return res;
}

inline RunResult run_experiment(RunConfig cfg) {
    resolve_stabilization(cfg);
    cfg.validate();
    if (cfg.experiment == Experiment::Eoc) return run_eoc(cfg);
    Mesh m = make_mesh(cfg);
    return simulate(cfg, m, initial_field(cfg, m));
}

}  // namespace qtensor
