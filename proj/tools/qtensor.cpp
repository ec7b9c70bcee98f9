#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "qtensor/qtensor.hpp"

using namespace qtensor;

int main(int argc, char** argv) {
    CLI::App app{"Q-tensor gradient flow solver"};
    app.require_subcommand(1, 1);

    std::string config_path, scheme, bc, out;
    double dt = 0, tmax = -1;
    std::vector<int> mesh;
    long long seed = -1;
    bool strict = false, full_scale = false;

    for (const char* name : {"eoc", "defects2d", "random3d", "custom"}) {
        auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
        sub->add_option("--config", config_path, "config file (key = value with [sections])")->check(CLI::ExistingFile);
        sub->add_option("--scheme", scheme, "ues1d | od2c | od1d")->check(CLI::IsMember({"ues1d", "od2c", "od1d"}));
        sub->add_option("--dt", dt, "time step");
        sub->add_option("--tmax", tmax, "final time");
        sub->add_option("--mesh", mesh, "cells per direction: NX NY [NZ]")->expected(2, 3);
        sub->add_option("--bc", bc, "boundary condition")
            ->check(CLI::IsMember({"neumann", "dirichlet-uniform", "dirichlet-radial"}));
        sub->add_option("--seed", seed, "RNG seed for random initial data");
        sub->add_option("--out", out, "output directory");
        sub->add_flag("--strict-stability", strict, "use the worst-case S3 bound");
        sub->add_flag("--full-scale", full_scale, "full-size meshes (100^2 eoc, 50^3 random3d)");
    }
    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = preset(parse_experiment(app.get_subcommands().front()->get_name()), full_scale);
        if (!config_path.empty()) load_config_file(cfg, config_path);
        if (!scheme.empty()) cfg.scheme = parse_scheme(scheme);
        if (dt > 0) cfg.dt = dt;
        if (tmax >= 0) cfg.t_final = tmax;
        if (!mesh.empty()) {
            cfg.dim = static_cast<int>(mesh.size());
            for (std::size_t k = 0; k < mesh.size(); ++k) cfg.cells[k] = mesh[k];
            if (cfg.dim == 3 && !(cfg.extent[2] > 0)) cfg.extent[2] = cfg.extent[0];
        }
        if (!bc.empty()) cfg.bc = parse_bc(bc);
        if (seed >= 0) cfg.seed = static_cast<unsigned long long>(seed);
        if (strict) cfg.strict_stability = true;
        if (!out.empty()) cfg.output_dir = out;
        if (cfg.output_dir.empty()) cfg.output_dir = "out_" + to_string(cfg.experiment);

        RunResult res = run_experiment(cfg);
        const auto& o = res.output;
        std::cout << "energy csv: " << o.energy_csv << "\nstep log:   " << o.step_log << "\nsnapshots:  "
                  << o.vtk_snapshots.size() << '\n';
        if (!o.eoc_table.empty()) {
            std::cout << "eoc table:  " << o.eoc_table << "\n\n     dt        ";
            for (int c = 0; c < 5; ++c) std::cout << "  e2_" << component_label(c) << "     ";
            std::cout << '\n';
            for (const auto& row : res.eoc.rows) {
                std::printf("%.4e", row.dt);
                for (int c = 0; c < 5; ++c) std::printf("  %.4e", row.e2[c]);
                if (row.has_rate) {
                    std::printf("   r2:");
                    for (int c = 0; c < 5; ++c) std::printf(" %.4f", row.r2[c]);
                }
                std::printf("\n");
            }
        }
        if (res.solvability_warnings > 0)
            std::cout << "warning: " << res.solvability_warnings << " steps exceeded the solvability step bound\n";
        if (res.failed) {
            std::cerr << "run failed: " << res.error << '\n';
            return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
