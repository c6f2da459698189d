#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "ecmpr/errors.hpp"
#include "ecmpr/io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"ECMPR point registration: simulation, rigid and articulated "
                 "registration, and benchmarking"};
    app.require_subcommand(1);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Generate synthetic scenes");
    simulate->require_subcommand(1);

    cli::SimulateRigidArgs sim_rigid;
    auto* sim_r = simulate->add_subcommand("rigid", "Rigid scene: model, inliers, outliers");
    sim_r->add_option("--n-model", sim_rigid.spec.n_model, "Model point count");
    sim_r->add_option("--n-inliers", sim_rigid.spec.n_inliers, "Inlier count");
    sim_r->add_option("--n-outliers", sim_rigid.spec.n_outliers, "Outlier count");
    sim_r->add_option("--rotation-deg", sim_rigid.rotation_deg,
                      "Ground-truth rotation angle (default: random)");
    sim_r->add_option("--rotation-axis", sim_rigid.rotation_axis,
                      "Rotation axis x y z (default: random)")->expected(3);
    sim_r->add_option("--translation", sim_rigid.translation,
                      "Ground-truth translation x y z (default: random)")->expected(3);
    sim_r->add_option("--noise", sim_rigid.noise,
                      "none | isotropic:F | anisotropic:F | anisotropic:F1,F2,F3");
    sim_r->add_option("--seed", sim_rigid.spec.seed, "Generator seed");
    sim_r->add_option("-o,--output", sim_rigid.output, "Scene file path")->required();

    cli::SimulateArticulatedArgs sim_art;
    auto* sim_a = simulate->add_subcommand("articulated",
                                           "Articulated scene from a model file");
    sim_a->add_option("--model", sim_art.model_path, "Articulated model file")->required();
    sim_a->add_option("--frames", sim_art.frames, "Trajectory length");
    sim_a->add_option("--noise-frac", sim_art.noise_frac,
                      "Noise stddev as a fraction of the rest-pose diagonal");
    sim_a->add_option("--outlier-frac", sim_art.outlier_frac,
                      "Outliers as a fraction of the model point count");
    sim_a->add_option("--amplitude-deg", sim_art.amplitude_deg,
                      "Peak joint excursion of the generated trajectory");
    sim_a->add_option("--seed", sim_art.seed, "Generator seed");
    sim_a->add_option("-o,--output", sim_art.output, "Scene file path")->required();

    // register
    auto* reg = app.add_subcommand("register", "Run the registration engine");
    reg->require_subcommand(1);

    cli::RegisterArgs reg_rigid;
    auto* reg_r = reg->add_subcommand("rigid", "Rigid registration");
    reg_r->add_option("--scene", reg_rigid.scene_path, "Scene file (JSON)");
    reg_r->add_option("--data", reg_rigid.data_path, "Data points (CSV x,y,z)");
    reg_r->add_option("--model", reg_rigid.model_path, "Model points (CSV x,y,z)");
    reg_r->add_option("--covariance", reg_rigid.covariance,
                      "per-component | common | isotropic | isotropic-per-component");
    reg_r->add_option("--outlier-radius", reg_rigid.outlier_radius, "Outlier sphere radius");
    reg_r->add_option("--init-sigma", reg_rigid.init_sigma, "Initial covariance scale");
    reg_r->add_option("--volume", reg_rigid.volume, "Working volume");
    reg_r->add_option("--fatten-eps", reg_rigid.fatten_eps, "Covariance fattening epsilon");
    reg_r->add_option("--convergence-eps", reg_rigid.convergence_eps,
                      "Threshold on the squared rotation change");
    reg_r->add_option("--max-iters", reg_rigid.max_iters, "Iteration cap");
    reg_r->add_option("-o,--output", reg_rigid.output, "Result file path")->required();

    cli::RegisterArgs reg_art;
    auto* reg_a = reg->add_subcommand("articulated", "Articulated registration / tracking");
    reg_a->add_option("--scene", reg_art.scene_path, "Articulated scene file")->required();
    reg_a->add_option("--covariance", reg_art.covariance, "Covariance mode");
    reg_a->add_option("--init-sigma", reg_art.init_sigma, "Initial covariance scale");
    reg_a->add_option("--init-sigma-scale", reg_art.init_sigma_scale,
                      "Multiplier on the default initial covariance scale");
    reg_a->add_option("--outlier-radius", reg_art.outlier_radius, "Outlier sphere radius");
    reg_a->add_option("--convergence-eps", reg_art.convergence_eps,
                      "Threshold on the squared rotation change");
    reg_a->add_option("--max-iters", reg_art.max_iters, "Iteration cap");
    reg_a->add_flag("--no-warm-start", reg_art.no_warm_start,
                    "Register every frame from the rest pose");
    reg_a->add_option("-o,--output", reg_art.output, "Result file path")->required();

    // benchmark
    cli::BenchmarkArgs bench;
    auto* bench_cmd = app.add_subcommand("benchmark", "Batch trials over a rotation sweep");
    bench_cmd->add_option("--sweep-rotation", bench.sweep, "start:stop:step in degrees");
    bench_cmd->add_option("--trials", bench.trials, "Trials per sweep point");
    bench_cmd->add_option("--algorithms", bench.algorithms,
                          "Comma list of ecmpr-aniso, ecmpr-iso, icp");
    bench_cmd->add_option("--master-seed", bench.master_seed, "Master seed");
    bench_cmd->add_option("--n-model", bench.n_model, "Model point count");
    bench_cmd->add_option("--n-inliers", bench.n_inliers, "Inlier count");
    bench_cmd->add_option("--n-outliers", bench.n_outliers, "Outlier count");
    bench_cmd->add_option("--noise", bench.noise, "Noise spec (see simulate rigid)");
    bench_cmd->add_option("-o,--output", bench.output_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::kExitOk : cli::kExitUsage;
    }

    try {
        if (sim_r->parsed()) return cli::run_simulate_rigid(sim_rigid);
        if (sim_a->parsed()) return cli::run_simulate_articulated(sim_art);
        if (reg_r->parsed()) return cli::run_register_rigid(reg_rigid);
        if (reg_a->parsed()) return cli::run_register_articulated(reg_art);
        if (bench_cmd->parsed()) return cli::run_benchmark(bench);
    } catch (const ecmpr::io::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return cli::kExitUsage;
    } catch (const ecmpr::InvalidConfigError& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return cli::kExitUsage;
    } catch (const ecmpr::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitIo;
    }
    return cli::kExitUsage;
}
