#include <cmath>
#include <iostream>
#include <numbers>

#include "commands.hpp"
#include "ecmpr/io.hpp"

namespace cli {

using namespace ecmpr;

namespace {

MixtureConfig apply_overrides(MixtureConfig config, const RegisterArgs& args) {
    config.covariance_mode = io::covariance_mode_from_name(args.covariance);
    if (args.outlier_radius > 0.0) config.outlier_radius = args.outlier_radius;
    if (args.init_sigma > 0.0) config.init_sigma = args.init_sigma;
    config.init_sigma *= args.init_sigma_scale;
    if (args.volume > 0.0) config.working_volume = args.volume;
    if (args.fatten_eps >= 0.0) config.fatten_epsilon = args.fatten_eps;
    if (args.convergence_eps > 0.0) config.convergence_eps = args.convergence_eps;
    if (args.max_iters > 0) config.max_iterations = args.max_iters;
    return config;
}

}  // namespace

int run_register_rigid(const RegisterArgs& args) {
    RigidScene scene;
    bool have_truth = false;
    if (!args.scene_path.empty()) {
        scene = io::read_scene(args.scene_path);
        have_truth = !scene.labels.empty();
    } else if (!args.data_path.empty() && !args.model_path.empty()) {
        scene.data = io::read_points_csv(args.data_path);
        scene.model = io::read_points_csv(args.model_path);
    } else {
        throw InvalidConfigError("register rigid needs --scene or --data plus --model");
    }

    const MixtureConfig config = apply_overrides(
        MixtureConfig::defaults_for(scene.data, static_cast<int>(scene.model.size())), args);

    const RigidResult result = ecmpr_rigid(scene.data, scene.model, config);

    Metrics metrics;
    if (have_truth) {
        Point3 lo = Point3::Constant(1e300), hi = Point3::Constant(-1e300);
        for (const auto& p : scene.data) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        metrics = compute_metrics(result, scene.ground_truth, scene.labels, scene.data,
                                  scene.model, /*native_is_map=*/true,
                                  0.1 * (hi - lo).norm());
        std::cout << "rot_err_pct=" << metrics.rotation_error_pct
                  << " trans_err_pct=" << metrics.translation_error_pct
                  << " matches_pct=" << metrics.correct_match_pct
                  << " iters=" << result.iterations
                  << (result.converged ? "" : " (not converged)") << "\n";
    } else {
        std::cout << "iters=" << result.iterations
                  << " log_likelihood=" << result.final_log_likelihood
                  << (result.converged ? "" : " (not converged)") << "\n";
    }
    io::write_rigid_result(args.output, result, config, have_truth ? &metrics : nullptr);
    return result.converged ? kExitOk : kExitNotConverged;
}

int run_register_articulated(const RegisterArgs& args) {
    const io::ArticulatedSceneFile file = io::read_articulated_scene(args.scene_path);
    if (file.scene.frames.empty()) throw InvalidConfigError("scene has no frames");

    std::vector<ArticulatedResult> results;
    std::vector<double> frame_errors_deg;
    bool all_registered = true;

    PoseParams previous;
    for (std::size_t f = 0; f < file.scene.frames.size(); ++f) {
        const auto& frame = file.scene.frames[f];
        MixtureConfig config = apply_overrides(
            MixtureConfig::defaults_for(frame.data, file.model.total_points()), args);
        // Tracking: covariances restart spherical every frame, the pose
        // warm-starts from the previous frame.
        const bool warm = f > 0 && !args.no_warm_start;
        const ArticulatedResult res =
            ecmpr_articulated(frame.data, file.model, config, warm ? &previous : nullptr);
        previous = res.pose;
        for (auto reg : res.part_registered) all_registered &= reg != 0;

        // Mean absolute joint-angle error against ground truth.
        double err_sum = 0.0;
        int err_n = 0;
        for (int p = 1; p < file.model.part_count(); ++p) {
            for (std::size_t k = 0; k < res.pose.joint_angles[p].size(); ++k) {
                err_sum += std::abs(res.pose.joint_angles[p][k] -
                                    frame.ground_truth.joint_angles[p][k]);
                ++err_n;
            }
        }
        frame_errors_deg.push_back(err_n > 0 ? err_sum / err_n * 180.0 / std::numbers::pi
                                             : 0.0);
        results.push_back(res);
    }

    double mean_err = 0.0;
    for (double e : frame_errors_deg) mean_err += e;
    mean_err /= static_cast<double>(frame_errors_deg.size());
    std::cout << "frames=" << results.size()
              << " mean_abs_joint_err_deg=" << mean_err
              << (all_registered ? "" : " (unregistered parts)") << "\n";

    io::write_articulated_result(args.output, results,
                                 apply_overrides(MixtureConfig::defaults_for(
                                                     file.scene.frames[0].data,
                                                     file.model.total_points()),
                                                 args),
                                 &frame_errors_deg);
    return all_registered ? kExitOk : kExitNotConverged;
}

}  // namespace cli
