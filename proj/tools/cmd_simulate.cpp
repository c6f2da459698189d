#include <cmath>
#include <iostream>
#include <numbers>
#include <sstream>

#include "commands.hpp"
#include "ecmpr/io.hpp"

namespace cli {

using namespace ecmpr;

NoiseSpec parse_noise(const std::string& text) {
    if (text == "none" || text.empty()) return NoiseSpec::none();
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    if (colon == std::string::npos) {
        throw io::ParseError("noise '" + text + "': expected kind:value");
    }
    const std::string value = text.substr(colon + 1);
    std::vector<double> parts;
    std::stringstream ss(value);
    std::string tok;
    while (std::getline(ss, tok, ',')) parts.push_back(std::stod(tok));

    if (kind == "isotropic" && parts.size() == 1) return NoiseSpec::isotropic(parts[0]);
    if (kind == "anisotropic" && parts.size() == 1) {
        return NoiseSpec::anisotropic_spread(parts[0]);
    }
    if (kind == "anisotropic" && parts.size() == 3) {
        return NoiseSpec::anisotropic(parts[0], parts[1], parts[2]);
    }
    throw io::ParseError("noise '" + text + "' not understood");
}

int run_simulate_rigid(const SimulateRigidArgs& args) {
    RigidSceneSpec spec = args.spec;
    spec.noise = parse_noise(args.noise);
    if (!std::isnan(args.rotation_deg)) spec.rotation_deg = args.rotation_deg;
    if (args.rotation_axis.size() == 3) {
        spec.rotation_axis =
            Eigen::Vector3d(args.rotation_axis[0], args.rotation_axis[1], args.rotation_axis[2]);
    }
    if (args.translation.size() == 3) {
        spec.translation =
            Eigen::Vector3d(args.translation[0], args.translation[1], args.translation[2]);
    }
    const RigidScene scene = gen_rigid_scene(spec);
    io::write_scene(args.output, scene);
    std::cout << "scene: " << spec.n_model << " model, " << spec.n_inliers << " inliers, "
              << spec.n_outliers << " outliers, seed " << spec.seed << " -> " << args.output
              << "\n";
    return kExitOk;
}

namespace {

// Smooth seeded joint trajectories: one sinusoid per degree of freedom,
// plus a gentle ramping rigid motion of the root.
std::vector<PoseParams> make_trajectory(const ArticulatedModel& model, int frames,
                                        double amplitude_deg, std::uint64_t seed) {
    Rng rng(Rng::mix(seed, 0x7A11));
    const double amp = amplitude_deg * std::numbers::pi / 180.0;

    struct Wave {
        double amplitude;
        double cycles;
        double phase;
    };
    std::vector<std::vector<Wave>> waves(model.part_count());
    for (int p = 1; p < model.part_count(); ++p) {
        for (int k = 0; k < model.parts[p].joint->dof(); ++k) {
            waves[p].push_back({amp * rng.uniform(0.4, 1.0), rng.uniform(0.5, 1.5),
                                rng.uniform(0.0, 2.0 * std::numbers::pi)});
        }
    }
    const Eigen::Vector3d root_axis = rng.unit_vector();
    const double root_angle = rng.uniform(0.1, 0.35);
    const Eigen::Vector3d root_shift = 0.3 * rng.normal3();

    std::vector<PoseParams> trajectory;
    for (int f = 0; f < frames; ++f) {
        const double t = frames > 1 ? static_cast<double>(f) / (frames - 1) : 0.0;
        PoseParams pose = PoseParams::rest(model);
        pose.root.rotation = axis_angle_rotation(root_axis, root_angle * t);
        pose.root.translation = root_shift * t;
        for (int p = 1; p < model.part_count(); ++p) {
            for (std::size_t k = 0; k < waves[p].size(); ++k) {
                const auto& w = waves[p][k];
                pose.joint_angles[p][k] =
                    w.amplitude * std::sin(2.0 * std::numbers::pi * w.cycles * t + w.phase) *
                    std::sin(std::numbers::pi * t);  // starts and ends at rest
            }
        }
        trajectory.push_back(pose);
    }
    return trajectory;
}

}  // namespace

int run_simulate_articulated(const SimulateArticulatedArgs& args) {
    const ArticulatedModel model = io::read_model(args.model_path);
    if (args.frames < 1) throw InvalidConfigError("--frames must be >= 1");

    const std::vector<PoseParams> trajectory =
        make_trajectory(model, args.frames, args.amplitude_deg, args.seed);
    io::ArticulatedSceneFile file;
    file.model = model;
    file.scene = gen_articulated_scene(model, trajectory, args.noise_frac,
                                       args.outlier_frac, args.seed);
    file.seed = args.seed;
    file.noise_frac = args.noise_frac;
    file.outlier_fraction = args.outlier_frac;
    io::write_articulated_scene(args.output, file);
    std::cout << "scene: " << model.part_count() << " parts, " << model.total_points()
              << " model points, " << args.frames << " frames, seed " << args.seed << " -> "
              << args.output << "\n";
    return kExitOk;
}

}  // namespace cli
