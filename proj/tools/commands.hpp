#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ecmpr/synth.hpp"

namespace cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNotConverged = 3;

struct SimulateRigidArgs {
    ecmpr::RigidSceneSpec spec;
    std::string noise = "none";
    std::vector<double> rotation_axis;
    std::vector<double> translation;
    double rotation_deg = std::numeric_limits<double>::quiet_NaN();
    std::string output;
};

struct SimulateArticulatedArgs {
    std::string model_path;
    int frames = 1;
    double noise_frac = 0.0;
    double outlier_frac = 0.3;
    double amplitude_deg = 40.0;
    std::uint64_t seed = 0;
    std::string output;
};

struct RegisterArgs {
    std::string scene_path;
    std::string data_path;
    std::string model_path;
    std::string covariance = "common";
    double outlier_radius = 0.0;
    double init_sigma = 0.0;
    double init_sigma_scale = 1.0;
    double volume = 0.0;
    double fatten_eps = -1.0;
    double convergence_eps = 0.0;
    int max_iters = 0;
    bool no_warm_start = false;
    std::string output;
};

struct BenchmarkArgs {
    std::string sweep = "0:180:15";
    int trials = 100;
    std::string algorithms = "ecmpr-aniso,ecmpr-iso,icp";
    std::uint64_t master_seed = 0;
    int n_model = 15;
    int n_inliers = 15;
    int n_outliers = 10;
    std::string noise = "anisotropic:0.1";
    std::string output_dir;
};

int run_simulate_rigid(const SimulateRigidArgs& args);
int run_simulate_articulated(const SimulateArticulatedArgs& args);
int run_register_rigid(const RegisterArgs& args);
int run_register_articulated(const RegisterArgs& args);
int run_benchmark(const BenchmarkArgs& args);

/// "none" | "isotropic:F" | "anisotropic:F" (per-axis fractions drawn in
/// [0.1F, F] per scene) | "anisotropic:F1,F2,F3".
ecmpr::NoiseSpec parse_noise(const std::string& text);

}  // namespace cli
