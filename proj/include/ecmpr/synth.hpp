#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ecmpr/articulated.hpp"
#include "ecmpr/rigid.hpp"

namespace ecmpr {

/// Seeded generator with explicit distributions (mt19937_64 bits, shifted
/// uniforms, Box-Muller normals) so the same seed reproduces the same
/// scene on every platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01();                      // [0, 1)
    double uniform(double lo, double hi);
    double normal();                         // standard normal
    Eigen::Vector3d normal3();
    Eigen::Vector3d uniform_box(const Point3& lo, const Point3& hi);
    Eigen::Vector3d unit_vector();
    Eigen::Matrix3d random_rotation();

    /// Stream-split helper for per-trial seeds.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

enum class NoiseKind { None, Isotropic, Anisotropic };

/// Per-axis standard deviations as fractions of the inlier bounding-box
/// diagonal. `spread` draws each anisotropic fraction uniformly from
/// [0.1*frac, frac] per scene, echoing the varying-variance protocol.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::None;
    Eigen::Vector3d frac = Eigen::Vector3d::Zero();
    bool spread = false;

    static NoiseSpec none() { return {}; }
    static NoiseSpec isotropic(double f);
    static NoiseSpec anisotropic(double f1, double f2, double f3);
    static NoiseSpec anisotropic_spread(double fmax);
};

struct RigidSceneSpec {
    int n_model = 15;
    int n_inliers = 15;
    int n_outliers = 10;
    std::optional<double> rotation_deg;          // absent: random angle
    std::optional<Eigen::Vector3d> rotation_axis;  // absent: random axis
    std::optional<Eigen::Vector3d> translation;    // absent: random in [-1,1]^3
    NoiseSpec noise;
    std::uint64_t seed = 0;
};

struct RigidScene {
    PointSet model;
    PointSet data;
    RigidTransform ground_truth;
    std::vector<int> labels;  // generating model index, or -1 for outliers
    RigidSceneSpec spec;
};

/// Model points uniform in the unit cube; inliers are transformed model
/// points plus noise; outliers are uniform over the inlier bounding box.
/// Bitwise deterministic for a fixed seed.
RigidScene gen_rigid_scene(const RigidSceneSpec& spec);

struct Metrics {
    double rotation_error_pct = 0.0;     // geodesic angle / pi * 100
    double translation_error_pct = 0.0;  // |t - t_g| / |t_g| * 100
    double correct_match_pct = 0.0;      // the algorithm's native counting
    double correct_match_map_pct = 0.0;
    double correct_match_nn_pct = 0.0;
    double minimization_error = 0.0;
    int iterations = 0;
    double wall_time_ms = 0.0;
};

/// Rotation/translation errors against ground truth, match percentages
/// under both counting rules, and the RMS minimization error over the
/// estimated inliers. `nn_threshold` is the validation threshold of the
/// nearest-neighbour counting rule.
Metrics compute_metrics(const RigidResult& result, const RigidTransform& ground_truth,
                        const std::vector<int>& labels, const PointSet& data,
                        const PointSet& model, bool native_is_map,
                        double nn_threshold);

struct TrimmedIcpConfig {
    double trim_fraction = 0.4;   // share of data points dropped per fit
    int n_restarts = 32;
    double match_threshold = 0.0; // 0: auto from scene scale
    std::uint64_t seed = 0;
    int max_iterations = 60;
};

/// Nearest-neighbour ICP with trimmed least squares and seeded random
/// restarts over a uniform rotation grid; the best final trimmed error
/// wins. The assignment uses per-model nearest data points under the
/// validation threshold.
RigidResult icp_trimmed(const PointSet& data, const PointSet& model,
                        const TrimmedIcpConfig& config);

struct ArticulatedFrame {
    PointSet data;
    PoseParams ground_truth;
    std::vector<int> part_of_point;       // -1 for outliers
    std::vector<int> component_of_point;  // index within the part
};

struct ArticulatedScene {
    std::vector<ArticulatedFrame> frames;
    double noise_sigma = 0.0;  // resolved absolute value
};

/// Per frame: transformed model points plus isotropic Gaussian noise plus
/// uniform outliers over the working volume (the frame's noise-free
/// inlier box inflated by 10%). noise_frac is the per-axis standard
/// deviation as a fraction of the rest-pose model bounding-box diagonal;
/// outlier count is outlier_fraction times the model point count.
ArticulatedScene gen_articulated_scene(const ArticulatedModel& model,
                                       const std::vector<PoseParams>& trajectory,
                                       double noise_frac, double outlier_fraction,
                                       std::uint64_t seed);

enum class Algorithm { EcmprAniso, EcmprIso, Icp };

std::string algorithm_name(Algorithm a);
std::optional<Algorithm> algorithm_from_name(const std::string& name);

struct TrialRow {
    int trial = 0;
    double sweep_value = 0.0;
    Algorithm algorithm = Algorithm::EcmprAniso;
    Metrics metrics;
};

struct SweepAggregate {
    double sweep_value = 0.0;
    Algorithm algorithm = Algorithm::EcmprAniso;
    Metrics mean;
    Metrics stddev;
    int n_trials = 0;
};

struct TrialBatch {
    std::vector<TrialRow> rows;
    std::vector<SweepAggregate> aggregates;
};

struct BatchSpec {
    RigidSceneSpec base_scene;
    std::vector<double> sweep_rotation_deg;
    int n_trials = 100;
    std::vector<Algorithm> algorithms;
    std::uint64_t master_seed = 0;
    int n_threads = 0;  // 0: hardware default
};

/// Runs n_trials seeded trials per sweep point and algorithm, in parallel
/// over trials, and aggregates mean/stddev per sweep point. Rows are
/// ordered by (sweep, trial, algorithm) regardless of thread count.
TrialBatch run_batch(const BatchSpec& spec, const MixtureConfig* config_override = nullptr);

namespace detail {

RigidTransform icp_single_run(const PointSet& data, const PointSet& model,
                              const RigidTransform& start, double trim_fraction,
                              int max_iterations, double* final_error, int* iterations,
                              std::vector<double>* error_trace);

}  // namespace detail

}  // namespace ecmpr
