#pragma once

#include <string>

#include "ecmpr/articulated.hpp"
#include "ecmpr/synth.hpp"

namespace ecmpr::io {

/// Thrown on malformed documents; the message names the offending field.
struct ParseError : Error {
    using Error::Error;
};

// Rigid scene files: {model, data, ground_truth{R row-major, t}, labels,
// meta}. Numbers round-trip exactly.
void write_scene(const std::string& path, const RigidScene& scene);
RigidScene read_scene(const std::string& path);

// Articulated model files: parts with parent, fixed_frame (4x4 row-major),
// joint axes in application order, model_points.
void write_model(const std::string& path, const ArticulatedModel& model,
                 const std::string& name = "");
ArticulatedModel read_model(const std::string& path);

// Articulated scene files: inline model plus per-frame data, ground-truth
// pose and labels.
struct ArticulatedSceneFile {
    ArticulatedModel model;
    ArticulatedScene scene;
    std::uint64_t seed = 0;
    double noise_frac = 0.0;
    double outlier_fraction = 0.0;
};
void write_articulated_scene(const std::string& path, const ArticulatedSceneFile& file);
ArticulatedSceneFile read_articulated_scene(const std::string& path);

// Result files carry the transform(s), assignments, a posterior summary,
// the likelihood trace and a config echo sufficient to re-run.
void write_rigid_result(const std::string& path, const RigidResult& result,
                        const MixtureConfig& config, const Metrics* metrics);
void write_articulated_result(const std::string& path,
                              const std::vector<ArticulatedResult>& frames,
                              const MixtureConfig& config,
                              const std::vector<double>* per_frame_angle_error);

/// Plain x,y,z lines, no header.
PointSet read_points_csv(const std::string& path);

// Benchmark outputs.
void write_batch_csv(const std::string& path, const TrialBatch& batch);
void write_batch_summary(const std::string& path, const BatchSpec& spec,
                         const TrialBatch& batch);
/// Gnuplot columns: one index block per algorithm with mean and
/// mean +/- stddev columns per metric.
void write_batch_columns(const std::string& path, const TrialBatch& batch);

std::string covariance_mode_name(CovarianceMode mode);
CovarianceMode covariance_mode_from_name(const std::string& name);

}  // namespace ecmpr::io
