#include "ecmpr/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace ecmpr::io {

using nlohmann::json;

namespace {

json point_to_json(const Point3& p) { return json::array({p.x(), p.y(), p.z()}); }

json points_to_json(const PointSet& pts) {
    json arr = json::array();
    for (const auto& p : pts) arr.push_back(point_to_json(p));
    return arr;
}

Point3 point_from_json(const json& j, const char* field) {
    if (!j.is_array() || j.size() != 3) {
        throw ParseError(std::string("field '") + field + "' must be a 3-element array");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

PointSet points_from_json(const json& j, const char* field) {
    if (!j.is_array()) {
        throw ParseError(std::string("field '") + field + "' must be an array of points");
    }
    PointSet pts;
    pts.reserve(j.size());
    for (const auto& e : j) pts.push_back(point_from_json(e, field));
    return pts;
}

json matrix3_to_json(const Eigen::Matrix3d& m) {
    json arr = json::array();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) arr.push_back(m(r, c));
    }
    return arr;
}

Eigen::Matrix3d matrix3_from_json(const json& j, const char* field) {
    if (!j.is_array() || j.size() != 9) {
        throw ParseError(std::string("field '") + field + "' must be 9 numbers (row-major)");
    }
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) m(r, c) = j[3 * r + c].get<double>();
    }
    return m;
}

json matrix4_to_json(const Homogeneous4& m) {
    json arr = json::array();
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) arr.push_back(m(r, c));
    }
    return arr;
}

Homogeneous4 matrix4_from_json(const json& j, const char* field) {
    if (!j.is_array() || j.size() != 16) {
        throw ParseError(std::string("field '") + field + "' must be 16 numbers (row-major)");
    }
    Homogeneous4 m;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) m(r, c) = j[4 * r + c].get<double>();
    }
    return m;
}

json transform_to_json(const RigidTransform& t) {
    return json{{"R", matrix3_to_json(t.rotation)}, {"t", point_to_json(t.translation)}};
}

RigidTransform transform_from_json(const json& j, const char* field) {
    if (!j.contains("R") || !j.contains("t")) {
        throw ParseError(std::string("field '") + field + "' needs 'R' and 't'");
    }
    RigidTransform t;
    t.rotation = matrix3_from_json(j.at("R"), "R");
    t.translation = point_from_json(j.at("t"), "t");
    if (!is_rotation_matrix(t.rotation, 1e-6)) {
        throw ParseError(std::string("field '") + field + "': R is not a rotation matrix");
    }
    return t;
}

json pose_to_json(const PoseParams& pose) {
    json joints = json::array();
    for (const auto& angles : pose.joint_angles) joints.push_back(angles);
    return json{{"root", transform_to_json(pose.root)}, {"joints", joints}};
}

PoseParams pose_from_json(const json& j) {
    PoseParams pose;
    pose.root = transform_from_json(j.at("root"), "root");
    for (const auto& e : j.at("joints")) {
        pose.joint_angles.push_back(e.get<std::vector<double>>());
    }
    return pose;
}

json noise_to_json(const NoiseSpec& n) {
    switch (n.kind) {
        case NoiseKind::None: return json{{"kind", "none"}};
        case NoiseKind::Isotropic: return json{{"kind", "isotropic"}, {"frac", n.frac.x()}};
        case NoiseKind::Anisotropic:
            return json{{"kind", "anisotropic"},
                        {"frac", {n.frac.x(), n.frac.y(), n.frac.z()}},
                        {"spread", n.spread}};
    }
    return json{{"kind", "none"}};
}

NoiseSpec noise_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "none") return NoiseSpec::none();
    if (kind == "isotropic") return NoiseSpec::isotropic(j.at("frac").get<double>());
    if (kind == "anisotropic") {
        const auto& f = j.at("frac");
        NoiseSpec s = NoiseSpec::anisotropic(f[0].get<double>(), f[1].get<double>(),
                                             f[2].get<double>());
        s.spread = j.value("spread", false);
        return s;
    }
    throw ParseError("field 'noise.kind' must be none|isotropic|anisotropic");
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("malformed JSON in '" + path + "': " + e.what());
    }
    return j;
}

void save_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
    if (!out) throw Error("write failed for '" + path + "'");
}

json config_to_json(const MixtureConfig& c) {
    return json{{"outlier_radius", c.outlier_radius},
                {"working_volume", c.working_volume},
                {"init_sigma", c.init_sigma},
                {"fatten_epsilon", c.fatten_epsilon},
                {"convergence_eps", c.convergence_eps},
                {"max_iterations", c.max_iterations},
                {"covariance_mode", covariance_mode_name(c.covariance_mode)}};
}

json metrics_to_json(const Metrics& m) {
    return json{{"rotation_error_pct", m.rotation_error_pct},
                {"translation_error_pct", m.translation_error_pct},
                {"correct_match_pct", m.correct_match_pct},
                {"correct_match_map_pct", m.correct_match_map_pct},
                {"correct_match_nn_pct", m.correct_match_nn_pct},
                {"minimization_error", m.minimization_error},
                {"iterations", m.iterations},
                {"wall_time_ms", m.wall_time_ms}};
}

}  // namespace

std::string covariance_mode_name(CovarianceMode mode) {
    switch (mode) {
        case CovarianceMode::PerComponent: return "per-component";
        case CovarianceMode::Common: return "common";
        case CovarianceMode::Isotropic: return "isotropic-per-component";
        case CovarianceMode::IsotropicCommon: return "isotropic";
    }
    return "common";
}

CovarianceMode covariance_mode_from_name(const std::string& name) {
    if (name == "per-component") return CovarianceMode::PerComponent;
    if (name == "common") return CovarianceMode::Common;
    if (name == "isotropic-per-component") return CovarianceMode::Isotropic;
    if (name == "isotropic") return CovarianceMode::IsotropicCommon;
    throw ParseError("unknown covariance mode '" + name + "'");
}

void write_scene(const std::string& path, const RigidScene& scene) {
    json labels = json::array();
    for (int l : scene.labels) {
        labels.push_back(l < 0 ? std::string("outlier") : "inlier:" + std::to_string(l));
    }
    json meta{{"seed", scene.spec.seed},
              {"n_model", scene.spec.n_model},
              {"n_inliers", scene.spec.n_inliers},
              {"n_outliers", scene.spec.n_outliers},
              {"noise", noise_to_json(scene.spec.noise)}};
    if (scene.spec.rotation_deg) meta["rotation_deg"] = *scene.spec.rotation_deg;
    if (scene.spec.rotation_axis) meta["rotation_axis"] = point_to_json(*scene.spec.rotation_axis);
    if (scene.spec.translation) meta["translation"] = point_to_json(*scene.spec.translation);

    const json doc{{"model", points_to_json(scene.model)},
                   {"data", points_to_json(scene.data)},
                   {"ground_truth", transform_to_json(scene.ground_truth)},
                   {"labels", labels},
                   {"meta", meta}};
    save_json(path, doc);
}

RigidScene read_scene(const std::string& path) {
    const json doc = load_json(path);
    RigidScene scene;
    if (!doc.contains("model")) throw ParseError("scene file: missing field 'model'");
    if (!doc.contains("data")) throw ParseError("scene file: missing field 'data'");
    scene.model = points_from_json(doc.at("model"), "model");
    scene.data = points_from_json(doc.at("data"), "data");
    if (doc.contains("ground_truth")) {
        scene.ground_truth = transform_from_json(doc.at("ground_truth"), "ground_truth");
    }
    if (doc.contains("labels")) {
        for (const auto& e : doc.at("labels")) {
            const std::string s = e.get<std::string>();
            if (s == "outlier") {
                scene.labels.push_back(-1);
            } else if (s.rfind("inlier:", 0) == 0) {
                scene.labels.push_back(std::stoi(s.substr(7)));
            } else {
                throw ParseError("field 'labels': entry '" + s + "' not understood");
            }
        }
    }
    if (doc.contains("meta")) {
        const auto& meta = doc.at("meta");
        scene.spec.seed = meta.value("seed", std::uint64_t{0});
        scene.spec.n_model = meta.value("n_model", static_cast<int>(scene.model.size()));
        scene.spec.n_inliers = meta.value("n_inliers", 0);
        scene.spec.n_outliers = meta.value("n_outliers", 0);
        if (meta.contains("noise")) scene.spec.noise = noise_from_json(meta.at("noise"));
        if (meta.contains("rotation_deg")) {
            scene.spec.rotation_deg = meta.at("rotation_deg").get<double>();
        }
    }
    return scene;
}

void write_model(const std::string& path, const ArticulatedModel& model,
                 const std::string& name) {
    json parts = json::array();
    for (const auto& part : model.parts) {
        json p{{"name", part.name},
               {"parent", part.parent},
               {"model_points", points_to_json(part.points)}};
        if (part.joint) {
            json axes = json::array();
            for (const auto& a : part.joint->axes) axes.push_back(point_to_json(a));
            p["fixed_frame"] = matrix4_to_json(part.joint->fixed_frame);
            p["joint"] = json{{"axes", axes}};
        }
        parts.push_back(p);
    }
    save_json(path, json{{"name", name}, {"parts", parts}});
}

ArticulatedModel read_model(const std::string& path) {
    const json doc = load_json(path);
    if (!doc.contains("parts")) throw ParseError("model file: missing field 'parts'");
    ArticulatedModel model;
    for (const auto& p : doc.at("parts")) {
        ArticulatedPart part;
        part.name = p.value("name", "");
        if (!p.contains("parent")) throw ParseError("model file: part missing 'parent'");
        part.parent = p.at("parent").get<int>();
        if (!p.contains("model_points")) {
            throw ParseError("model file: part missing 'model_points'");
        }
        part.points = points_from_json(p.at("model_points"), "model_points");
        if (p.contains("joint")) {
            JointSpec joint;
            if (p.contains("fixed_frame")) {
                joint.fixed_frame = matrix4_from_json(p.at("fixed_frame"), "fixed_frame");
            }
            for (const auto& a : p.at("joint").at("axes")) {
                joint.axes.push_back(point_from_json(a, "joint.axes").normalized());
            }
            part.joint = joint;
        }
        model.parts.push_back(std::move(part));
    }
    model.validate();
    return model;
}

void write_articulated_scene(const std::string& path, const ArticulatedSceneFile& file) {
    json frames = json::array();
    for (const auto& f : file.scene.frames) {
        frames.push_back(json{{"data", points_to_json(f.data)},
                              {"pose", pose_to_json(f.ground_truth)},
                              {"part_of_point", f.part_of_point},
                              {"component_of_point", f.component_of_point}});
    }
    json parts = json::array();
    for (const auto& part : file.model.parts) {
        json p{{"name", part.name},
               {"parent", part.parent},
               {"model_points", points_to_json(part.points)}};
        if (part.joint) {
            json axes = json::array();
            for (const auto& a : part.joint->axes) axes.push_back(point_to_json(a));
            p["fixed_frame"] = matrix4_to_json(part.joint->fixed_frame);
            p["joint"] = json{{"axes", axes}};
        }
        parts.push_back(p);
    }
    save_json(path, json{{"kind", "articulated"},
                         {"model", json{{"parts", parts}}},
                         {"frames", frames},
                         {"meta", json{{"seed", file.seed},
                                       {"noise_frac", file.noise_frac},
                                       {"noise_sigma", file.scene.noise_sigma},
                                       {"outlier_fraction", file.outlier_fraction}}}});
}

ArticulatedSceneFile read_articulated_scene(const std::string& path) {
    const json doc = load_json(path);
    ArticulatedSceneFile file;
    if (!doc.contains("model") || !doc.contains("frames")) {
        throw ParseError("articulated scene file: need 'model' and 'frames'");
    }
    {
        // Reuse the model parser via a temporary document.
        const json& parts = doc.at("model").at("parts");
        for (const auto& p : parts) {
            ArticulatedPart part;
            part.name = p.value("name", "");
            part.parent = p.at("parent").get<int>();
            part.points = points_from_json(p.at("model_points"), "model_points");
            if (p.contains("joint")) {
                JointSpec joint;
                if (p.contains("fixed_frame")) {
                    joint.fixed_frame = matrix4_from_json(p.at("fixed_frame"), "fixed_frame");
                }
                for (const auto& a : p.at("joint").at("axes")) {
                    joint.axes.push_back(point_from_json(a, "joint.axes").normalized());
                }
                part.joint = joint;
            }
            file.model.parts.push_back(std::move(part));
        }
        file.model.validate();
    }
    for (const auto& f : doc.at("frames")) {
        ArticulatedFrame frame;
        frame.data = points_from_json(f.at("data"), "frames.data");
        frame.ground_truth = pose_from_json(f.at("pose"));
        if (f.contains("part_of_point")) {
            frame.part_of_point = f.at("part_of_point").get<std::vector<int>>();
            frame.component_of_point = f.at("component_of_point").get<std::vector<int>>();
        }
        file.scene.frames.push_back(std::move(frame));
    }
    if (doc.contains("meta")) {
        const auto& meta = doc.at("meta");
        file.seed = meta.value("seed", std::uint64_t{0});
        file.noise_frac = meta.value("noise_frac", 0.0);
        file.scene.noise_sigma = meta.value("noise_sigma", 0.0);
        file.outlier_fraction = meta.value("outlier_fraction", 0.0);
    }
    return file;
}

void write_rigid_result(const std::string& path, const RigidResult& result,
                        const MixtureConfig& config, const Metrics* metrics) {
    json assignment = json::array();
    json max_post = json::array();
    double outlier_mass = 0.0;
    for (int j = 0; j < result.posteriors.rows(); ++j) {
        assignment.push_back(result.assignment.labels[j]);
        double best = 0.0;
        for (int i = 0; i <= result.posteriors.components(); ++i) {
            best = std::max(best, result.posteriors.alpha(j, i));
        }
        max_post.push_back(best);
        outlier_mass += result.posteriors.outlier(j);
    }
    json doc{{"kind", "rigid"},
             {"transform", transform_to_json(result.transform)},
             {"assignment", assignment},
             {"posterior_summary",
              json{{"max_posterior", max_post}, {"outlier_mass", outlier_mass}}},
             {"iterations", result.iterations},
             {"converged", result.converged},
             {"final_log_likelihood", result.final_log_likelihood},
             {"log_likelihood_trace", result.log_likelihood_trace},
             {"config", config_to_json(config)}};
    if (metrics) doc["metrics"] = metrics_to_json(*metrics);
    save_json(path, doc);
}

void write_articulated_result(const std::string& path,
                              const std::vector<ArticulatedResult>& frames,
                              const MixtureConfig& config,
                              const std::vector<double>* per_frame_angle_error) {
    json out_frames = json::array();
    for (const auto& res : frames) {
        json transforms = json::array();
        for (const auto& t : res.transforms.world) transforms.push_back(matrix4_to_json(t));
        json registered = json::array();
        for (auto r : res.part_registered) registered.push_back(r != 0);
        out_frames.push_back(json{{"pose", pose_to_json(res.pose)},
                                  {"part_transforms", transforms},
                                  {"part_of_point", res.part_of_point},
                                  {"component_of_point", res.component_of_point},
                                  {"part_registered", registered},
                                  {"part_iterations", res.part_iterations}});
    }
    json doc{{"kind", "articulated"},
             {"frames", out_frames},
             {"config", config_to_json(config)}};
    if (per_frame_angle_error) doc["mean_abs_joint_error_deg"] = *per_frame_angle_error;
    save_json(path, doc);
}

PointSet read_points_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    PointSet pts;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        Point3 p;
        char comma;
        if (!(ss >> p.x() >> comma >> p.y() >> comma >> p.z())) {
            throw ParseError("points csv '" + path + "' line " + std::to_string(line_no) +
                             ": expected x,y,z");
        }
        pts.push_back(p);
    }
    return pts;
}

void write_batch_csv(const std::string& path, const TrialBatch& batch) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "trial,sweep_value,algorithm,rot_err_pct,trans_err_pct,match_pct,iters,time_ms\n";
    out << std::setprecision(17);
    for (const auto& row : batch.rows) {
        out << row.trial << ',' << row.sweep_value << ',' << algorithm_name(row.algorithm)
            << ',' << row.metrics.rotation_error_pct << ',' << row.metrics.translation_error_pct
            << ',' << row.metrics.correct_match_pct << ',' << row.metrics.iterations << ','
            << row.metrics.wall_time_ms << '\n';
    }
    if (!out) throw Error("write failed for '" + path + "'");
}

void write_batch_summary(const std::string& path, const BatchSpec& spec,
                         const TrialBatch& batch) {
    json algos = json::array();
    for (auto a : spec.algorithms) algos.push_back(algorithm_name(a));
    json aggregates = json::array();
    for (const auto& agg : batch.aggregates) {
        aggregates.push_back(json{{"sweep_value", agg.sweep_value},
                                  {"algorithm", algorithm_name(agg.algorithm)},
                                  {"n_trials", agg.n_trials},
                                  {"mean", metrics_to_json(agg.mean)},
                                  {"stddev", metrics_to_json(agg.stddev)}});
    }
    save_json(path, json{{"master_seed", spec.master_seed},
                         {"n_trials", spec.n_trials},
                         {"sweep_rotation_deg", spec.sweep_rotation_deg},
                         {"algorithms", algos},
                         {"aggregates", aggregates}});
}

void write_batch_columns(const std::string& path, const TrialBatch& batch) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << std::setprecision(17);

    std::vector<Algorithm> algos;
    for (const auto& agg : batch.aggregates) {
        if (std::find(algos.begin(), algos.end(), agg.algorithm) == algos.end()) {
            algos.push_back(agg.algorithm);
        }
    }
    bool first = true;
    for (auto algo : algos) {
        if (!first) out << "\n\n";
        first = false;
        out << "# algorithm: " << algorithm_name(algo) << "\n";
        out << "# sweep match_mean match_lo match_hi rot_mean rot_lo rot_hi"
               " trans_mean trans_lo trans_hi\n";
        for (const auto& agg : batch.aggregates) {
            if (agg.algorithm != algo) continue;
            const auto& mu = agg.mean;
            const auto& sd = agg.stddev;
            out << agg.sweep_value << ' ' << mu.correct_match_pct << ' '
                << mu.correct_match_pct - sd.correct_match_pct << ' '
                << mu.correct_match_pct + sd.correct_match_pct << ' '
                << mu.rotation_error_pct << ' '
                << mu.rotation_error_pct - sd.rotation_error_pct << ' '
                << mu.rotation_error_pct + sd.rotation_error_pct << ' '
                << mu.translation_error_pct << ' '
                << mu.translation_error_pct - sd.translation_error_pct << ' '
                << mu.translation_error_pct + sd.translation_error_pct << '\n';
        }
    }
    if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace ecmpr::io
