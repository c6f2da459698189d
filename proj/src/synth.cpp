#include "ecmpr/synth.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "ecmpr/stats.hpp"

namespace ecmpr {

namespace {

void bounding_box(const PointSet& pts, Point3& lo, Point3& hi) {
    lo = Point3::Constant(std::numeric_limits<double>::max());
    hi = Point3::Constant(std::numeric_limits<double>::lowest());
    for (const auto& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
}

double bbox_diag(const PointSet& pts) {
    if (pts.empty()) return 0.0;
    Point3 lo, hi;
    bounding_box(pts, lo, hi);
    return (hi - lo).norm();
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

}  // namespace

double Rng::uniform01() {
    // 53 random bits scaled to [0, 1); independent of library distributions.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(2.0 * std::numbers::pi * u2);
    have_spare_ = true;
    return mag * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::Vector3d Rng::normal3() {
    const double a = normal(), b = normal(), c = normal();
    return {a, b, c};
}

Eigen::Vector3d Rng::uniform_box(const Point3& lo, const Point3& hi) {
    const double x = uniform(lo.x(), hi.x());
    const double y = uniform(lo.y(), hi.y());
    const double z = uniform(lo.z(), hi.z());
    return {x, y, z};
}

Eigen::Vector3d Rng::unit_vector() {
    Eigen::Vector3d v;
    do {
        v = normal3();
    } while (v.norm() < 1e-12);
    return v.normalized();
}

Eigen::Matrix3d Rng::random_rotation() {
    const Eigen::Vector3d axis = unit_vector();
    const double angle = uniform(0.0, 2.0 * std::numbers::pi);
    return axis_angle_rotation(axis, angle);
}

std::uint64_t Rng::mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    // splitmix64 over the combined stream id.
    std::uint64_t x = seed ^ (a * 0x9E3779B97F4A7C15ull) ^ (b * 0xBF58476D1CE4E5B9ull);
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

NoiseSpec NoiseSpec::isotropic(double f) {
    NoiseSpec s;
    s.kind = NoiseKind::Isotropic;
    s.frac = Eigen::Vector3d::Constant(f);
    return s;
}

NoiseSpec NoiseSpec::anisotropic(double f1, double f2, double f3) {
    NoiseSpec s;
    s.kind = NoiseKind::Anisotropic;
    s.frac = Eigen::Vector3d(f1, f2, f3);
    return s;
}

NoiseSpec NoiseSpec::anisotropic_spread(double fmax) {
    NoiseSpec s;
    s.kind = NoiseKind::Anisotropic;
    s.frac = Eigen::Vector3d::Constant(fmax);
    s.spread = true;
    return s;
}

RigidScene gen_rigid_scene(const RigidSceneSpec& spec) {
    if (spec.n_model < 0 || spec.n_inliers < 0 || spec.n_outliers < 0) {
        throw InvalidConfigError("gen_rigid_scene: counts must be >= 0");
    }
    if (spec.n_inliers > spec.n_model) {
        throw InvalidConfigError("gen_rigid_scene: more inliers than model points");
    }
    Rng rng(spec.seed);
    RigidScene scene;
    scene.spec = spec;

    scene.model.resize(spec.n_model);
    for (auto& p : scene.model) p = rng.uniform_box(Point3::Zero(), Point3::Ones());

    const double angle_deg = spec.rotation_deg ? *spec.rotation_deg : rng.uniform(0.0, 180.0);
    const Eigen::Vector3d axis =
        spec.rotation_axis ? spec.rotation_axis->normalized() : rng.unit_vector();
    scene.ground_truth.rotation =
        axis_angle_rotation(axis, angle_deg * std::numbers::pi / 180.0);
    scene.ground_truth.translation =
        spec.translation ? *spec.translation : rng.uniform_box(-Point3::Ones(), Point3::Ones());

    PointSet inliers(spec.n_inliers);
    for (int i = 0; i < spec.n_inliers; ++i) {
        inliers[i] = apply_transform(scene.ground_truth, scene.model[i]);
    }

    const double diag = bbox_diag(inliers.empty() ? scene.model : inliers);
    Eigen::Vector3d sigma = Eigen::Vector3d::Zero();
    if (spec.noise.kind != NoiseKind::None) {
        Eigen::Vector3d frac = spec.noise.frac;
        if (spec.noise.spread) {
            for (int k = 0; k < 3; ++k) frac(k) = rng.uniform(0.1 * frac(k), frac(k));
        }
        sigma = frac * diag;
    }
    for (auto& p : inliers) {
        const Eigen::Vector3d g = rng.normal3();
        p += sigma.cwiseProduct(g);
    }

    Point3 lo = Point3::Zero(), hi = Point3::Ones();
    if (!inliers.empty()) {
        bounding_box(inliers, lo, hi);
    } else {
        PointSet transformed(spec.n_model);
        for (int i = 0; i < spec.n_model; ++i) {
            transformed[i] = apply_transform(scene.ground_truth, scene.model[i]);
        }
        if (!transformed.empty()) bounding_box(transformed, lo, hi);
    }

    scene.data = inliers;
    scene.labels.resize(spec.n_inliers + spec.n_outliers);
    for (int i = 0; i < spec.n_inliers; ++i) scene.labels[i] = i;
    for (int i = 0; i < spec.n_outliers; ++i) {
        scene.data.push_back(rng.uniform_box(lo, hi));
        scene.labels[spec.n_inliers + i] = -1;
    }
    return scene;
}

Metrics compute_metrics(const RigidResult& result, const RigidTransform& ground_truth,
                        const std::vector<int>& labels, const PointSet& data,
                        const PointSet& model, bool native_is_map, double nn_threshold) {
    const int m = static_cast<int>(data.size());
    if (static_cast<int>(labels.size()) != m ||
        static_cast<int>(result.assignment.labels.size()) != m) {
        throw InvalidConfigError("compute_metrics: size mismatch");
    }
    Metrics out;
    out.iterations = result.iterations;

    const double angle =
        rotation_geodesic_angle(result.transform.rotation, ground_truth.rotation);
    out.rotation_error_pct = 100.0 * angle / std::numbers::pi;

    const double tg_norm = ground_truth.translation.norm();
    const double t_err = (result.transform.translation - ground_truth.translation).norm();
    // Relative error, absolute when the ground-truth translation is zero;
    // capped at 100 so wild failures stay in range.
    out.translation_error_pct =
        std::min(100.0, tg_norm < 1e-12 ? 100.0 * t_err : 100.0 * t_err / tg_norm);

    int map_correct = 0;
    for (int j = 0; j < m; ++j) {
        const int truth = labels[j];
        const int pred = result.assignment.labels[j];
        const bool ok = (truth < 0 && pred == Assignment::kOutlier) ||
                        (truth >= 0 && pred == truth);
        if (ok) ++map_correct;
    }
    out.correct_match_map_pct = 100.0 * map_correct / std::max(1, m);

    // Nearest-neighbour counting: each model point retains its closest
    // data point when within the threshold; a data point is classified
    // inlier when some model point retains it.
    const PointSet transformed = apply_transform(result.transform, model);
    std::vector<double> best_dist(m, std::numeric_limits<double>::max());
    std::vector<std::uint8_t> kept(m, 0);
    for (const auto& mp : transformed) {
        int jbest = -1;
        double dbest = std::numeric_limits<double>::max();
        for (int j = 0; j < m; ++j) {
            const double d = (data[j] - mp).norm();
            if (d < dbest) {
                dbest = d;
                jbest = j;
            }
        }
        if (jbest >= 0 && dbest <= nn_threshold && dbest < best_dist[jbest]) {
            best_dist[jbest] = dbest;
            kept[jbest] = 1;
        }
    }
    int nn_correct = 0;
    for (int j = 0; j < m; ++j) {
        if ((labels[j] >= 0) == (kept[j] != 0)) ++nn_correct;
    }
    out.correct_match_nn_pct = 100.0 * nn_correct / std::max(1, m);
    out.correct_match_pct = native_is_map ? out.correct_match_map_pct
                                          : out.correct_match_nn_pct;

    double sum_sq = 0.0;
    int n_in = 0;
    for (int j = 0; j < m; ++j) {
        const int pred = result.assignment.labels[j];
        if (pred < 0) continue;
        sum_sq += (data[j] - transformed[pred]).squaredNorm();
        ++n_in;
    }
    out.minimization_error = n_in > 0 ? std::sqrt(sum_sq / n_in) : 0.0;
    return out;
}

namespace detail {

// One ICP run from a fixed starting pose. Appends the trimmed RMS error
// after every iteration to `error_trace` when provided.
RigidTransform icp_single_run(const PointSet& data, const PointSet& model,
                              const RigidTransform& start, double trim_fraction,
                              int max_iterations, double* final_error, int* iterations,
                              std::vector<double>* error_trace) {
    const int m = static_cast<int>(data.size());
    const int keep = std::max(3, static_cast<int>(std::ceil((1.0 - trim_fraction) * m)));

    RigidTransform t = start;
    double prev_err = std::numeric_limits<double>::max();
    int iters = 0;
    for (int it = 0; it < max_iterations; ++it) {
        const PointSet transformed = apply_transform(t, model);
        std::vector<std::pair<double, std::pair<int, int>>> pairs(m);
#pragma omp parallel for schedule(static)
        for (int j = 0; j < m; ++j) {
            int ibest = 0;
            double dbest = std::numeric_limits<double>::max();
            for (int i = 0; i < static_cast<int>(model.size()); ++i) {
                const double d = (data[j] - transformed[i]).squaredNorm();
                if (d < dbest) {
                    dbest = d;
                    ibest = i;
                }
            }
            pairs[j] = {dbest, {j, ibest}};
        }
        std::sort(pairs.begin(), pairs.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        const int h = std::min(keep, m);

        Eigen::Vector3d dc = Eigen::Vector3d::Zero(), mc = Eigen::Vector3d::Zero();
        for (int k = 0; k < h; ++k) {
            dc += data[pairs[k].second.first];
            mc += model[pairs[k].second.second];
        }
        dc /= h;
        mc /= h;
        Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
        for (int k = 0; k < h; ++k) {
            cross += (data[pairs[k].second.first] - dc) *
                     (model[pairs[k].second.second] - mc).transpose();
        }
        try {
            t.rotation = project_to_rotation(cross);
        } catch (const AmbiguousProjectionError&) {
            break;
        }
        t.translation = dc - t.rotation * mc;

        double err = 0.0;
        const PointSet moved = apply_transform(t, model);
        for (int k = 0; k < h; ++k) {
            err += (data[pairs[k].second.first] - moved[pairs[k].second.second]).squaredNorm();
        }
        err = std::sqrt(err / h);
        if (error_trace) error_trace->push_back(err);
        ++iters;
        if (prev_err - err < 1e-14) {
            prev_err = std::min(prev_err, err);
            break;
        }
        prev_err = err;
    }
    if (final_error) *final_error = prev_err;
    if (iterations) *iterations = iters;
    return t;
}

}  // namespace detail

RigidResult icp_trimmed(const PointSet& data, const PointSet& model,
                        const TrimmedIcpConfig& config) {
    if (model.size() < 3) throw InvalidConfigError("icp_trimmed: need >= 3 model points");
    const int m = static_cast<int>(data.size());
    const int n = static_cast<int>(model.size());

    const double threshold = config.match_threshold > 0.0
                                 ? config.match_threshold
                                 : 0.1 * std::max(bbox_diag(data), bbox_diag(model));

    Eigen::Vector3d data_c = Eigen::Vector3d::Zero(), model_c = Eigen::Vector3d::Zero();
    for (const auto& p : data) data_c += p;
    for (const auto& p : model) model_c += p;
    data_c /= std::max(1, m);
    model_c /= n;

    // Uniform rotation grid the restarts are drawn from.
    std::vector<Eigen::Matrix3d> grid;
    grid.push_back(Eigen::Matrix3d::Identity());
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    const int n_axes = 16;
    for (int a = 0; a < n_axes; ++a) {
        const double z = 1.0 - 2.0 * (a + 0.5) / n_axes;
        const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * a;
        const Eigen::Vector3d axis(rad * std::cos(phi), rad * std::sin(phi), z);
        for (int t = 1; t < 12; ++t) {
            grid.push_back(axis_angle_rotation(axis, t * std::numbers::pi / 6.0));
        }
    }

    Rng rng(config.seed);
    RigidTransform best;
    double best_err = std::numeric_limits<double>::max();
    int total_iters = 0;
    for (int restart = 0; restart < std::max(1, config.n_restarts); ++restart) {
        RigidTransform start;
        start.rotation = restart == 0
                             ? Eigen::Matrix3d::Identity()
                             : grid[static_cast<std::size_t>(rng.uniform01() * grid.size()) %
                                    grid.size()];
        start.translation = data_c - start.rotation * model_c;
        double err = std::numeric_limits<double>::max();
        int iters = 0;
        const RigidTransform t =
            detail::icp_single_run(data, model, start, config.trim_fraction,
                                   config.max_iterations, &err, &iters, nullptr);
        total_iters += iters;
        if (err < best_err) {
            best_err = err;
            best = t;
        }
    }

    // Final classification: each model point retains its nearest data
    // point when within the validation threshold.
    RigidResult res;
    res.transform = best;
    res.iterations = total_iters;
    res.converged = best_err < std::numeric_limits<double>::max();
    res.assignment.labels.assign(m, Assignment::kOutlier);
    const PointSet transformed = apply_transform(best, model);
    std::vector<double> claim_dist(m, std::numeric_limits<double>::max());
    for (int i = 0; i < n; ++i) {
        int jbest = -1;
        double dbest = std::numeric_limits<double>::max();
        for (int j = 0; j < m; ++j) {
            const double d = (data[j] - transformed[i]).norm();
            if (d < dbest) {
                dbest = d;
                jbest = j;
            }
        }
        if (jbest >= 0 && dbest <= threshold && dbest < claim_dist[jbest]) {
            claim_dist[jbest] = dbest;
            res.assignment.labels[jbest] = i;
        }
    }
    // One-hot posteriors so downstream consumers see a uniform interface.
    res.posteriors.alpha = Eigen::MatrixXd::Zero(m, n + 1);
    for (int j = 0; j < m; ++j) {
        const int lbl = res.assignment.labels[j];
        res.posteriors.alpha(j, lbl == Assignment::kOutlier ? n : lbl) = 1.0;
    }
    res.final_log_likelihood = -best_err;
    res.log_likelihood_trace = {-best_err};
    return res;
}

ArticulatedScene gen_articulated_scene(const ArticulatedModel& model,
                                       const std::vector<PoseParams>& trajectory,
                                       double noise_frac, double outlier_fraction,
                                       std::uint64_t seed) {
    model.validate();
    if (trajectory.empty()) {
        throw InvalidConfigError("gen_articulated_scene: empty trajectory");
    }
    const int total = model.total_points();
    const int n_outliers = static_cast<int>(std::lround(outlier_fraction * total));

    // Noise scale: fraction of the smallest rest-pose bounding-box extent
    // (the "thickness" of the shape). Scaling by the diagonal instead
    // would make the per-part noise comparable to the part size for any
    // chain and no tracker could follow.
    PointSet rest_points;
    const PartTransforms rest = forward_kinematics(model, PoseParams::rest(model));
    for (int p = 0; p < model.part_count(); ++p) {
        const RigidTransform tp = from_homogeneous(rest.world[p]);
        for (const auto& x : model.parts[p].points) {
            rest_points.push_back(apply_transform(tp, x));
        }
    }
    ArticulatedScene scene;
    {
        Point3 lo, hi;
        bounding_box(rest_points, lo, hi);
        scene.noise_sigma = noise_frac * (hi - lo).minCoeff();
    }

    Rng rng(seed);
    for (std::size_t f = 0; f < trajectory.size(); ++f) {
        ArticulatedFrame frame;
        frame.ground_truth = trajectory[f];
        const PartTransforms fk = forward_kinematics(model, trajectory[f]);

        PointSet clean;
        for (int p = 0; p < model.part_count(); ++p) {
            const RigidTransform tp = from_homogeneous(fk.world[p]);
            for (std::size_t i = 0; i < model.parts[p].points.size(); ++i) {
                clean.push_back(apply_transform(tp, model.parts[p].points[i]));
                frame.part_of_point.push_back(p);
                frame.component_of_point.push_back(static_cast<int>(i));
            }
        }
        frame.data = clean;
        for (auto& pt : frame.data) pt += scene.noise_sigma * rng.normal3();

        Point3 lo, hi;
        bounding_box(clean, lo, hi);
        const Point3 center = 0.5 * (lo + hi);
        const Point3 half = 0.55 * (hi - lo).cwiseMax(1e-9);  // box inflated by 10%
        for (int k = 0; k < n_outliers; ++k) {
            frame.data.push_back(rng.uniform_box(center - half, center + half));
            frame.part_of_point.push_back(-1);
            frame.component_of_point.push_back(-1);
        }
        scene.frames.push_back(std::move(frame));
    }
    return scene;
}

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::EcmprAniso: return "ecmpr-aniso";
        case Algorithm::EcmprIso: return "ecmpr-iso";
        case Algorithm::Icp: return "icp";
    }
    return "unknown";
}

std::optional<Algorithm> algorithm_from_name(const std::string& name) {
    if (name == "ecmpr-aniso") return Algorithm::EcmprAniso;
    if (name == "ecmpr-iso") return Algorithm::EcmprIso;
    if (name == "icp") return Algorithm::Icp;
    return std::nullopt;
}

namespace {

Metrics run_algorithm(Algorithm algo, const RigidScene& scene,
                      const MixtureConfig* config_override) {
    const auto t0 = std::chrono::steady_clock::now();
    const double threshold = 0.1 * bbox_diag(scene.data);
    Metrics metrics;
    if (algo == Algorithm::Icp) {
        TrimmedIcpConfig icp;
        icp.seed = Rng::mix(scene.spec.seed, 0x1C9u);
        icp.trim_fraction =
            scene.data.empty()
                ? 0.4
                : std::clamp(static_cast<double>(scene.spec.n_outliers) / scene.data.size(),
                             0.1, 0.8);
        const RigidResult res = icp_trimmed(scene.data, scene.model, icp);
        metrics = compute_metrics(res, scene.ground_truth, scene.labels, scene.data,
                                  scene.model, /*native_is_map=*/false, threshold);
    } else {
        MixtureConfig config =
            config_override ? *config_override
                            : MixtureConfig::defaults_for(
                                  scene.data, static_cast<int>(scene.model.size()));
        config.covariance_mode = algo == Algorithm::EcmprAniso
                                     ? CovarianceMode::Common
                                     : CovarianceMode::IsotropicCommon;
        const RigidResult res = ecmpr_rigid(scene.data, scene.model, config);
        metrics = compute_metrics(res, scene.ground_truth, scene.labels, scene.data,
                                  scene.model, /*native_is_map=*/true, threshold);
    }
    metrics.wall_time_ms = elapsed_ms(t0);
    return metrics;
}

Metrics accumulate_mean(const std::vector<Metrics>& rows) {
    Metrics m;
    std::vector<double> v(rows.size());
    auto field = [&](auto getter) {
        for (std::size_t i = 0; i < rows.size(); ++i) v[i] = getter(rows[i]);
        return stats::mean(v);
    };
    m.rotation_error_pct = field([](const Metrics& r) { return r.rotation_error_pct; });
    m.translation_error_pct = field([](const Metrics& r) { return r.translation_error_pct; });
    m.correct_match_pct = field([](const Metrics& r) { return r.correct_match_pct; });
    m.correct_match_map_pct = field([](const Metrics& r) { return r.correct_match_map_pct; });
    m.correct_match_nn_pct = field([](const Metrics& r) { return r.correct_match_nn_pct; });
    m.minimization_error = field([](const Metrics& r) { return r.minimization_error; });
    m.iterations = static_cast<int>(
        std::lround(field([](const Metrics& r) { return static_cast<double>(r.iterations); })));
    m.wall_time_ms = field([](const Metrics& r) { return r.wall_time_ms; });
    return m;
}

Metrics accumulate_stddev(const std::vector<Metrics>& rows) {
    Metrics m;
    std::vector<double> v(rows.size());
    auto field = [&](auto getter) {
        for (std::size_t i = 0; i < rows.size(); ++i) v[i] = getter(rows[i]);
        return stats::stddev(v);
    };
    m.rotation_error_pct = field([](const Metrics& r) { return r.rotation_error_pct; });
    m.translation_error_pct = field([](const Metrics& r) { return r.translation_error_pct; });
    m.correct_match_pct = field([](const Metrics& r) { return r.correct_match_pct; });
    m.correct_match_map_pct = field([](const Metrics& r) { return r.correct_match_map_pct; });
    m.correct_match_nn_pct = field([](const Metrics& r) { return r.correct_match_nn_pct; });
    m.minimization_error = field([](const Metrics& r) { return r.minimization_error; });
    m.wall_time_ms = field([](const Metrics& r) { return r.wall_time_ms; });
    return m;
}

}  // namespace

TrialBatch run_batch(const BatchSpec& spec, const MixtureConfig* config_override) {
    if (spec.n_trials < 1) throw InvalidConfigError("run_batch: n_trials must be >= 1");
    if (spec.sweep_rotation_deg.empty() || spec.algorithms.empty()) {
        throw InvalidConfigError("run_batch: empty sweep or algorithm list");
    }
    const int n_sweep = static_cast<int>(spec.sweep_rotation_deg.size());
    const int n_algos = static_cast<int>(spec.algorithms.size());
    const int n_jobs = n_sweep * spec.n_trials;

    TrialBatch batch;
    batch.rows.resize(static_cast<std::size_t>(n_jobs) * n_algos);

    const int threads = spec.n_threads > 0 ? spec.n_threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int job = 0; job < n_jobs; ++job) {
        const int s = job / spec.n_trials;
        const int trial = job % spec.n_trials;
        RigidSceneSpec scene_spec = spec.base_scene;
        scene_spec.rotation_deg = spec.sweep_rotation_deg[s];
        scene_spec.seed = Rng::mix(spec.master_seed, static_cast<std::uint64_t>(s),
                                   static_cast<std::uint64_t>(trial));
        const RigidScene scene = gen_rigid_scene(scene_spec);
        for (int a = 0; a < n_algos; ++a) {
            TrialRow row;
            row.trial = trial;
            row.sweep_value = spec.sweep_rotation_deg[s];
            row.algorithm = spec.algorithms[a];
            row.metrics = run_algorithm(spec.algorithms[a], scene, config_override);
            batch.rows[static_cast<std::size_t>(job) * n_algos + a] = row;
        }
    }

    for (int s = 0; s < n_sweep; ++s) {
        for (int a = 0; a < n_algos; ++a) {
            std::vector<Metrics> rows;
            rows.reserve(spec.n_trials);
            for (int trial = 0; trial < spec.n_trials; ++trial) {
                rows.push_back(
                    batch.rows[(static_cast<std::size_t>(s) * spec.n_trials + trial) * n_algos + a]
                        .metrics);
            }
            SweepAggregate agg;
            agg.sweep_value = spec.sweep_rotation_deg[s];
            agg.algorithm = spec.algorithms[a];
            agg.mean = accumulate_mean(rows);
            agg.stddev = accumulate_stddev(rows);
            agg.n_trials = spec.n_trials;
            batch.aggregates.push_back(agg);
        }
    }
    return batch;
}

}  // namespace ecmpr
