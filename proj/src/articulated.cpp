#include "ecmpr/articulated.hpp"

#include <cmath>

namespace ecmpr {

int ArticulatedModel::total_points() const {
    int n = 0;
    for (const auto& p : parts) n += static_cast<int>(p.points.size());
    return n;
}

void ArticulatedModel::validate() const {
    if (parts.empty()) throw InvalidConfigError("articulated model: no parts");
    if (parts[0].parent != -1 || parts[0].joint.has_value()) {
        throw InvalidConfigError("articulated model: part 0 must be a jointless root");
    }
    for (int p = 1; p < part_count(); ++p) {
        const auto& part = parts[p];
        if (part.parent < 0 || part.parent >= p) {
            throw InvalidConfigError("articulated model: parents must precede children");
        }
        if (!part.joint || part.joint->dof() < 1 || part.joint->dof() > 3) {
            throw InvalidConfigError("articulated model: non-root parts need 1-3 dof joints");
        }
    }
    for (const auto& part : parts) {
        if (part.points.size() < 3) {
            throw InvalidConfigError("articulated model: every part needs >= 3 points");
        }
    }
}

PoseParams PoseParams::rest(const ArticulatedModel& model) {
    PoseParams pose;
    pose.joint_angles.resize(model.part_count());
    for (int p = 1; p < model.part_count(); ++p) {
        pose.joint_angles[p].assign(model.parts[p].joint->dof(), 0.0);
    }
    return pose;
}

Eigen::Matrix3d joint_rotation(const std::vector<Eigen::Vector3d>& axes,
                               const std::vector<double>& angles) {
    if (axes.size() != angles.size()) {
        throw InvalidConfigError("joint_rotation: axis/angle count mismatch");
    }
    Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
    for (std::size_t k = 0; k < axes.size(); ++k) {
        r = r * axis_angle_rotation(axes[k], angles[k]);
    }
    return r;
}

PartTransforms forward_kinematics(const ArticulatedModel& model, const PoseParams& pose) {
    model.validate();
    if (static_cast<int>(pose.joint_angles.size()) != model.part_count()) {
        throw InvalidConfigError("forward_kinematics: pose size mismatch");
    }
    PartTransforms out;
    out.world.resize(model.part_count());
    out.pre_joint.resize(model.part_count());

    out.pre_joint[0] = Homogeneous4::Identity();
    out.world[0] = to_homogeneous(pose.root);
    for (int p = 1; p < model.part_count(); ++p) {
        const auto& joint = *model.parts[p].joint;
        out.pre_joint[p] = compose(out.world[model.parts[p].parent], joint.fixed_frame);
        Homogeneous4 motion = Homogeneous4::Identity();
        motion.topLeftCorner<3, 3>() = joint_rotation(joint.axes, pose.joint_angles[p]);
        out.world[p] = compose(out.pre_joint[p], motion);
    }
    return out;
}

std::pair<PointSet, Eigen::Vector3d> substitute_part_problem(
    const Homogeneous4& parent_frame, const PointSet& part_points) {
    const Eigen::Matrix3d r = parent_frame.topLeftCorner<3, 3>();
    PointSet v(part_points.size());
    for (std::size_t i = 0; i < part_points.size(); ++i) v[i] = r * part_points[i];
    return {v, parent_frame.topRightCorner<3, 1>()};
}

PartRegistration register_part(const PointSet& data, const PointSet& v,
                               const Eigen::Vector3d& t_offset,
                               const MixtureConfig& config) {
    PartRegistration reg;
    reg.result = detail::ecmpr_core(data, v, config, RigidTransform{}, t_offset);
    reg.u = reg.result.transform.rotation;
    return reg;
}

namespace {

// Best angle about a fixed axis approximating R in Frobenius norm:
// maximize a'Ra + cos(t)(tr R - a'Ra) - sin(t) tr([a]x R).
double best_axis_angle(const Eigen::Matrix3d& r, const Eigen::Vector3d& axis) {
    const Eigen::Vector3d a = axis.normalized();
    const double diag = a.dot(r * a);
    const double c = r.trace() - diag;
    Eigen::Matrix3d ax;
    ax << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
    const double s = -(ax * r).trace();
    if (std::abs(c) < 1e-300 && std::abs(s) < 1e-300) return 0.0;
    return std::atan2(s, c);
}

}  // namespace

std::vector<double> fit_joint_angles(const Eigen::Matrix3d& target,
                                     const std::vector<Eigen::Vector3d>& axes,
                                     const std::vector<double>& init) {
    const int dof = static_cast<int>(axes.size());
    std::vector<double> angles(dof, 0.0);
    if (!init.empty()) {
        if (static_cast<int>(init.size()) != dof) {
            throw InvalidConfigError("fit_joint_angles: init size mismatch");
        }
        angles = init;
    }
    if (dof == 1) {
        angles[0] = best_axis_angle(target, axes[0]);
        return angles;
    }

    // Coordinate descent: each sweep re-fits one axis with the others
    // frozen; every single-axis fit is the closed-form optimum so the
    // Frobenius error is non-increasing.
    for (int sweep = 0; sweep < 100; ++sweep) {
        double change = 0.0;
        for (int k = 0; k < dof; ++k) {
            Eigen::Matrix3d before = Eigen::Matrix3d::Identity();
            for (int i = 0; i < k; ++i) {
                before = before * axis_angle_rotation(axes[i], angles[i]);
            }
            Eigen::Matrix3d after = Eigen::Matrix3d::Identity();
            for (int i = k + 1; i < dof; ++i) {
                after = after * axis_angle_rotation(axes[i], angles[i]);
            }
            // target ~ before * rot(a_k, t) * after
            const Eigen::Matrix3d residual = before.transpose() * target * after.transpose();
            const double updated = best_axis_angle(residual, axes[k]);
            change = std::max(change, std::abs(updated - angles[k]));
            angles[k] = updated;
        }
        if (change < 1e-13) break;
    }

    // Gauss-Newton polish: coordinate descent alone converges slowly when
    // the axes couple strongly, and lands in the wrong branch of the
    // two-fold decomposition ambiguity for some targets. Multi-start over
    // branch variants covers that.
    auto residual = [&](const std::vector<double>& th) {
        const Eigen::Matrix3d diff = joint_rotation(axes, th) - target;
        return Eigen::Matrix<double, 9, 1>(
            Eigen::Map<const Eigen::Matrix<double, 9, 1>>(diff.data()));
    };
    auto polish = [&](std::vector<double> th) {
        for (int it = 0; it < 40; ++it) {
            const Eigen::Matrix<double, 9, 1> r0 = residual(th);
            if (r0.norm() < 1e-14) break;
            Eigen::Matrix<double, 9, Eigen::Dynamic> jac(9, dof);
            const double h = 1e-7;
            for (int k = 0; k < dof; ++k) {
                std::vector<double> plus = th, minus = th;
                plus[k] += h;
                minus[k] -= h;
                jac.col(k) = (residual(plus) - residual(minus)) / (2.0 * h);
            }
            const Eigen::MatrixXd jtj =
                jac.transpose() * jac + 1e-12 * Eigen::MatrixXd::Identity(dof, dof);
            const Eigen::VectorXd step = jtj.ldlt().solve(-jac.transpose() * r0);
            std::vector<double> next = th;
            for (int k = 0; k < dof; ++k) next[k] += step(k);
            if (residual(next).norm() >= r0.norm()) break;
            th = next;
            if (step.norm() < 1e-14) break;
        }
        return th;
    };
    auto wrap = [](double a) {
        while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
        while (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
        return a;
    };

    std::vector<std::vector<double>> starts{angles};
    if (dof >= 2) {
        for (int k = 0; k < dof; ++k) {
            auto v = angles;
            v[k] = wrap(v[k] + std::numbers::pi);
            starts.push_back(v);
        }
        if (dof == 3) {
            // The mirrored branch of a three-axis decomposition.
            starts.push_back({wrap(angles[0] + std::numbers::pi), wrap(-angles[1]),
                              wrap(angles[2] + std::numbers::pi)});
            starts.push_back({wrap(angles[0] + std::numbers::pi),
                              wrap(std::numbers::pi - angles[1]),
                              wrap(angles[2] + std::numbers::pi)});
        }
        starts.push_back(std::vector<double>(dof, 0.0));
    }

    std::vector<double> best = angles;
    double best_err = residual(angles).norm();
    for (const auto& start : starts) {
        const std::vector<double> candidate = polish(start);
        const double err = residual(candidate).norm();
        if (err < best_err) {
            best_err = err;
            best = candidate;
        }
        if (best_err < 1e-12) break;
    }
    return best;
}

namespace {
// Clamped part registrations see heavy clutter from the rest of the
// scene; these scales size the initial covariance, the reachability
// gate and the outlier sphere to the part instead of the whole scene.
constexpr double kPartSigmaScale = 1.0;   // x part bounding-box diagonal
constexpr double kPartGateScale = 1.5;    // x part kinematic reach
constexpr double kPartRadiusScale = 0.25;  // x part bounding-box diagonal
// Covariance restart scale (x part diagonal) for warm-started frames.
constexpr double kTrackSigmaScale = 0.25;
}  // namespace

ArticulatedResult ecmpr_articulated(const PointSet& data, const ArticulatedModel& model,
                                    const MixtureConfig& config,
                                    const PoseParams* warm_start) {
    model.validate();
    const int m = static_cast<int>(data.size());
    if (m < static_cast<int>(model.parts[0].points.size())) {
        throw InvalidConfigError("ecmpr_articulated: fewer data points than root points");
    }

    const int num_parts = model.part_count();
    PoseParams pose = warm_start ? *warm_start : PoseParams::rest(model);

    // Each part registers against heavy structured clutter (the other
    // parts). Per-component covariances collapse onto foreign clusters
    // there; the pooled covariance peels them into the outlier class.
    MixtureConfig part_config = config;
    if (part_config.covariance_mode == CovarianceMode::PerComponent) {
        part_config.covariance_mode = CovarianceMode::Common;
    }
    MixtureConfig root_config = part_config;
    root_config.cap_radius_for(static_cast<int>(model.parts[0].points.size()));
    if (warm_start) {
        // Tracking: covariances restart large at the root-part scale. The
        // whole-scene scale would make the first E-step pose-insensitive
        // and dissolve the warm start into a fresh cold anneal.
        Point3 rlo = Point3::Constant(std::numeric_limits<double>::max());
        Point3 rhi = Point3::Constant(std::numeric_limits<double>::lowest());
        for (const auto& x : model.parts[0].points) {
            rlo = rlo.cwiseMin(x);
            rhi = rhi.cwiseMax(x);
        }
        root_config.init_sigma =
            std::min(root_config.init_sigma, kTrackSigmaScale * (rhi - rlo).norm());
        // A tighter outlier sphere keeps stray claims from biasing the
        // root between frames.
        root_config.outlier_radius =
            std::min(root_config.outlier_radius, 0.025 * (rhi - rlo).norm());
        root_config.cap_radius_for(static_cast<int>(model.parts[0].points.size()));
    }

    ArticulatedResult res;
    res.part_of_point.assign(m, -1);
    res.component_of_point.assign(m, -1);
    res.part_registered.assign(num_parts, 0);
    res.part_iterations.assign(num_parts, 0);
    res.part_log_likelihood.assign(num_parts, 0.0);

    // Active data: indices into the original set, shrinking as parts
    // claim their inliers.
    std::vector<int> active(m);
    for (int j = 0; j < m; ++j) active[j] = j;

    auto gather = [&](const std::vector<int>& idx) {
        PointSet pts(idx.size());
        for (std::size_t j = 0; j < idx.size(); ++j) pts[j] = data[idx[j]];
        return pts;
    };

    auto consume_inliers = [&](int part, const Assignment& assign) {
        std::vector<int> remaining;
        remaining.reserve(active.size());
        for (std::size_t j = 0; j < active.size(); ++j) {
            if (assign.labels[j] == Assignment::kOutlier) {
                remaining.push_back(active[j]);
            } else {
                res.part_of_point[active[j]] = part;
                res.component_of_point[active[j]] = assign.labels[j];
            }
        }
        active.swap(remaining);
    };

    // Root part: free six-dof registration over the whole data set.
    {
        const RigidTransform init = warm_start ? pose.root : RigidTransform{};
        try {
            const RigidResult root = detail::ecmpr_core(gather(active), model.parts[0].points,
                                                        root_config, init, std::nullopt);
            pose.root = root.transform;
            res.part_registered[0] = 1;
            res.part_iterations[0] = root.iterations;
            res.part_log_likelihood[0] = root.final_log_likelihood;
            consume_inliers(0, root.assignment);
        } catch (const NoSupportError&) {
            // Root keeps its initial pose; everything stays in the pool.
        }
    }

    for (int p = 1; p < num_parts; ++p) {
        const auto& part = model.parts[p];
        // Kinematics up to p-1 with the angles fitted so far.
        const PartTransforms chain = forward_kinematics(model, pose);
        const Homogeneous4& parent_frame = chain.pre_joint[p];
        const auto [v, t_offset] = substitute_part_problem(parent_frame, part.points);

        if (active.size() < 1) break;

        Point3 lo = Point3::Constant(std::numeric_limits<double>::max());
        Point3 hi = Point3::Constant(std::numeric_limits<double>::lowest());
        for (const auto& x : part.points) {
            lo = lo.cwiseMin(x);
            hi = hi.cwiseMax(x);
        }
        const double part_diag = (hi - lo).norm();

        // A clamped part can only explain data inside its reach sphere
        // around t_offset (plus noise headroom); farther points are
        // outliers for this part by construction and would only distort
        // the anneal. They stay in the pool for the parts that follow.
        double reach = 0.0;
        for (const auto& vi : v) reach = std::max(reach, vi.norm());
        const double gate = kPartGateScale * reach + part_diag;
        std::vector<int> in_gate;   // indices into `active`
        in_gate.reserve(active.size());
        for (std::size_t j = 0; j < active.size(); ++j) {
            if ((data[active[j]] - t_offset).norm() <= gate) {
                in_gate.push_back(static_cast<int>(j));
            }
        }
        if (static_cast<int>(in_gate.size()) < 1) continue;  // part unregistered
        PointSet gated_data(in_gate.size());
        for (std::size_t k = 0; k < in_gate.size(); ++k) {
            gated_data[k] = data[active[in_gate[k]]];
        }

        const Eigen::Matrix3d r_parent = parent_frame.topLeftCorner<3, 3>();

        // A clamped part can only reach a sphere of its own radius around
        // t_offset; "large" initial covariances are large at that scale,
        // not at the whole-scene scale, or distant clutter drowns the
        // E-step.
        MixtureConfig clamp_config = part_config;
        clamp_config.init_sigma = std::min(
            config.init_sigma,
            (warm_start ? kTrackSigmaScale : kPartSigmaScale) * part_diag);
        clamp_config.outlier_radius =
            std::min(config.outlier_radius, kPartRadiusScale * part_diag);
        clamp_config.cap_radius_for(static_cast<int>(part.points.size()));

        try {
            PartRegistration reg;
            if (warm_start) {
                // Warm start the conjugated rotation from the previous angles.
                const Eigen::Matrix3d r_joint =
                    joint_rotation(part.joint->axes, pose.joint_angles[p]);
                const Eigen::Matrix3d u0 = r_parent * r_joint * r_parent.transpose();
                reg.result = detail::ecmpr_core(gated_data, v, clamp_config,
                                                RigidTransform{u0, t_offset}, t_offset);
                reg.u = reg.result.transform.rotation;
            } else {
                reg = register_part(gated_data, v, t_offset, clamp_config);
            }
            const Eigen::Matrix3d r_joint = r_parent.transpose() * reg.u * r_parent;
            pose.joint_angles[p] = fit_joint_angles(
                r_joint, part.joint->axes,
                warm_start ? pose.joint_angles[p] : std::vector<double>{});
            res.part_registered[p] = 1;
            res.part_iterations[p] = reg.result.iterations;
            res.part_log_likelihood[p] = reg.result.final_log_likelihood;
            // Expand the gated assignment back onto the active pool.
            Assignment full;
            full.labels.assign(active.size(), Assignment::kOutlier);
            for (std::size_t k = 0; k < in_gate.size(); ++k) {
                full.labels[in_gate[k]] = reg.result.assignment.labels[k];
            }
            consume_inliers(p, full);
        } catch (const NoSupportError&) {
            // Unregistered: keep the previous/rest joint, leave the data pool.
        }
    }

    res.pose = pose;
    res.transforms = forward_kinematics(model, pose);
    return res;
}

}  // namespace ecmpr
