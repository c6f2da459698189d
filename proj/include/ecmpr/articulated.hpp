#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ecmpr/rigid.hpp"

namespace ecmpr {

/// One joint: a fixed change of coordinates followed by 1-3 single-axis
/// rotations applied in declaration order.
struct JointSpec {
    Homogeneous4 fixed_frame = Homogeneous4::Identity();
    std::vector<Eigen::Vector3d> axes;  // unit axes, size 1..3

    int dof() const { return static_cast<int>(axes.size()); }
};

struct ArticulatedPart {
    std::string name;
    int parent = -1;                 // -1 for the root
    std::optional<JointSpec> joint;  // absent for the root
    PointSet points;
};

struct ArticulatedModel {
    std::vector<ArticulatedPart> parts;

    int part_count() const { return static_cast<int>(parts.size()); }
    int total_points() const;
    /// Root jointless, parents form a tree rooted at part 0, every part
    /// has at least 3 points. Throws InvalidConfigError otherwise.
    void validate() const;
};

struct PoseParams {
    RigidTransform root;
    std::vector<std::vector<double>> joint_angles;  // [0] empty, [p] has dof(p) entries

    static PoseParams rest(const ArticulatedModel& model);
};

struct PartTransforms {
    std::vector<Homogeneous4> world;      // T_p
    std::vector<Homogeneous4> pre_joint;  // T_parent * fixed_frame (identity for root)
};

/// Composition of joint rotations about `axes` by `angles`, in order.
Eigen::Matrix3d joint_rotation(const std::vector<Eigen::Vector3d>& axes,
                               const std::vector<double>& angles);

/// T_0 = Q_0, T_p = T_parent * fixed_frame_p * rot(theta_p).
PartTransforms forward_kinematics(const ArticulatedModel& model, const PoseParams& pose);

/// Substitution reducing the part subproblem to a rigid one with the
/// translation held at the parent's: V_i = R_parent * X_i and t_offset.
std::pair<PointSet, Eigen::Vector3d> substitute_part_problem(
    const Homogeneous4& parent_frame, const PointSet& part_points);

struct PartRegistration {
    Eigen::Matrix3d u = Eigen::Matrix3d::Identity();  // world-frame part rotation
    RigidResult result;
};

/// ECMPR with the translation clamped to t_offset; the estimated rotation
/// is the conjugated joint rotation U_p.
PartRegistration register_part(const PointSet& data, const PointSet& v,
                               const Eigen::Vector3d& t_offset,
                               const MixtureConfig& config);

/// Angles about the declared axes whose composition is Frobenius-nearest
/// to `target`. Exact for single-axis joints; alternating closed-form
/// fits otherwise. `init` seeds the search (tracking warm starts).
std::vector<double> fit_joint_angles(const Eigen::Matrix3d& target,
                                     const std::vector<Eigen::Vector3d>& axes,
                                     const std::vector<double>& init = {});

struct ArticulatedResult {
    PoseParams pose;
    PartTransforms transforms;
    /// Per original data point: owning part (or -1) and component index
    /// within that part's point list (or -1).
    std::vector<int> part_of_point;
    std::vector<int> component_of_point;
    std::vector<std::uint8_t> part_registered;
    std::vector<int> part_iterations;
    std::vector<double> part_log_likelihood;
};

/// Incremental articulated registration: the root is registered against
/// the full data set, its inliers are removed, then each part registers
/// against the shrinking remainder in declaration order. A part with no
/// support keeps its previous (or rest) joint and is flagged.
ArticulatedResult ecmpr_articulated(const PointSet& data, const ArticulatedModel& model,
                                    const MixtureConfig& config,
                                    const PoseParams* warm_start = nullptr);



}  // namespace ecmpr
