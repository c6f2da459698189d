#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ecmpr/articulated.hpp"
#include "ecmpr/synth.hpp"
#include "helpers.hpp"

using namespace ecmpr;
using test_helpers::make_chain;

namespace {

constexpr double kPi = std::numbers::pi;

MixtureConfig chain_config(const PointSet& data) {
    return MixtureConfig::defaults_for(data, 20);
}

}  // namespace

TEST_CASE("forward kinematics rest pose") {
    ArticulatedModel model = make_chain(4, 6, 51);
    const PoseParams rest = PoseParams::rest(model);
    const PartTransforms fk = forward_kinematics(model, rest);

    // T_p is the running product of fixed frames at rest.
    Homogeneous4 acc = Homogeneous4::Identity();
    for (int p = 0; p < model.part_count(); ++p) {
        if (p > 0) acc = compose(acc, model.parts[p].joint->fixed_frame);
        CHECK((fk.world[p] - acc).norm() < 1e-14);
    }

    // With identity fixed frames all points stay put.
    ArticulatedModel flat = model;
    for (int p = 1; p < flat.part_count(); ++p) {
        flat.parts[p].joint->fixed_frame = Homogeneous4::Identity();
    }
    const PartTransforms fk_flat = forward_kinematics(flat, PoseParams::rest(flat));
    for (int p = 0; p < flat.part_count(); ++p) {
        CHECK((fk_flat.world[p] - Homogeneous4::Identity()).norm() < 1e-15);
    }
}

TEST_CASE("forward kinematics: rigid whole-body translation") {
    ArticulatedModel model = make_chain(3, 5, 52);
    PoseParams pose = PoseParams::rest(model);
    pose.root.translation = Point3(3, -1, 2);
    const PartTransforms fk = forward_kinematics(model, pose);
    const PartTransforms rest = forward_kinematics(model, PoseParams::rest(model));
    for (int p = 0; p < model.part_count(); ++p) {
        for (const auto& x : model.parts[p].points) {
            const Point3 moved = apply_transform(from_homogeneous(fk.world[p]), x);
            const Point3 base = apply_transform(from_homogeneous(rest.world[p]), x);
            CHECK((moved - base - Point3(3, -1, 2)).norm() < 1e-13);
        }
    }
}

TEST_CASE("two-part chain rotates about the joint frame z axis") {
    ArticulatedModel model = make_chain(2, 4, 53);
    PoseParams pose = PoseParams::rest(model);
    pose.joint_angles[1] = {kPi / 2.0};
    const PartTransforms fk = forward_kinematics(model, pose);

    // Hand composition: T_1 = F_1 * Rz(90).
    Homogeneous4 rz = Homogeneous4::Identity();
    rz.topLeftCorner<3, 3>() = axis_angle_rotation(Eigen::Vector3d::UnitZ(), kPi / 2.0);
    const Homogeneous4 expect = compose(model.parts[1].joint->fixed_frame, rz);
    CHECK((fk.world[1] - expect).norm() < 1e-14);
}

TEST_CASE("recomposition residual vanishes") {
    ArticulatedModel model = make_chain(5, 4, 54);
    Rng rng(55);
    PoseParams pose = PoseParams::rest(model);
    pose.root.rotation = rng.random_rotation();
    pose.root.translation = rng.normal3();
    for (int p = 1; p < model.part_count(); ++p) {
        pose.joint_angles[p] = {rng.uniform(-1.2, 1.2)};
    }
    const PartTransforms fk = forward_kinematics(model, pose);
    for (int p = 1; p < model.part_count(); ++p) {
        Homogeneous4 motion = Homogeneous4::Identity();
        motion.topLeftCorner<3, 3>() =
            joint_rotation(model.parts[p].joint->axes, pose.joint_angles[p]);
        const Homogeneous4 q = compose(model.parts[p].joint->fixed_frame, motion);
        CHECK((fk.world[p] - compose(fk.world[model.parts[p].parent], q)).norm() < 1e-12);
    }
}

TEST_CASE("conjugation identity round-trips") {
    Rng rng(56);
    for (int k = 0; k < 50; ++k) {
        const Eigen::Matrix3d r_parent = rng.random_rotation();
        const Eigen::Matrix3d r_joint = rng.random_rotation();
        const Eigen::Matrix3d u = r_parent * r_joint * r_parent.transpose();
        CHECK(is_rotation_matrix(u, 1e-12));
        const Eigen::Matrix3d back = r_parent.transpose() * u * r_parent;
        CHECK((back - r_joint).norm() < 1e-12);
    }
}

TEST_CASE("substitute_part_problem at identity and rotated parents") {
    Rng rng(57);
    PointSet pts;
    for (int i = 0; i < 5; ++i) pts.push_back(rng.normal3());

    const auto [v_id, t_id] = substitute_part_problem(Homogeneous4::Identity(), pts);
    CHECK(t_id.norm() < 1e-15);
    for (int i = 0; i < 5; ++i) CHECK((v_id[i] - pts[i]).norm() < 1e-15);

    RigidTransform parent;
    parent.rotation = axis_angle_rotation(Eigen::Vector3d::UnitY(), kPi / 2.0);
    parent.translation = Point3(1, 2, 3);
    const auto [v, t] = substitute_part_problem(to_homogeneous(parent), pts);
    CHECK((t - Point3(1, 2, 3)).norm() < 1e-15);
    for (int i = 0; i < 5; ++i) {
        CHECK((v[i] - parent.rotation * pts[i]).norm() < 1e-14);
    }
}

TEST_CASE("register_part recovers an exact conjugated rotation") {
    Rng rng(58);
    PointSet v;
    for (int i = 0; i < 10; ++i) {
        v.push_back(rng.uniform_box(Point3(0.2, -0.3, -0.3), Point3(1.2, 0.3, 0.3)));
    }
    const Eigen::Vector3d t_offset(0.5, -0.25, 1.0);
    const Eigen::Matrix3d u_true =
        axis_angle_rotation(rng.unit_vector(), 35.0 * kPi / 180.0);

    PointSet data(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) data[i] = u_true * v[i] + t_offset;

    const PartRegistration reg = register_part(data, v, t_offset, chain_config(data));
    CHECK((reg.u - u_true).norm() < 1e-5);
    CHECK((reg.result.transform.translation - t_offset).norm() < 1e-15);

    const PartRegistration id = register_part(v, v, Eigen::Vector3d::Zero(),
                                              chain_config(v));
    CHECK((id.u - Eigen::Matrix3d::Identity()).norm() < 1e-5);
}

TEST_CASE("register_part rejects outliers on a noise-free part") {
    Rng rng(59);
    PointSet v;
    for (int i = 0; i < 8; ++i) {
        v.push_back(rng.uniform_box(Point3(0.1, -0.3, -0.3), Point3(1.1, 0.3, 0.3)));
    }
    const Eigen::Vector3d t_offset(0.2, 0.4, -0.6);
    const Eigen::Matrix3d u_true =
        axis_angle_rotation(Eigen::Vector3d::UnitZ(), -40.0 * kPi / 180.0);

    PointSet data(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) data[i] = u_true * v[i] + t_offset;
    for (int k = 0; k < 3; ++k) {  // ~30% extra uniform outliers
        data.push_back(rng.uniform_box(Point3(-1, -1, -1), Point3(2, 2, 2)));
    }

    const PartRegistration reg = register_part(data, v, t_offset, chain_config(data));
    CHECK((reg.u - u_true).norm() < 1e-4);
    for (std::size_t j = 0; j < v.size(); ++j) {
        CHECK(reg.result.assignment.labels[j] == static_cast<int>(j));
    }
    for (std::size_t j = v.size(); j < data.size(); ++j) {
        CHECK(reg.result.assignment.labels[j] == Assignment::kOutlier);
    }
}

TEST_CASE("fit_joint_angles: single axis exact, multi axis round trip") {
    Rng rng(60);
    for (int k = 0; k < 20; ++k) {
        const Eigen::Vector3d axis = rng.unit_vector();
        const double theta = rng.uniform(-kPi + 0.1, kPi - 0.1);
        const auto fit = fit_joint_angles(axis_angle_rotation(axis, theta), {axis});
        CHECK(fit[0] == doctest::Approx(theta).epsilon(1e-12));
    }
    for (int k = 0; k < 20; ++k) {
        const std::vector<Eigen::Vector3d> axes{Eigen::Vector3d::UnitZ(),
                                                Eigen::Vector3d::UnitY()};
        const std::vector<double> truth{rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2)};
        const Eigen::Matrix3d target = joint_rotation(axes, truth);
        const auto fit = fit_joint_angles(target, axes);
        CHECK((joint_rotation(axes, fit) - target).norm() < 1e-10);
    }
    for (int k = 0; k < 20; ++k) {
        const std::vector<Eigen::Vector3d> axes{Eigen::Vector3d::UnitZ(),
                                                Eigen::Vector3d::UnitY(),
                                                Eigen::Vector3d::UnitX()};
        const Eigen::Matrix3d target = rng.random_rotation();
        const auto fit = fit_joint_angles(target, axes);
        CHECK((joint_rotation(axes, fit) - target).norm() < 1e-6);
    }
}

TEST_CASE("ecmpr_articulated: noise-free chain with outliers") {
    ArticulatedModel model = make_chain(4, 6, 61);
    PoseParams pose = PoseParams::rest(model);
    pose.root.rotation = axis_angle_rotation(Eigen::Vector3d::UnitZ(), 20.0 * kPi / 180.0);
    pose.root.translation = Point3(0.3, -0.2, 0.4);
    pose.joint_angles[1] = {-1.0};
    pose.joint_angles[2] = {0.8};
    pose.joint_angles[3] = {-0.6};

    const ArticulatedScene scene =
        gen_articulated_scene(model, {pose}, /*noise_frac=*/0.0, /*outlier_fraction=*/0.3, 63);
    const auto& frame = scene.frames[0];

    MixtureConfig config = MixtureConfig::defaults_for(frame.data, 12);
    config.convergence_eps = 1e-9;
    const ArticulatedResult res = ecmpr_articulated(frame.data, model, config);

    CHECK(rotation_geodesic_angle(res.pose.root.rotation, pose.root.rotation) / kPi < 1e-3);
    CHECK((res.pose.root.translation - pose.root.translation).norm() /
              pose.root.translation.norm() <
          1e-3);
    for (int p = 1; p < model.part_count(); ++p) {
        CHECK(res.part_registered[p] == 1);
        CHECK(std::abs(res.pose.joint_angles[p][0] - pose.joint_angles[p][0]) <
              0.1 * kPi / 180.0);
    }
}

TEST_CASE("ecmpr_articulated: rigid whole-body motion is absorbed by the root") {
    ArticulatedModel model = make_chain(3, 12, 63);
    PoseParams pose = PoseParams::rest(model);
    pose.root.rotation = axis_angle_rotation(Eigen::Vector3d::UnitY(), 15.0 * kPi / 180.0);
    pose.root.translation = Point3(0.5, 0.1, -0.3);

    const ArticulatedScene scene = gen_articulated_scene(model, {pose}, 0.0, 0.0, 64);
    const MixtureConfig config = MixtureConfig::defaults_for(scene.frames[0].data, 12);
    const ArticulatedResult res = ecmpr_articulated(scene.frames[0].data, model, config);

    CHECK(rotation_geodesic_angle(res.pose.root.rotation, pose.root.rotation) < 1e-3);
    for (int p = 1; p < model.part_count(); ++p) {
        CHECK(std::abs(res.pose.joint_angles[p][0]) < 1e-3);
    }
}

TEST_CASE("inlier bookkeeping partitions the data exactly once") {
    ArticulatedModel model = make_chain(4, 10, 65);
    PoseParams pose = PoseParams::rest(model);
    pose.joint_angles[1] = {-0.8};
    pose.joint_angles[2] = {0.6};
    pose.joint_angles[3] = {-0.5};
    const ArticulatedScene scene = gen_articulated_scene(model, {pose}, 0.0, 0.3, 66);
    const auto& frame = scene.frames[0];

    const MixtureConfig config = MixtureConfig::defaults_for(frame.data, 10);
    const ArticulatedResult res = ecmpr_articulated(frame.data, model, config);

    CHECK(res.part_of_point.size() == frame.data.size());
    for (std::size_t j = 0; j < frame.data.size(); ++j) {
        const int p = res.part_of_point[j];
        if (p >= 0) {
            CHECK(p < model.part_count());
            CHECK(res.component_of_point[j] >= 0);
            CHECK(res.component_of_point[j] <
                  static_cast<int>(model.parts[p].points.size()));
        } else {
            CHECK(res.component_of_point[j] == -1);
        }
    }

    // Transforms are exactly the forward kinematics of the fitted pose.
    const PartTransforms fk = forward_kinematics(model, res.pose);
    for (int p = 0; p < model.part_count(); ++p) {
        CHECK((fk.world[p] - res.transforms.world[p]).norm() < 1e-12);
    }
}

TEST_CASE("articulated model validation rejects malformed trees") {
    ArticulatedModel model = make_chain(3, 5, 67);
    model.parts[1].parent = 2;  // parent must precede the child
    CHECK_THROWS_AS(model.validate(), InvalidConfigError);

    ArticulatedModel rootless = make_chain(3, 5, 68);
    rootless.parts[0].joint = JointSpec{};
    rootless.parts[0].joint->axes = {Eigen::Vector3d::UnitZ()};
    CHECK_THROWS_AS(rootless.validate(), InvalidConfigError);

    ArticulatedModel sparse = make_chain(3, 5, 69);
    sparse.parts[2].points.resize(2);
    CHECK_THROWS_AS(sparse.validate(), InvalidConfigError);
}
