#pragma once

#include <vector>

#include "ecmpr/rigid.hpp"
#include "ecmpr/synth.hpp"

namespace test_helpers {

using namespace ecmpr;

/// Random SPD matrix with eigenvalues in [lo, hi].
inline Covariance3 random_spd(Rng& rng, double lo = 0.2, double hi = 2.0) {
    const Eigen::Matrix3d q = rng.random_rotation();
    Eigen::Vector3d d;
    for (int i = 0; i < 3; ++i) d(i) = rng.uniform(lo, hi);
    return q * d.asDiagonal() * q.transpose();
}

struct RotationProblemScene {
    PointSet w;
    std::vector<double> lambda;
    std::vector<Covariance3> sigmas;
    PointSet x;
};

/// Rotation subproblem built from a registration-like scene: model points
/// in the unit cube, virtual observations near a true rotation of them.
inline RotationProblemScene random_problem_scene(Rng& rng, int n, bool isotropic,
                                                 double noise = 0.05) {
    RotationProblemScene s;
    const Eigen::Matrix3d r_true = rng.random_rotation();
    const Eigen::Vector3d t_true = rng.uniform_box(-Point3::Ones(), Point3::Ones());
    for (int i = 0; i < n; ++i) {
        const Point3 x = rng.uniform_box(Point3::Zero(), Point3::Ones());
        s.x.push_back(x);
        s.w.push_back(r_true * x + t_true + noise * rng.normal3());
        s.lambda.push_back(rng.uniform(0.2, 1.5));
        if (isotropic) {
            const double v = rng.uniform(0.05, 0.5);
            s.sigmas.push_back(v * Covariance3::Identity());
        } else {
            s.sigmas.push_back(random_spd(rng, 0.02, 0.5));
        }
    }
    return s;
}

/// Crane-like serial chain: a long boom root that anchors the scene plus
/// slim hinged segments off one end, z-axis joints, with a clearance gap
/// between a parent's tip and its child's first points. The root carries
/// 6x the segment point count so the scene centroid stays on it.
inline ArticulatedModel make_chain(int n_parts, int pts_per_part, std::uint64_t seed) {
    Rng rng(seed);
    ArticulatedModel model;

    ArticulatedPart root;
    root.name = "root";
    root.parent = -1;
    for (int i = 0; i < 6 * pts_per_part; ++i) {
        root.points.push_back(
            rng.uniform_box(Point3(-1.2, -0.25, -0.2), Point3(1.2, 0.25, 0.2)));
    }
    model.parts.push_back(root);

    for (int p = 1; p < n_parts; ++p) {
        ArticulatedPart part;
        part.name = "seg" + std::to_string(p);
        part.parent = p - 1;
        JointSpec joint;
        joint.fixed_frame = Homogeneous4::Identity();
        joint.fixed_frame(0, 3) = p == 1 ? 1.3 : 0.63;  // joint sits past the parent tip
        joint.axes = {Eigen::Vector3d::UnitZ()};
        part.joint = joint;
        for (int i = 0; i < pts_per_part; ++i) {
            part.points.push_back(
                rng.uniform_box(Point3(0.18, -0.09, -0.09), Point3(0.58, 0.09, 0.09)));
        }
        model.parts.push_back(part);
    }
    return model;
}

}  // namespace test_helpers
