#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <vector>

#include "ecmpr/errors.hpp"

namespace ecmpr {

using Point3 = Eigen::Vector3d;
using PointSet = std::vector<Point3>;

/// 3x3 symmetric positive definite matrix.
using Covariance3 = Eigen::Matrix3d;

/// 4x4 displacement matrix with exact (0,0,0,1) bottom row.
using Homogeneous4 = Eigen::Matrix4d;

struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

inline Point3 apply_transform(const RigidTransform& t, const Point3& x) {
    return t.rotation * x + t.translation;
}

PointSet apply_transform(const RigidTransform& t, const PointSet& points);

bool is_rotation_matrix(const Eigen::Matrix3d& r, double tol = 1e-9);

/// Rotation by `angle_rad` about `axis` (normalized internally).
Eigen::Matrix3d axis_angle_rotation(const Eigen::Vector3d& axis, double angle_rad);

/// Geodesic angle in radians between two rotations.
double rotation_geodesic_angle(const Eigen::Matrix3d& ra, const Eigen::Matrix3d& rb);

/// Squared Mahalanobis distance (x-y)' Sigma^-1 (x-y).
/// Throws DegenerateCovarianceError when Sigma cannot be factored or its
/// condition number exceeds 1e12.
double mahalanobis_sq(const Point3& x, const Point3& y, const Covariance3& sigma);

/// Frobenius-nearest rotation to M, determinant-sign corrected to +1.
/// Throws AmbiguousProjectionError when M has rank < 2.
Eigen::Matrix3d project_to_rotation(const Eigen::Matrix3d& m);

Homogeneous4 compose(const Homogeneous4& t1, const Homogeneous4& t2);
Homogeneous4 to_homogeneous(const RigidTransform& t);
RigidTransform from_homogeneous(const Homogeneous4& h);

/// Cached Cholesky factor of a covariance, for repeated Mahalanobis
/// evaluations against the same Sigma.
class CovarianceFactor {
  public:
    explicit CovarianceFactor(const Covariance3& sigma);

    double log_det() const { return log_det_; }
    double mahalanobis_sq(const Eigen::Vector3d& diff) const;

    /// Applies L^-1 to every column; column squared norms are then the
    /// Mahalanobis distances.
    void whiten_in_place(Eigen::Matrix3Xd& diffs) const;

  private:
    Eigen::Matrix3d lower_;
    double log_det_ = 0.0;
};

}  // namespace ecmpr
