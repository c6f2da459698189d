#include "ecmpr/geometry.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace ecmpr {

PointSet apply_transform(const RigidTransform& t, const PointSet& points) {
    PointSet out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        out[i] = t.rotation * points[i] + t.translation;
    }
    return out;
}

bool is_rotation_matrix(const Eigen::Matrix3d& r, double tol) {
    const Eigen::Matrix3d gram = r.transpose() * r - Eigen::Matrix3d::Identity();
    if (gram.cwiseAbs().maxCoeff() > tol) return false;
    return std::abs(r.determinant() - 1.0) <= tol;
}

Eigen::Matrix3d axis_angle_rotation(const Eigen::Vector3d& axis, double angle_rad) {
    const double norm = axis.norm();
    if (norm < 1e-300) throw InvalidConfigError("axis_angle_rotation: zero axis");
    return Eigen::AngleAxisd(angle_rad, axis / norm).toRotationMatrix();
}

double rotation_geodesic_angle(const Eigen::Matrix3d& ra, const Eigen::Matrix3d& rb) {
    const double c = ((ra * rb.transpose()).trace() - 1.0) / 2.0;
    return std::acos(std::clamp(c, -1.0, 1.0));
}

CovarianceFactor::CovarianceFactor(const Covariance3& sigma) {
    // Symmetrize so that tiny asymmetries from accumulation do not matter.
    const Eigen::Matrix3d sym = 0.5 * (sigma + sigma.transpose());
    Eigen::LLT<Eigen::Matrix3d> llt(sym);
    if (llt.info() != Eigen::Success) {
        throw DegenerateCovarianceError("covariance is not positive definite");
    }
    lower_ = llt.matrixL();
    const Eigen::Vector3d d = lower_.diagonal();
    const double dmax = d.maxCoeff();
    const double dmin = d.minCoeff();
    // cond(Sigma) ~ (dmax/dmin)^2 for the Cholesky diagonal.
    if (!(dmin > 0.0) || (dmax / dmin) * (dmax / dmin) > 1e12) {
        throw DegenerateCovarianceError("covariance condition number exceeds 1e12");
    }
    log_det_ = 2.0 * d.array().log().sum();
}

double CovarianceFactor::mahalanobis_sq(const Eigen::Vector3d& diff) const {
    const Eigen::Vector3d v =
        lower_.triangularView<Eigen::Lower>().solve(diff);
    return v.squaredNorm();
}

void CovarianceFactor::whiten_in_place(Eigen::Matrix3Xd& diffs) const {
    lower_.triangularView<Eigen::Lower>().solveInPlace(diffs);
}

double mahalanobis_sq(const Point3& x, const Point3& y, const Covariance3& sigma) {
    return CovarianceFactor(sigma).mahalanobis_sq(x - y);
}

Eigen::Matrix3d project_to_rotation(const Eigen::Matrix3d& m) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d s = svd.singularValues();
    if (s(1) <= 1e-12 * std::max(1.0, s(0))) {
        throw AmbiguousProjectionError("matrix rank < 2, nearest rotation not unique");
    }
    Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0.0) {
        Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
        flip(2, 2) = -1.0;
        r = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    return r;
}

Homogeneous4 compose(const Homogeneous4& t1, const Homogeneous4& t2) {
    Homogeneous4 out = t1 * t2;
    out.row(3) << 0.0, 0.0, 0.0, 1.0;
    return out;
}

Homogeneous4 to_homogeneous(const RigidTransform& t) {
    Homogeneous4 h = Homogeneous4::Identity();
    h.topLeftCorner<3, 3>() = t.rotation;
    h.topRightCorner<3, 1>() = t.translation;
    return h;
}

RigidTransform from_homogeneous(const Homogeneous4& h) {
    RigidTransform t;
    t.rotation = h.topLeftCorner<3, 3>();
    t.translation = h.topRightCorner<3, 1>();
    return t;
}

}  // namespace ecmpr
