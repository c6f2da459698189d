#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "ecmpr/geometry.hpp"

namespace ecmpr {

using Matrix9d = Eigen::Matrix<double, 9, 9>;
using Vector9d = Eigen::Matrix<double, 9, 1>;

/// Column-stacked vectorization, so (X' kron S^-1) vec(R) = S^-1 R X.
inline Vector9d vec9(const Eigen::Matrix3d& m) {
    return Eigen::Map<const Vector9d>(m.data());
}

inline Eigen::Matrix3d unvec9(const Vector9d& v) {
    return Eigen::Map<const Eigen::Matrix3d>(v.data());
}

/// min over rotations of (1/2)(r'Ar + 2 b'r), r = vec(R).
struct QuadraticRotationProblem {
    Matrix9d A = Matrix9d::Zero();
    Vector9d b = Vector9d::Zero();
};

/// Six symmetric matrices with r' Delta_kl r = (RR')_kl, plus targets
/// delta_kl (1 on the diagonal pairs, 0 off). Pair order:
/// (0,0),(0,1),(0,2),(1,1),(1,2),(2,2).
struct OrthonormalityConstraints {
    std::array<Matrix9d, 6> delta;
    std::array<double, 6> target;
    std::array<std::pair<int, int>, 6> pair;
};

struct SdpSolution {
    Matrix9d rho = Matrix9d::Zero();
    Vector9d r = Vector9d::Zero();
    double objective = 0.0;
    double dual_gap = 0.0;  // relative duality gap at termination
    int iterations = 0;
};

/// Translation-eliminated quadratic form of the weighted Mahalanobis
/// registration criterion: A = N - M'KM, b = M'p - q.
/// Throws NoSupportError when all weights vanish.
QuadraticRotationProblem build_problem(const PointSet& virtual_obs,
                                       const std::vector<double>& weights,
                                       const std::vector<Covariance3>& covariances,
                                       const PointSet& model);

/// Same criterion with the translation held at `translation`: A keeps the
/// full quadratic term and b carries the shifted cross term.
QuadraticRotationProblem build_problem_fixed_translation(
    const PointSet& virtual_obs, const std::vector<double>& weights,
    const std::vector<Covariance3>& covariances, const PointSet& model,
    const Eigen::Vector3d& translation);

OrthonormalityConstraints build_constraints();

/// (1/2)(r'Ar + 2b'r) at a given rotation.
double rotation_objective(const QuadraticRotationProblem& prob, const Eigen::Matrix3d& r);

/// Solves the semidefinite relaxation over the lifted block
/// [[rho, r],[r', 1]] >= 0 with the six orthonormality constraints, by a
/// primal-dual interior-point method specialized to this 10x10 structure.
/// Throws RelaxationFailureError if the gap target is not met.
SdpSolution solve_sdp(const QuadraticRotationProblem& prob,
                      const OrthonormalityConstraints& cons);

/// Rotation from a relaxed solution: principal eigenvector of rho when it
/// is numerically rank one, r otherwise, projected onto SO(3). A fully
/// degenerate solution (r ~ 0, no rank-one structure) yields the identity.
Eigen::Matrix3d extract_rotation(const SdpSolution& sol);

/// Damped Newton descent on the quadratic objective over SO(3), using
/// right-multiplied axis-angle increments. Never increases the objective.
Eigen::Matrix3d refine_rotation(const Eigen::Matrix3d& r0,
                                const QuadraticRotationProblem& prob);

/// Exhaustive axis-angle grid search followed by refinement; the test
/// oracle for the relaxation. grid_step_deg must lie in (0, 30].
Eigen::Matrix3d brute_force_rotation(const QuadraticRotationProblem& prob,
                                     double grid_step_deg);

/// Full pipeline: degenerate problems return identity, otherwise
/// relax, extract and refine. On relaxation failure falls back to
/// refinement from `fallback_init`.
Eigen::Matrix3d solve_rotation(const QuadraticRotationProblem& prob,
                               const Eigen::Matrix3d& fallback_init);

}  // namespace ecmpr
