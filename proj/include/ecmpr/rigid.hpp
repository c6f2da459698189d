#pragma once

#include <optional>
#include <vector>

#include "ecmpr/geometry.hpp"
#include "ecmpr/mixture.hpp"

namespace ecmpr {

/// Covariance state of a run; `matrices` is always expanded to one entry
/// per component regardless of mode. Isotropic modes also carry the
/// per-component variances.
struct CovarianceEstimate {
    CovarianceMode mode = CovarianceMode::Common;
    std::vector<Covariance3> matrices;
    std::vector<double> isotropic_sigma_sq;

    static CovarianceEstimate spherical(int n, double sigma, CovarianceMode mode);
};

struct RigidResult {
    RigidTransform transform;
    CovarianceEstimate covariances;
    Posteriors posteriors;
    Assignment assignment;
    int iterations = 0;
    double final_log_likelihood = 0.0;
    bool converged = false;
    std::vector<double> log_likelihood_trace;
};

/// Exact minimizer of the weighted Mahalanobis criterion over t for a
/// fixed rotation. Throws NoSupportError when all weights vanish.
Eigen::Vector3d optimal_translation(const PointSet& virtual_obs,
                                    const std::vector<double>& weights,
                                    const std::vector<Covariance3>& covariances,
                                    const Eigen::Matrix3d& rotation,
                                    const PointSet& model);

/// Sigma + eps*I: shifts the eigenvalues, keeps the eigenvectors.
Covariance3 fatten(const Covariance3& sigma, double eps);

/// Posterior-weighted empirical scatter, per component or pooled,
/// fattened by eps*I. Components with no posterior mass keep their entry
/// from `previous`.
CovarianceEstimate update_covariances(const PointSet& data, const Posteriors& post,
                                      const PointSet& transformed_model,
                                      CovarianceMode mode, double eps,
                                      const CovarianceEstimate& previous);

/// Closed-form weighted Procrustes rotation for isotropic covariances
/// (weights lambda_i / sigma_i^2, optimal translation eliminated).
/// Throws DegenerateGeometryError for collinear or coincident support.
Eigen::Matrix3d rotation_isotropic(const PointSet& virtual_obs,
                                   const std::vector<double>& weights,
                                   const std::vector<double>& sigma_sq,
                                   const PointSet& model);

/// The ECMPR-rigid driver: starts from R = I, t = 0 and large spherical
/// covariances, alternates the E-step with the conditional maximization
/// steps (rotation, translation, covariances) until the rotation change
/// drops below convergence_eps, then classifies by MAP.
RigidResult ecmpr_rigid(const PointSet& data, const PointSet& model,
                        const MixtureConfig& config);

namespace detail {

/// Shared driver core. When `clamp_translation` is set the translation is
/// held fixed and only the rotation and covariances are updated (the
/// articulated per-part case). `init` overrides the starting transform
/// (used by tracking warm starts).
RigidResult ecmpr_core(const PointSet& data, const PointSet& model,
                       const MixtureConfig& config, const RigidTransform& init,
                       const std::optional<Eigen::Vector3d>& clamp_translation);

}  // namespace detail

}  // namespace ecmpr
