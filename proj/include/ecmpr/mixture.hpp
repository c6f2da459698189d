#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ecmpr/geometry.hpp"

namespace ecmpr {

enum class CovarianceMode {
    PerComponent,     // one full Sigma_i per component
    Common,           // one full Sigma pooled over all components
    Isotropic,        // per-component sigma_i^2 * I
    IsotropicCommon,  // single pooled sigma^2 * I
};

enum class RotationSolver {
    Auto,       // closed form for isotropic modes, SDP otherwise
    ClosedForm, // weighted Procrustes (valid for isotropic covariances only)
    Sdp,        // relaxation + extraction + refinement, any covariances
};

struct MixtureConfig {
    double outlier_radius = 0.0;   // sphere radius r of the outlier prior
    double working_volume = 0.0;   // volume V of the working space
    double init_sigma = 0.0;       // initial spherical covariance scale
    double fatten_epsilon = 0.0;   // added to covariance eigenvalues
    double convergence_eps = 1e-6; // threshold on |R_new - R_old|_F^2
    int max_iterations = 200;
    CovarianceMode covariance_mode = CovarianceMode::Common;
    RotationSolver rotation_solver = RotationSolver::Auto;

    /// Sized from the data bounding box: r = 0.05 * diagonal, V = box
    /// volume inflated by 10%, init_sigma = diagonal, fatten epsilon =
    /// 1e-6 * diagonal^2; common covariance for m < 50, per-component
    /// otherwise. r is shrunk if needed so that n*(4/3)pi r^3 < V holds.
    static MixtureConfig defaults_for(const PointSet& data, int n_model);

    void validate(int n_model) const;

    /// Shrinks the outlier radius if needed so the small-sphere
    /// assumption n * (4/3) pi r^3 << V holds for this component count.
    void cap_radius_for(int n_model);
};

/// m x (n+1) responsibilities; column n is the outlier class.
struct Posteriors {
    Eigen::MatrixXd alpha;

    int rows() const { return static_cast<int>(alpha.rows()); }
    int components() const { return static_cast<int>(alpha.cols()) - 1; }
    double outlier(int j) const { return alpha(j, alpha.cols() - 1); }
};

struct VirtualObservations {
    PointSet points;              // W_i
    std::vector<double> weights;  // lambda_i
    std::vector<std::uint8_t> supported;

    double total_weight() const;
};

struct Assignment {
    static constexpr int kOutlier = -1;
    std::vector<int> labels;  // component index, or kOutlier
};

/// The 3-D outlier constant  1.5 * sqrt(2 pi) * r^-3.
double outlier_constant(double r);

/// Posteriors over data-to-component assignments including the outlier
/// class. Rows are computed in log space with a max shift and sum to one
/// exactly up to roundoff. Parallel over data points.
Posteriors e_step(const PointSet& data, const PointSet& transformed_model,
                  const std::vector<Covariance3>& covariances,
                  const MixtureConfig& config);

/// lambda_i = sum_j alpha_ji, W_i = weighted mean of the data.
/// Components with lambda_i < 1e-12 are flagged unsupported and W_i is
/// taken from `fallback` (the current transformed model) when provided.
VirtualObservations virtual_observations(const PointSet& data, const Posteriors& post,
                                         const PointSet& fallback = {});

/// MAP labels; ties go to the lowest component index and the outlier
/// class loses ties against any component.
Assignment map_classify(const Posteriors& post);

/// Observed-data log-likelihood with the volume-ratio priors
/// p_in = v/V, p_out = (V - n v)/V, v = (4/3) pi r^3.
double observed_log_likelihood(const PointSet& data, const PointSet& transformed_model,
                               const std::vector<Covariance3>& covariances,
                               const MixtureConfig& config);

/// Direct-formula serial implementations used as oracles by the tests and
/// by the kernel benchmark. No log-space shift, no parallelism.
namespace reference {

Posteriors e_step(const PointSet& data, const PointSet& transformed_model,
                  const std::vector<Covariance3>& covariances,
                  const MixtureConfig& config);

VirtualObservations virtual_observations(const PointSet& data, const Posteriors& post,
                                         const PointSet& fallback = {});

double observed_log_likelihood(const PointSet& data, const PointSet& transformed_model,
                               const std::vector<Covariance3>& covariances,
                               const MixtureConfig& config);

}  // namespace reference

}  // namespace ecmpr
