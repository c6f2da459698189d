#include <cmath>
#include <numbers>

#include "ecmpr/mixture.hpp"

// Plain serial evaluations of the mixture formulas. These stay deliberately
// naive (no log-space shift, no OpenMP) so the optimized kernels can be
// checked against an independent path.

namespace ecmpr::reference {

Posteriors e_step(const PointSet& data, const PointSet& transformed_model,
                  const std::vector<Covariance3>& covariances,
                  const MixtureConfig& config) {
    const int m = static_cast<int>(data.size());
    const int n = static_cast<int>(transformed_model.size());
    const double phi = outlier_constant(config.outlier_radius);

    Posteriors post;
    post.alpha.resize(m, n + 1);
    for (int j = 0; j < m; ++j) {
        double denom = phi;
        Eigen::VectorXd num(n);
        for (int i = 0; i < n; ++i) {
            const double d2 = mahalanobis_sq(data[j], transformed_model[i], covariances[i]);
            const double det = covariances[i].determinant();
            num(i) = std::exp(-0.5 * d2) / std::sqrt(det);
            denom += num(i);
        }
        double inlier_sum = 0.0;
        for (int i = 0; i < n; ++i) {
            post.alpha(j, i) = num(i) / denom;
            inlier_sum += post.alpha(j, i);
        }
        post.alpha(j, n) = 1.0 - inlier_sum;
    }
    return post;
}

VirtualObservations virtual_observations(const PointSet& data, const Posteriors& post,
                                         const PointSet& fallback) {
    const int m = post.rows();
    const int n = post.components();
    VirtualObservations vo;
    vo.points.resize(n);
    vo.weights.resize(n);
    vo.supported.resize(n);
    for (int i = 0; i < n; ++i) {
        double lambda = 0.0;
        Eigen::Vector3d acc = Eigen::Vector3d::Zero();
        for (int j = 0; j < m; ++j) {
            lambda += post.alpha(j, i);
            acc += post.alpha(j, i) * data[j];
        }
        vo.weights[i] = lambda;
        vo.supported[i] = lambda >= 1e-12;
        if (vo.supported[i]) {
            vo.points[i] = acc / lambda;
        } else {
            vo.points[i] = i < static_cast<int>(fallback.size()) ? fallback[i]
                                                                 : Point3::Zero();
        }
    }
    return vo;
}

double observed_log_likelihood(const PointSet& data, const PointSet& transformed_model,
                               const std::vector<Covariance3>& covariances,
                               const MixtureConfig& config) {
    const int n = static_cast<int>(transformed_model.size());
    const double v = 4.0 / 3.0 * std::numbers::pi * std::pow(config.outlier_radius, 3);
    const double p_in = v / config.working_volume;
    const double p_out = (config.working_volume - n * v) / config.working_volume;
    const double norm = std::pow(2.0 * std::numbers::pi, -1.5);

    double total = 0.0;
    for (const auto& y : data) {
        double s = p_out / config.working_volume;
        for (int i = 0; i < n; ++i) {
            const double d2 = mahalanobis_sq(y, transformed_model[i], covariances[i]);
            const double det = covariances[i].determinant();
            s += p_in * norm / std::sqrt(det) * std::exp(-0.5 * d2);
        }
        total += std::log(s);
    }
    return total;
}

}  // namespace ecmpr::reference
