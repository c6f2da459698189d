#include "ecmpr/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ecmpr {

namespace {

constexpr double kUnsupportedWeight = 1e-12;

void bounding_box(const PointSet& pts, Point3& lo, Point3& hi) {
    lo = Point3::Constant(std::numeric_limits<double>::max());
    hi = Point3::Constant(std::numeric_limits<double>::lowest());
    for (const auto& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
}

std::vector<CovarianceFactor> factorize(const std::vector<Covariance3>& covariances) {
    std::vector<CovarianceFactor> factors;
    factors.reserve(covariances.size());
    for (const auto& sigma : covariances) factors.emplace_back(sigma);
    return factors;
}

}  // namespace

MixtureConfig MixtureConfig::defaults_for(const PointSet& data, int n_model) {
    if (data.empty()) throw InvalidConfigError("defaults_for: empty data set");
    Point3 lo, hi;
    bounding_box(data, lo, hi);
    const Point3 extent = (hi - lo).cwiseMax(1e-9);
    const double diag = extent.norm();

    MixtureConfig c;
    c.outlier_radius = 0.05 * diag;
    c.working_volume = 1.1 * extent.prod();
    // Keep the small-sphere assumption n*v << V valid even for flat boxes.
    c.cap_radius_for(n_model);
    c.init_sigma = diag;
    c.fatten_epsilon = 1e-6 * diag * diag;
    c.convergence_eps = 1e-6;
    c.max_iterations = 200;
    c.covariance_mode = data.size() < 50 ? CovarianceMode::Common
                                         : CovarianceMode::PerComponent;
    return c;
}

void MixtureConfig::cap_radius_for(int n_model) {
    const double v_cap = 0.5 * working_volume / std::max(1, n_model);
    const double r_cap = std::cbrt(v_cap * 3.0 / (4.0 * std::numbers::pi));
    outlier_radius = std::min(outlier_radius, r_cap);
}

void MixtureConfig::validate(int n_model) const {
    if (!(outlier_radius > 0.0)) throw InvalidConfigError("outlier_radius must be > 0");
    if (!(init_sigma > 0.0)) throw InvalidConfigError("init_sigma must be > 0");
    if (fatten_epsilon < 0.0) throw InvalidConfigError("fatten_epsilon must be >= 0");
    if (max_iterations < 1) throw InvalidConfigError("max_iterations must be >= 1");
    const double v = 4.0 / 3.0 * std::numbers::pi * std::pow(outlier_radius, 3);
    if (!(working_volume > n_model * v)) {
        throw InvalidConfigError("working_volume must exceed n * (4/3) pi r^3");
    }
}

double VirtualObservations::total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

double outlier_constant(double r) {
    if (!(r > 0.0)) throw InvalidConfigError("outlier_constant: radius must be > 0");
    return 1.5 * std::sqrt(2.0 * std::numbers::pi) / (r * r * r);
}

namespace detail {

// n x m matrix of log Gaussian kernels -0.5*log|Sigma_i| - 0.5*d2(j,i).
// Blocked per component: one triangular solve against all data at once.
Eigen::MatrixXd log_kernels(const PointSet& data, const PointSet& transformed_model,
                            const std::vector<Covariance3>& covariances) {
    const int m = static_cast<int>(data.size());
    const int n = static_cast<int>(transformed_model.size());
    Eigen::Matrix3Xd points(3, m);
    for (int j = 0; j < m; ++j) points.col(j) = data[j];

    const auto factors = factorize(covariances);
    Eigen::MatrixXd g(n, m);
#pragma omp parallel
    {
        Eigen::Matrix3Xd diff(3, m);
#pragma omp for schedule(static)
        for (int i = 0; i < n; ++i) {
            diff = points.colwise() - transformed_model[i];
            factors[i].whiten_in_place(diff);
            g.row(i) = -0.5 * (factors[i].log_det() +
                               diff.colwise().squaredNorm().array());
        }
    }
    return g;
}

}  // namespace detail

Posteriors e_step(const PointSet& data, const PointSet& transformed_model,
                  const std::vector<Covariance3>& covariances,
                  const MixtureConfig& config) {
    const int m = static_cast<int>(data.size());
    const int n = static_cast<int>(transformed_model.size());
    if (n < 1 || m < 1) throw InvalidConfigError("e_step: empty point set");
    if (covariances.size() != transformed_model.size()) {
        throw InvalidConfigError("e_step: covariance count mismatch");
    }
    const Eigen::MatrixXd g = detail::log_kernels(data, transformed_model, covariances);
    const double log_phi = std::log(outlier_constant(config.outlier_radius));

    Posteriors post;
    post.alpha.resize(m, n + 1);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < m; ++j) {
        const double shift = std::max(g.col(j).maxCoeff(), log_phi);
        double denom = std::exp(log_phi - shift);
        for (int i = 0; i < n; ++i) denom += std::exp(g(i, j) - shift);
        double inlier_sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const double a = std::exp(g(i, j) - shift) / denom;
            post.alpha(j, i) = a;
            inlier_sum += a;
        }
        post.alpha(j, n) = std::max(0.0, 1.0 - inlier_sum);
    }
    return post;
}

VirtualObservations virtual_observations(const PointSet& data, const Posteriors& post,
                                         const PointSet& fallback) {
    const int m = post.rows();
    const int n = post.components();
    if (static_cast<int>(data.size()) != m) {
        throw InvalidConfigError("virtual_observations: data size mismatch");
    }
    VirtualObservations vo;
    vo.points.resize(n);
    vo.weights.resize(n);
    vo.supported.resize(n);

    // Parallel over components: each lambda_i/W_i sums over j in index
    // order, so the result does not depend on the thread count.
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        double lambda = 0.0;
        Eigen::Vector3d acc = Eigen::Vector3d::Zero();
        for (int j = 0; j < m; ++j) {
            const double a = post.alpha(j, i);
            lambda += a;
            acc += a * data[j];
        }
        vo.weights[i] = lambda;
        if (lambda < kUnsupportedWeight) {
            vo.supported[i] = 0;
            vo.points[i] = i < static_cast<int>(fallback.size()) ? fallback[i]
                                                                 : Point3::Zero();
        } else {
            vo.supported[i] = 1;
            vo.points[i] = acc / lambda;
        }
    }
    return vo;
}

Assignment map_classify(const Posteriors& post) {
    const int m = post.rows();
    const int n = post.components();
    Assignment out;
    out.labels.resize(m);
    for (int j = 0; j < m; ++j) {
        int best = 0;
        double best_val = post.alpha(j, 0);
        for (int i = 1; i < n; ++i) {
            if (post.alpha(j, i) > best_val) {
                best = i;
                best_val = post.alpha(j, i);
            }
        }
        out.labels[j] = post.alpha(j, n) > best_val ? Assignment::kOutlier : best;
    }
    return out;
}

double observed_log_likelihood(const PointSet& data, const PointSet& transformed_model,
                               const std::vector<Covariance3>& covariances,
                               const MixtureConfig& config) {
    const int m = static_cast<int>(data.size());
    const int n = static_cast<int>(transformed_model.size());
    config.validate(n);
    if (covariances.size() != transformed_model.size()) {
        throw InvalidConfigError("observed_log_likelihood: covariance count mismatch");
    }
    const Eigen::MatrixXd g = detail::log_kernels(data, transformed_model, covariances);

    const double v = 4.0 / 3.0 * std::numbers::pi * std::pow(config.outlier_radius, 3);
    const double log_p_in = std::log(v / config.working_volume);
    const double p_out = (config.working_volume - n * v) / config.working_volume;
    const double log_out_term = std::log(p_out / config.working_volume);
    const double log_norm = -1.5 * std::log(2.0 * std::numbers::pi);

    // Per-point terms land in a buffer and are reduced in index order.
    Eigen::VectorXd terms(m);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < m; ++j) {
        const double shift = std::max(g.col(j).maxCoeff() + log_p_in + log_norm, log_out_term);
        double s = std::exp(log_out_term - shift);
        for (int i = 0; i < n; ++i) {
            s += std::exp(g(i, j) + log_p_in + log_norm - shift);
        }
        terms(j) = shift + std::log(s);
    }
    double total = 0.0;
    for (int j = 0; j < m; ++j) total += terms(j);
    return total;
}

}  // namespace ecmpr
