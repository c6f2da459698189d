#include "ecmpr/rigid.hpp"

#include <cmath>

#include "ecmpr/sdp_rotation.hpp"

namespace ecmpr {

CovarianceEstimate CovarianceEstimate::spherical(int n, double sigma, CovarianceMode mode) {
    CovarianceEstimate est;
    est.mode = mode;
    est.matrices.assign(n, sigma * sigma * Covariance3::Identity());
    est.isotropic_sigma_sq.assign(n, sigma * sigma);
    return est;
}

Eigen::Vector3d optimal_translation(const PointSet& virtual_obs,
                                    const std::vector<double>& weights,
                                    const std::vector<Covariance3>& covariances,
                                    const Eigen::Matrix3d& rotation,
                                    const PointSet& model) {
    if (virtual_obs.size() != weights.size() || virtual_obs.size() != covariances.size() ||
        virtual_obs.size() != model.size()) {
        throw InvalidConfigError("optimal_translation: size mismatch");
    }
    Eigen::Matrix3d lhs = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    double total = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        const Eigen::Matrix3d sigma_inv =
            Eigen::LLT<Eigen::Matrix3d>(0.5 * (covariances[i] + covariances[i].transpose()))
                .solve(Eigen::Matrix3d::Identity());
        lhs += weights[i] * sigma_inv;
        rhs += weights[i] * sigma_inv * (virtual_obs[i] - rotation * model[i]);
        total += weights[i];
    }
    if (total < 1e-12) throw NoSupportError("optimal_translation: no supported components");
    Eigen::LLT<Eigen::Matrix3d> llt(lhs);
    if (llt.info() != Eigen::Success) {
        throw NoSupportError("optimal_translation: weight matrix is singular");
    }
    return llt.solve(rhs);
}

Covariance3 fatten(const Covariance3& sigma, double eps) {
    return sigma + eps * Covariance3::Identity();
}

CovarianceEstimate update_covariances(const PointSet& data, const Posteriors& post,
                                      const PointSet& transformed_model,
                                      CovarianceMode mode, double eps,
                                      const CovarianceEstimate& previous) {
    const int m = post.rows();
    const int n = post.components();
    if (static_cast<int>(data.size()) != m ||
        static_cast<int>(transformed_model.size()) != n) {
        throw InvalidConfigError("update_covariances: size mismatch");
    }

    std::vector<Covariance3> scatter(n, Covariance3::Zero());
    std::vector<double> mass(n, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        Covariance3 s = Covariance3::Zero();
        double lambda = 0.0;
        for (int j = 0; j < m; ++j) {
            const double a = post.alpha(j, i);
            if (a == 0.0) continue;
            const Eigen::Vector3d d = data[j] - transformed_model[i];
            s += a * d * d.transpose();
            lambda += a;
        }
        scatter[i] = s;
        mass[i] = lambda;
    }

    CovarianceEstimate est;
    est.mode = mode;
    est.matrices.resize(n);

    const bool pooled = mode == CovarianceMode::Common || mode == CovarianceMode::IsotropicCommon;
    if (pooled) {
        Covariance3 total = Covariance3::Zero();
        double total_mass = 0.0;
        for (int i = 0; i < n; ++i) {
            total += scatter[i];
            total_mass += mass[i];
        }
        Covariance3 sigma;
        if (total_mass < 1e-12) {
            sigma = previous.matrices.empty() ? Covariance3(eps * Covariance3::Identity())
                                              : previous.matrices[0];
        } else {
            sigma = fatten(total / total_mass, eps);
        }
        if (mode == CovarianceMode::IsotropicCommon) {
            const double s2 = sigma.trace() / 3.0;
            est.isotropic_sigma_sq.assign(n, s2);
            sigma = s2 * Covariance3::Identity();
        }
        est.matrices.assign(n, sigma);
        return est;
    }

    if (mode == CovarianceMode::Isotropic) est.isotropic_sigma_sq.resize(n);
    for (int i = 0; i < n; ++i) {
        Covariance3 sigma;
        if (mass[i] < 1e-12) {
            sigma = i < static_cast<int>(previous.matrices.size())
                        ? previous.matrices[i]
                        : Covariance3(eps * Covariance3::Identity());
        } else {
            sigma = fatten(scatter[i] / mass[i], eps);
        }
        if (mode == CovarianceMode::Isotropic) {
            const double s2 = sigma.trace() / 3.0;
            est.isotropic_sigma_sq[i] = s2;
            sigma = s2 * Covariance3::Identity();
        }
        est.matrices[i] = sigma;
    }
    return est;
}

Eigen::Matrix3d rotation_isotropic(const PointSet& virtual_obs,
                                   const std::vector<double>& weights,
                                   const std::vector<double>& sigma_sq,
                                   const PointSet& model) {
    if (virtual_obs.size() != weights.size() || virtual_obs.size() != sigma_sq.size() ||
        virtual_obs.size() != model.size()) {
        throw InvalidConfigError("rotation_isotropic: size mismatch");
    }
    double total = 0.0;
    int supported = 0;
    Eigen::Vector3d wbar = Eigen::Vector3d::Zero();
    Eigen::Vector3d xbar = Eigen::Vector3d::Zero();
    std::vector<double> w(model.size(), 0.0);
    for (std::size_t i = 0; i < model.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        w[i] = weights[i] / sigma_sq[i];
        total += w[i];
        wbar += w[i] * virtual_obs[i];
        xbar += w[i] * model[i];
        ++supported;
    }
    if (supported < 3 || total < 1e-300) {
        throw DegenerateGeometryError("rotation_isotropic: fewer than 3 supported points");
    }
    wbar /= total;
    xbar /= total;

    Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < model.size(); ++i) {
        if (w[i] <= 0.0) continue;
        cross += w[i] * (virtual_obs[i] - wbar) * (model[i] - xbar).transpose();
    }
    try {
        return project_to_rotation(cross);
    } catch (const AmbiguousProjectionError&) {
        throw DegenerateGeometryError("rotation_isotropic: collinear or coincident support");
    }
}

namespace detail {

namespace {

bool is_isotropic(CovarianceMode mode) {
    return mode == CovarianceMode::Isotropic || mode == CovarianceMode::IsotropicCommon;
}

// One conditional-maximization rotation update, safeguarded so the
// quadratic objective never increases over the previous rotation.
Eigen::Matrix3d rotation_step(const VirtualObservations& vo, const CovarianceEstimate& cov,
                              const PointSet& model, const MixtureConfig& config,
                              const Eigen::Matrix3d& r_prev,
                              const std::optional<Eigen::Vector3d>& clamp_translation) {
    const bool closed_form =
        config.rotation_solver == RotationSolver::ClosedForm ||
        (config.rotation_solver == RotationSolver::Auto && is_isotropic(cov.mode));

    if (closed_form) {
        std::vector<double> sigma_sq = cov.isotropic_sigma_sq;
        if (sigma_sq.empty()) {
            sigma_sq.resize(cov.matrices.size());
            for (std::size_t i = 0; i < cov.matrices.size(); ++i) {
                sigma_sq[i] = cov.matrices[i].trace() / 3.0;
            }
        }
        try {
            if (clamp_translation) {
                // Fixed translation: plain weighted Procrustes without
                // centroid elimination.
                Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
                for (std::size_t i = 0; i < model.size(); ++i) {
                    if (vo.weights[i] <= 0.0) continue;
                    cross += vo.weights[i] / sigma_sq[i] *
                             (vo.points[i] - *clamp_translation) * model[i].transpose();
                }
                return project_to_rotation(cross);
            }
            return rotation_isotropic(vo.points, vo.weights, sigma_sq, model);
        } catch (const Error&) {
            return r_prev;
        }
    }

    QuadraticRotationProblem prob;
    if (clamp_translation) {
        prob = build_problem_fixed_translation(vo.points, vo.weights, cov.matrices, model,
                                               *clamp_translation);
    } else {
        prob = build_problem(vo.points, vo.weights, cov.matrices, model);
    }

    // Fallback initialization for a failed relaxation: isotropic closed
    // form with per-component trace variances.
    Eigen::Matrix3d fallback = r_prev;
    {
        std::vector<double> sigma_sq(cov.matrices.size());
        for (std::size_t i = 0; i < cov.matrices.size(); ++i) {
            sigma_sq[i] = cov.matrices[i].trace() / 3.0;
        }
        try {
            fallback = rotation_isotropic(vo.points, vo.weights, sigma_sq, model);
        } catch (const Error&) {
        }
    }

    const Eigen::Matrix3d candidate = solve_rotation(prob, fallback);
    return rotation_objective(prob, candidate) <= rotation_objective(prob, r_prev)
               ? candidate
               : r_prev;
}

}  // namespace

RigidResult ecmpr_core(const PointSet& data, const PointSet& model,
                       const MixtureConfig& config, const RigidTransform& init,
                       const std::optional<Eigen::Vector3d>& clamp_translation) {
    const int n = static_cast<int>(model.size());
    const int m = static_cast<int>(data.size());
    if (n < 3) throw InvalidConfigError("ecmpr: need at least 3 model points");
    if (m < 1) throw InvalidConfigError("ecmpr: empty data set");
    config.validate(n);

    RigidTransform t = init;
    if (clamp_translation) t.translation = *clamp_translation;
    CovarianceEstimate cov =
        CovarianceEstimate::spherical(n, config.init_sigma, config.covariance_mode);

    RigidResult res;
    res.log_likelihood_trace.push_back(
        observed_log_likelihood(data, apply_transform(t, model), cov.matrices, config));

    bool had_support = false;
    bool converged = false;
    int iterations = 0;
    for (int q = 0; q < config.max_iterations; ++q) {
        const PointSet transformed = apply_transform(t, model);
        const Posteriors post = e_step(data, transformed, cov.matrices, config);
        const VirtualObservations vo = virtual_observations(data, post, transformed);

        if (vo.total_weight() < 1e-12) {
            if (!had_support) {
                throw NoSupportError("ecmpr: all data classified outlier");
            }
            break;  // support vanished mid-run; keep the best iterate
        }
        had_support = true;

        const Eigen::Matrix3d r_new =
            rotation_step(vo, cov, model, config, t.rotation, clamp_translation);
        const Eigen::Vector3d t_new =
            clamp_translation
                ? *clamp_translation
                : optimal_translation(vo.points, vo.weights, cov.matrices, r_new, model);

        const double rot_change = (r_new - t.rotation).squaredNorm();
        const RigidTransform t_next{r_new, t_new};
        cov = update_covariances(data, post, apply_transform(t_next, model),
                                 config.covariance_mode, config.fatten_epsilon, cov);
        t = t_next;
        iterations = q + 1;

        res.log_likelihood_trace.push_back(
            observed_log_likelihood(data, apply_transform(t, model), cov.matrices, config));

        if (rot_change < config.convergence_eps) {
            converged = true;
            break;
        }
    }

    const PointSet transformed = apply_transform(t, model);
    res.transform = t;
    res.covariances = cov;
    res.posteriors = e_step(data, transformed, cov.matrices, config);
    res.assignment = map_classify(res.posteriors);
    res.iterations = iterations;
    res.converged = converged;
    res.final_log_likelihood =
        observed_log_likelihood(data, transformed, cov.matrices, config);
    return res;
}

}  // namespace detail

RigidResult ecmpr_rigid(const PointSet& data, const PointSet& model,
                        const MixtureConfig& config) {
    return detail::ecmpr_core(data, model, config, RigidTransform{}, std::nullopt);
}

}  // namespace ecmpr
