#include "ecmpr/sdp_rotation.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

namespace ecmpr {

namespace {

using Matrix10d = Eigen::Matrix<double, 10, 10>;
using Vector7d = Eigen::Matrix<double, 7, 1>;
using Matrix7d = Eigen::Matrix<double, 7, 7>;

Eigen::Matrix3d skew_basis(int k) {
    Eigen::Matrix3d e = Eigen::Matrix3d::Zero();
    if (k == 0) { e(2, 1) = 1.0; e(1, 2) = -1.0; }
    if (k == 1) { e(0, 2) = 1.0; e(2, 0) = -1.0; }
    if (k == 2) { e(1, 0) = 1.0; e(0, 1) = -1.0; }
    return e;
}

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& w) {
    const double theta = w.norm();
    if (theta < 1e-300) return Eigen::Matrix3d::Identity();
    return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

struct WeightedSums {
    Matrix9d n = Matrix9d::Zero();
    Eigen::Matrix<double, 3, 9> m = Eigen::Matrix<double, 3, 9>::Zero();
    Eigen::Matrix3d k_inv = Eigen::Matrix3d::Zero();  // sum of lambda_i Sigma_i^-1
    Eigen::Vector3d u = Eigen::Vector3d::Zero();      // sum of lambda_i Sigma_i^-1 W_i
    Vector9d q = Vector9d::Zero();
    double total_weight = 0.0;
};

WeightedSums accumulate(const PointSet& w, const std::vector<double>& lambda,
                        const std::vector<Covariance3>& sigmas, const PointSet& x) {
    if (w.size() != lambda.size() || w.size() != sigmas.size() || w.size() != x.size()) {
        throw InvalidConfigError("rotation problem: size mismatch");
    }
    WeightedSums s;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (lambda[i] <= 0.0) continue;
        const Eigen::Matrix3d sigma_inv =
            Eigen::LLT<Eigen::Matrix3d>(0.5 * (sigmas[i] + sigmas[i].transpose()))
                .solve(Eigen::Matrix3d::Identity());
        const Eigen::Matrix3d lsi = lambda[i] * sigma_inv;
        const Eigen::Matrix3d xxt = x[i] * x[i].transpose();
        // N += lambda_i (X X') kron Sigma^-1 ; M += lambda_i X' kron Sigma^-1
        for (int a = 0; a < 3; ++a) {
            for (int c = 0; c < 3; ++c) {
                s.n.block<3, 3>(3 * a, 3 * c) += xxt(a, c) * lsi;
            }
            s.m.block<3, 3>(0, 3 * a) += x[i](a) * lsi;
        }
        s.k_inv += lsi;
        s.u += lsi * w[i];
        s.q += vec9(lsi * w[i] * x[i].transpose());
        s.total_weight += lambda[i];
    }
    if (s.total_weight < 1e-12) {
        throw NoSupportError("rotation problem: all weights vanish");
    }
    return s;
}

}  // namespace

QuadraticRotationProblem build_problem(const PointSet& virtual_obs,
                                       const std::vector<double>& weights,
                                       const std::vector<Covariance3>& covariances,
                                       const PointSet& model) {
    const WeightedSums s = accumulate(virtual_obs, weights, covariances, model);
    Eigen::LLT<Eigen::Matrix3d> kllt(s.k_inv);
    if (kllt.info() != Eigen::Success) {
        throw NoSupportError("rotation problem: weight matrix not invertible");
    }
    const Eigen::Matrix3d k = kllt.solve(Eigen::Matrix3d::Identity());
    const Eigen::Vector3d p = k * s.u;

    QuadraticRotationProblem prob;
    prob.A = s.n - s.m.transpose() * k * s.m;
    prob.A = 0.5 * (prob.A + prob.A.transpose());
    prob.b = s.m.transpose() * p - s.q;
    return prob;
}

QuadraticRotationProblem build_problem_fixed_translation(
    const PointSet& virtual_obs, const std::vector<double>& weights,
    const std::vector<Covariance3>& covariances, const PointSet& model,
    const Eigen::Vector3d& translation) {
    PointSet shifted(virtual_obs.size());
    for (std::size_t i = 0; i < virtual_obs.size(); ++i) {
        shifted[i] = virtual_obs[i] - translation;
    }
    const WeightedSums s = accumulate(shifted, weights, covariances, model);
    QuadraticRotationProblem prob;
    prob.A = 0.5 * (s.n + s.n.transpose());
    prob.b = -s.q;
    return prob;
}

OrthonormalityConstraints build_constraints() {
    OrthonormalityConstraints cons;
    int idx = 0;
    for (int k = 0; k < 3; ++k) {
        for (int l = k; l < 3; ++l) {
            Eigen::Matrix3d sym = Eigen::Matrix3d::Zero();
            sym(k, l) += 0.5;
            sym(l, k) += 0.5;
            Matrix9d d = Matrix9d::Zero();
            for (int c = 0; c < 3; ++c) d.block<3, 3>(3 * c, 3 * c) = sym;
            cons.delta[idx] = d;
            cons.target[idx] = k == l ? 1.0 : 0.0;
            cons.pair[idx] = {k, l};
            ++idx;
        }
    }
    return cons;
}

double rotation_objective(const QuadraticRotationProblem& prob, const Eigen::Matrix3d& r) {
    const Vector9d v = vec9(r);
    return 0.5 * (v.dot(prob.A * v) + 2.0 * prob.b.dot(v));
}

namespace {

// Largest step alpha with Z + alpha*dZ staying positive semidefinite,
// capped at 1 and scaled by tau.
double psd_step_length(const Matrix10d& z, const Matrix10d& dz, double tau) {
    Eigen::LLT<Matrix10d> llt(z);
    if (llt.info() != Eigen::Success) return 0.0;
    const Matrix10d l = llt.matrixL();
    const Matrix10d g = l.template triangularView<Eigen::Lower>().solve(
        l.template triangularView<Eigen::Lower>()
            .solve(dz)
            .transpose());
    Eigen::SelfAdjointEigenSolver<Matrix10d> es(0.5 * (g + g.transpose()),
                                                Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin >= -1e-14) return 1.0;
    return std::min(1.0, -tau / lmin);
}

Matrix10d sym_sqrt(const Matrix10d& m, bool inverse) {
    Eigen::SelfAdjointEigenSolver<Matrix10d> es(m);
    Eigen::Matrix<double, 10, 1> d = es.eigenvalues().cwiseMax(1e-300);
    for (int i = 0; i < 10; ++i) d(i) = inverse ? 1.0 / std::sqrt(d(i)) : std::sqrt(d(i));
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

SdpSolution solve_sdp(const QuadraticRotationProblem& prob,
                      const OrthonormalityConstraints& cons) {
    // Normalize the objective so the path-following tolerances are scale free.
    const double scale = std::max({prob.A.norm(), prob.b.norm(), 1.0});

    Matrix10d c = Matrix10d::Zero();
    c.topLeftCorner<9, 9>() = 0.5 * prob.A / scale;
    c.block<9, 1>(0, 9) = 0.5 * prob.b / scale;
    c.block<1, 9>(9, 0) = 0.5 * prob.b.transpose() / scale;

    // Constraint matrices: the six lifted orthonormality blocks plus the
    // corner normalization Z(9,9) = 1.
    std::array<Matrix10d, 7> a;
    Vector7d rhs;
    for (int i = 0; i < 6; ++i) {
        a[i].setZero();
        a[i].topLeftCorner<9, 9>() = cons.delta[i];
        rhs(i) = cons.target[i];
    }
    a[6].setZero();
    a[6](9, 9) = 1.0;
    rhs(6) = 1.0;

    // Strictly feasible primal start: rho = I/3, r = 0.
    Matrix10d x = Matrix10d::Identity() / 3.0;
    x(9, 9) = 1.0;

    // Strictly feasible dual start: y = -eta on the diagonal constraints
    // gives S = C + eta*I.
    Eigen::SelfAdjointEigenSolver<Matrix10d> ces(c, Eigen::EigenvaluesOnly);
    const double eta = std::max(0.0, -ces.eigenvalues().minCoeff()) + 1.0 + 0.1 * c.norm();
    Vector7d y = Vector7d::Zero();
    y(0) = y(3) = y(5) = -eta;  // pairs (0,0), (1,1), (2,2)
    y(6) = -eta;
    Matrix10d sdual = c + eta * Matrix10d::Identity();

    auto apply_adjoint = [&](const Vector7d& v) {
        Matrix10d out = Matrix10d::Zero();
        for (int i = 0; i < 7; ++i) out += v(i) * a[i];
        return out;
    };

    SdpSolution sol;
    double relgap = 1.0;
    const int max_iters = 120;
    int it = 0;
    for (; it < max_iters; ++it) {
        Vector7d rp;
        for (int i = 0; i < 7; ++i) rp(i) = rhs(i) - (a[i].cwiseProduct(x)).sum();
        const Matrix10d rd = c - sdual - apply_adjoint(y);

        const double gap = (x.cwiseProduct(sdual)).sum();
        const double pobj = (c.cwiseProduct(x)).sum();
        const double dobj = rhs.dot(y);
        relgap = std::abs(gap) / (1.0 + std::abs(pobj) + std::abs(dobj));
        const double feas = std::max(rp.cwiseAbs().maxCoeff(),
                                     rd.cwiseAbs().maxCoeff() / (1.0 + c.norm()));
        if (relgap < 1e-11 && feas < 1e-10) break;

        // Nesterov-Todd scaling W with W S W = X.
        const Matrix10d s_half = sym_sqrt(sdual, false);
        const Matrix10d s_inv_half = sym_sqrt(sdual, true);
        const Matrix10d inner = s_half * x * s_half;
        const Matrix10d inner_half = sym_sqrt(0.5 * (inner + inner.transpose()), false);
        const Matrix10d w = s_inv_half * inner_half * s_inv_half;

        const Matrix10d s_inv = s_inv_half * s_inv_half;
        const Matrix10d w_rd_w = w * rd * w;

        std::array<Matrix10d, 7> waw;
        Matrix7d schur;
        for (int i = 0; i < 7; ++i) waw[i] = w * a[i] * w;
        for (int i = 0; i < 7; ++i) {
            for (int j = i; j < 7; ++j) {
                schur(i, j) = (a[i].cwiseProduct(waw[j])).sum();
                schur(j, i) = schur(i, j);
            }
        }
        schur += 1e-13 * schur.trace() * Matrix7d::Identity();
        Eigen::LDLT<Matrix7d> schur_fact(schur);

        const double mu = gap / 10.0;
        auto direction = [&](double mu_target, Matrix10d& dx, Matrix10d& ds, Vector7d& dy) {
            const Matrix10d e = mu_target * s_inv - x - w_rd_w;
            Vector7d rhs_dy;
            for (int i = 0; i < 7; ++i) rhs_dy(i) = rp(i) - (a[i].cwiseProduct(e)).sum();
            dy = schur_fact.solve(rhs_dy);
            ds = rd - apply_adjoint(dy);
            dx = e + w * apply_adjoint(dy) * w;
            dx = 0.5 * (dx + dx.transpose());
        };

        const double tau = it < 5 ? 0.9 : 0.98;

        // Predictor (affine) step fixes the centering weight.
        Matrix10d dx_aff, ds_aff;
        Vector7d dy_aff;
        direction(0.0, dx_aff, ds_aff, dy_aff);
        const double ap_aff = psd_step_length(x, dx_aff, tau);
        const double ad_aff = psd_step_length(sdual, ds_aff, tau);
        const double gap_aff =
            ((x + ap_aff * dx_aff).cwiseProduct(sdual + ad_aff * ds_aff)).sum();
        double sigma = std::pow(std::max(gap_aff, 0.0) / gap, 3.0);
        sigma = std::clamp(sigma, 1e-6, 0.9);

        Matrix10d dx, ds;
        Vector7d dy;
        direction(sigma * mu, dx, ds, dy);
        const double ap = psd_step_length(x, dx, tau);
        const double ad = psd_step_length(sdual, ds, tau);
        if (ap <= 1e-14 || ad <= 1e-14) break;

        x += ap * dx;
        y += ad * dy;
        sdual += ad * ds;
        x = 0.5 * (x + x.transpose());
        sdual = 0.5 * (sdual + sdual.transpose());
    }

    if (relgap > 1e-7) {
        throw RelaxationFailureError("sdp relaxation: duality gap target not met");
    }

    sol.rho = x.topLeftCorner<9, 9>();
    sol.r = x.block<9, 1>(0, 9);
    sol.objective = 0.5 * ((prob.A.cwiseProduct(sol.rho)).sum() + 2.0 * prob.b.dot(sol.r));
    sol.dual_gap = relgap;
    sol.iterations = it;

    // Rank-one primal polish: when the rounded rotation scores below the
    // interior-point iterate (its value carries the terminal duality gap),
    // the exact lift of that rotation is the better feasible point.
    try {
        const Eigen::Matrix3d rounded = refine_rotation(extract_rotation(sol), prob);
        const double f_rounded = rotation_objective(prob, rounded);
        if (f_rounded < sol.objective) {
            sol.r = vec9(rounded);
            sol.rho = sol.r * sol.r.transpose();
            sol.objective = f_rounded;
        }
    } catch (const AmbiguousProjectionError&) {
    }
    return sol;
}

Eigen::Matrix3d extract_rotation(const SdpSolution& sol) {
    Eigen::SelfAdjointEigenSolver<Matrix9d> es(sol.rho);
    const auto& evals = es.eigenvalues();  // ascending
    const double l1 = evals(8);
    const double l2 = std::max(evals(7), 0.0);

    Vector9d candidate = sol.r;
    if (l2 <= 0.0 ? l1 > 0.0 : l1 / l2 > 1e6) {
        Vector9d principal = std::sqrt(std::max(l1, 0.0)) * es.eigenvectors().col(8);
        double sign = 1.0;
        if (sol.r.norm() > 1e-9) {
            sign = principal.dot(sol.r) >= 0.0 ? 1.0 : -1.0;
        } else if (unvec9(principal).trace() < 0.0) {
            sign = -1.0;
        }
        candidate = sign * principal;
    }
    if (candidate.norm() < 1e-9) {
        // Fully degenerate relaxation: any rotation is optimal.
        return Eigen::Matrix3d::Identity();
    }
    return project_to_rotation(unvec9(candidate));
}

Eigen::Matrix3d refine_rotation(const Eigen::Matrix3d& r0,
                                const QuadraticRotationProblem& prob) {
    Eigen::Matrix3d r = r0;
    double f = rotation_objective(prob, r);

    for (int it = 0; it < 100; ++it) {
        const Vector9d g9 = prob.A * vec9(r) + prob.b;
        const Eigen::Matrix3d gm = unvec9(g9);

        Eigen::Vector3d grad;
        Eigen::Matrix3d hess;
        std::array<Eigen::Matrix3d, 3> re;
        for (int k = 0; k < 3; ++k) re[k] = r * skew_basis(k);
        for (int k = 0; k < 3; ++k) {
            grad(k) = (gm.cwiseProduct(re[k])).sum();
            for (int l = k; l < 3; ++l) {
                const Eigen::Matrix3d curv =
                    0.5 * r * (skew_basis(k) * skew_basis(l) + skew_basis(l) * skew_basis(k));
                hess(k, l) = vec9(re[k]).dot(prob.A * vec9(re[l])) +
                             (gm.cwiseProduct(curv)).sum();
                hess(l, k) = hess(k, l);
            }
        }

        // Damped Newton step with eigenvalue clamping keeps it a descent step.
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> hes(hess);
        const double floor = std::max(1e-12, 1e-9 * hes.eigenvalues().cwiseAbs().maxCoeff());
        Eigen::Vector3d d = hes.eigenvalues().cwiseMax(floor);
        const Eigen::Matrix3d hinv = hes.eigenvectors() * d.cwiseInverse().asDiagonal() *
                                     hes.eigenvectors().transpose();
        Eigen::Vector3d step = -hinv * grad;

        if (step.norm() < 1e-10) break;

        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            const Eigen::Matrix3d r_try = project_to_rotation(r * rodrigues(step));
            const double f_try = rotation_objective(prob, r_try);
            if (f_try < f) {
                r = r_try;
                f = f_try;
                accepted = true;
                break;
            }
            step *= 0.5;
            if (step.norm() < 1e-12) break;
        }
        if (!accepted) break;
    }
    return r;
}

Eigen::Matrix3d brute_force_rotation(const QuadraticRotationProblem& prob,
                                     double grid_step_deg) {
    if (!(grid_step_deg > 0.0) || grid_step_deg > 30.0) {
        throw InvalidConfigError("brute_force_rotation: grid step must be in (0, 30]");
    }
    const double step_rad = grid_step_deg * std::numbers::pi / 180.0;
    const int n_axes =
        std::max(16, static_cast<int>(std::ceil(4.0 * std::numbers::pi / (step_rad * step_rad))));
    const int n_angles = static_cast<int>(std::ceil(180.0 / grid_step_deg));

    // Fibonacci sphere gives a deterministic, near-uniform axis grid.
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    Eigen::Matrix3d best = Eigen::Matrix3d::Identity();
    double best_f = rotation_objective(prob, best);
    for (int a = 0; a < n_axes; ++a) {
        const double z = 1.0 - 2.0 * (a + 0.5) / n_axes;
        const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * a;
        const Eigen::Vector3d axis(rad * std::cos(phi), rad * std::sin(phi), z);
        for (int t = 1; t <= n_angles; ++t) {
            const Eigen::Matrix3d r = axis_angle_rotation(axis, t * step_rad);
            const double f = rotation_objective(prob, r);
            if (f < best_f) {
                best_f = f;
                best = r;
            }
        }
    }
    return refine_rotation(best, prob);
}

Eigen::Matrix3d solve_rotation(const QuadraticRotationProblem& prob,
                               const Eigen::Matrix3d& fallback_init) {
    if (prob.A.norm() < 1e-12 && prob.b.norm() < 1e-12) {
        return Eigen::Matrix3d::Identity();
    }
    Eigen::Matrix3d r0;
    try {
        const SdpSolution sol = solve_sdp(prob, build_constraints());
        r0 = extract_rotation(sol);
    } catch (const RelaxationFailureError&) {
        r0 = fallback_init;
    } catch (const AmbiguousProjectionError&) {
        r0 = fallback_init;
    }
    return refine_rotation(r0, prob);
}

}  // namespace ecmpr
