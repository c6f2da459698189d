// Compares the OpenMP kernels against the serial reference implementations
// on a large synthetic scene: wall time, speedup, and max deviation.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

#include "ecmpr/mixture.hpp"
#include "ecmpr/rigid.hpp"
#include "ecmpr/synth.hpp"

using namespace ecmpr;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
    const int m = argc > 1 ? std::atoi(argv[1]) : 20000;
    const int n = argc > 2 ? std::atoi(argv[2]) : 200;
    const int reps = argc > 3 ? std::atoi(argv[3]) : 3;

    std::printf("kernel benchmark: m=%d data points, n=%d components, %d threads\n", m, n,
                omp_get_max_threads());

    RigidSceneSpec spec;
    spec.n_model = n;
    spec.n_inliers = 0;
    spec.n_outliers = 0;
    spec.seed = 1;
    RigidScene scene = gen_rigid_scene(spec);
    Rng rng(2);
    scene.data.resize(m);
    for (auto& p : scene.data) {
        p = rng.uniform_box(Point3::Constant(-0.2), Point3::Constant(1.2));
    }

    MixtureConfig config = MixtureConfig::defaults_for(scene.data, n);
    std::vector<Covariance3> sigmas(n);
    for (auto& s : sigmas) {
        const Eigen::Matrix3d q = rng.random_rotation();
        Eigen::Vector3d d(rng.uniform(0.01, 0.08), rng.uniform(0.01, 0.08),
                          rng.uniform(0.01, 0.08));
        s = q * d.asDiagonal() * q.transpose();
    }

    // E-step
    Posteriors fast, slow;
    const double t_fast = time_ms(
        [&] { fast = e_step(scene.data, scene.model, sigmas, config); }, reps);
    const double t_slow = time_ms(
        [&] { slow = reference::e_step(scene.data, scene.model, sigmas, config); }, 1);
    std::printf("e_step           parallel %8.2f ms   serial %8.2f ms   speedup %5.2fx   "
                "max|diff| %.3g\n",
                t_fast, t_slow, t_slow / t_fast,
                (fast.alpha - slow.alpha).cwiseAbs().maxCoeff());

    // Virtual observations
    VirtualObservations vf, vs;
    const double v_fast =
        time_ms([&] { vf = virtual_observations(scene.data, fast); }, reps);
    const double v_slow =
        time_ms([&] { vs = reference::virtual_observations(scene.data, fast); }, 1);
    double vdiff = 0.0;
    for (int i = 0; i < n; ++i) {
        vdiff = std::max(vdiff, (vf.points[i] - vs.points[i]).norm());
        vdiff = std::max(vdiff, std::abs(vf.weights[i] - vs.weights[i]));
    }
    std::printf("virtual obs      parallel %8.2f ms   serial %8.2f ms   speedup %5.2fx   "
                "max|diff| %.3g\n",
                v_fast, v_slow, v_slow / v_fast, vdiff);

    // Observed log-likelihood
    double lf = 0.0, ls = 0.0;
    const double l_fast = time_ms(
        [&] { lf = observed_log_likelihood(scene.data, scene.model, sigmas, config); }, reps);
    const double l_slow = time_ms(
        [&] { ls = reference::observed_log_likelihood(scene.data, scene.model, sigmas, config); },
        1);
    std::printf("log-likelihood   parallel %8.2f ms   serial %8.2f ms   speedup %5.2fx   "
                "|diff| %.3g\n",
                l_fast, l_slow, l_slow / l_fast, std::abs(lf - ls));

    // Covariance scatter
    const CovarianceEstimate prev =
        CovarianceEstimate::spherical(n, config.init_sigma, CovarianceMode::PerComponent);
    CovarianceEstimate est;
    const double c_fast = time_ms(
        [&] {
            est = update_covariances(scene.data, fast, scene.model,
                                     CovarianceMode::PerComponent, config.fatten_epsilon, prev);
        },
        reps);
    std::printf("covariance scan  parallel %8.2f ms\n", c_fast);
    return 0;
}
