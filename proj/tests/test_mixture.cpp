#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ecmpr/mixture.hpp"
#include "ecmpr/synth.hpp"
#include "helpers.hpp"

using namespace ecmpr;
using test_helpers::random_spd;

namespace {

MixtureConfig unit_config(int n, double r = 1.0, double volume = 1000.0) {
    MixtureConfig c;
    c.outlier_radius = r;
    c.working_volume = volume;
    c.init_sigma = 1.0;
    c.fatten_epsilon = 1e-6;
    c.validate(n);
    return c;
}

struct RandomScene {
    PointSet data;
    PointSet model;
    std::vector<Covariance3> sigmas;
};

RandomScene random_scene(Rng& rng, int m, int n) {
    RandomScene s;
    for (int i = 0; i < n; ++i) {
        s.model.push_back(rng.uniform_box(Point3::Zero(), Point3::Ones()));
        s.sigmas.push_back(random_spd(rng, 0.05, 0.6));
    }
    for (int j = 0; j < m; ++j) {
        s.data.push_back(rng.uniform_box(-0.2 * Point3::Ones(), 1.2 * Point3::Ones()));
    }
    return s;
}

}  // namespace

TEST_CASE("outlier_constant matches the closed form") {
    CHECK(outlier_constant(1.0) == doctest::Approx(3.7599424119465).epsilon(1e-12));
    CHECK(outlier_constant(2.0) == doctest::Approx(3.7599424119465 / 8.0).epsilon(1e-12));
    CHECK(outlier_constant(1e4) < 1e-11);  // monotone decay toward zero
    CHECK(outlier_constant(0.5) > outlier_constant(1.0));
    CHECK_THROWS_AS(outlier_constant(0.0), InvalidConfigError);
    CHECK_THROWS_AS(outlier_constant(-1.0), InvalidConfigError);
}

TEST_CASE("e_step single-component hand value") {
    const MixtureConfig config = unit_config(1);
    const PointSet data{Point3::Zero()};
    const PointSet model{Point3::Zero()};
    const std::vector<Covariance3> sigmas{Covariance3::Identity()};

    const Posteriors post = e_step(data, model, sigmas, config);
    const double expected = 1.0 / (1.0 + outlier_constant(1.0));
    CHECK(post.alpha(0, 0) == doctest::Approx(expected).epsilon(1e-10));
    CHECK(post.alpha(0, 0) == doctest::Approx(0.21009).epsilon(1e-4));
    CHECK(post.alpha(0, 1) == doctest::Approx(0.78991).epsilon(1e-4));
}

TEST_CASE("e_step outlier mass vanishes for huge radius") {
    MixtureConfig config = unit_config(1, /*r=*/1.0, /*volume=*/1e12);
    config.outlier_radius = 1e3;
    const Posteriors post = e_step({Point3::Zero()}, {Point3::Zero()},
                                   {Covariance3::Identity()}, config);
    CHECK(post.alpha(0, 0) > 1.0 - 1e-6);
}

TEST_CASE("e_step symmetry for equidistant components") {
    const MixtureConfig config = unit_config(2);
    const PointSet data{Point3::Zero()};
    const PointSet model{Point3(1, 0, 0), Point3(-1, 0, 0)};
    const std::vector<Covariance3> sigmas{Covariance3::Identity(), Covariance3::Identity()};
    const Posteriors post = e_step(data, model, sigmas, config);
    CHECK(post.alpha(0, 0) == doctest::Approx(post.alpha(0, 1)).epsilon(1e-12));
}

TEST_CASE("e_step rows normalize and match the reference kernel") {
    Rng rng(21);
    for (int rep = 0; rep < 30; ++rep) {
        const auto scene = random_scene(rng, 20, 7);
        const MixtureConfig config = unit_config(7, rng.uniform(0.3, 2.0));
        const Posteriors fast = e_step(scene.data, scene.model, scene.sigmas, config);
        const Posteriors slow =
            reference::e_step(scene.data, scene.model, scene.sigmas, config);

        for (int j = 0; j < fast.rows(); ++j) {
            double row = 0.0;
            for (int i = 0; i <= fast.components(); ++i) {
                CHECK(fast.alpha(j, i) >= 0.0);
                CHECK(fast.alpha(j, i) <= 1.0);
                row += fast.alpha(j, i);
            }
            CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
        }
        CHECK((fast.alpha - slow.alpha).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("outlier column equals one minus the direct sum") {
    Rng rng(22);
    const auto scene = random_scene(rng, 25, 6);
    const MixtureConfig config = unit_config(6);
    const Posteriors post = e_step(scene.data, scene.model, scene.sigmas, config);
    for (int j = 0; j < post.rows(); ++j) {
        double direct = 0.0;
        for (int i = 0; i < post.components(); ++i) direct += post.alpha(j, i);
        CHECK(post.outlier(j) == doctest::Approx(1.0 - direct).epsilon(1e-12));
    }
}

TEST_CASE("shrinking the radius never increases inlier posteriors") {
    Rng rng(23);
    const auto scene = random_scene(rng, 15, 5);
    MixtureConfig config = unit_config(5, 1.0);
    const Posteriors wide = e_step(scene.data, scene.model, scene.sigmas, config);
    config.outlier_radius = 0.35;
    const Posteriors narrow = e_step(scene.data, scene.model, scene.sigmas, config);
    for (int j = 0; j < wide.rows(); ++j) {
        for (int i = 0; i < wide.components(); ++i) {
            CHECK(narrow.alpha(j, i) <= wide.alpha(j, i) + 1e-12);
        }
    }
}

TEST_CASE("virtual observations: uniform and weighted hand values") {
    Posteriors post;
    post.alpha.resize(2, 2);
    post.alpha << 1.0, 0.0, 1.0, 0.0;
    const PointSet data{Point3(0, 0, 0), Point3(2, 0, 0)};
    const VirtualObservations vo = virtual_observations(data, post);
    CHECK(vo.weights[0] == doctest::Approx(2.0));
    CHECK((vo.points[0] - Point3(1, 0, 0)).norm() < 1e-15);

    Posteriors weighted;
    weighted.alpha.resize(2, 2);
    weighted.alpha << 0.25, 0.75, 0.75, 0.25;
    const VirtualObservations vw = virtual_observations(data, weighted);
    CHECK(vw.weights[0] == doctest::Approx(1.0));
    CHECK((vw.points[0] - Point3(1.5, 0, 0)).norm() < 1e-12);
}

TEST_CASE("virtual observations: zero-mass component is flagged") {
    Posteriors post;
    post.alpha.resize(2, 2);
    post.alpha << 0.0, 1.0, 0.0, 1.0;
    const PointSet data{Point3(0, 0, 0), Point3(2, 0, 0)};
    const PointSet fallback{Point3(9, 9, 9)};
    const VirtualObservations vo = virtual_observations(data, post, fallback);
    CHECK(vo.weights[0] == doctest::Approx(0.0));
    CHECK(vo.supported[0] == 0);
    CHECK((vo.points[0] - Point3(9, 9, 9)).norm() < 1e-15);
}

TEST_CASE("weight conservation: inlier mass plus outlier mass equals m") {
    Rng rng(24);
    const auto scene = random_scene(rng, 40, 8);
    const MixtureConfig config = unit_config(8);
    const Posteriors post = e_step(scene.data, scene.model, scene.sigmas, config);
    const VirtualObservations vo = virtual_observations(scene.data, post);
    double outlier_mass = 0.0;
    for (int j = 0; j < post.rows(); ++j) outlier_mass += post.outlier(j);
    CHECK(vo.total_weight() + outlier_mass == doctest::Approx(40.0).epsilon(1e-9));
    CHECK(vo.total_weight() <= 40.0 + 1e-9);
}

TEST_CASE("map_classify tie-breaking") {
    Posteriors post;
    post.alpha.resize(3, 3);
    // Rows: clear component win; exact tie between components; outlier win.
    post.alpha << 0.9, 0.05, 0.05,
                  0.45, 0.45, 0.10,
                  0.10, 0.20, 0.70;
    const Assignment a = map_classify(post);
    CHECK(a.labels[0] == 0);
    CHECK(a.labels[1] == 0);
    CHECK(a.labels[2] == Assignment::kOutlier);

    Posteriors tie;
    tie.alpha.resize(1, 2);
    tie.alpha << 0.5, 0.5;
    CHECK(map_classify(tie).labels[0] == 0);  // outlier loses ties
}

TEST_CASE("observed log-likelihood hand value and symmetry") {
    const MixtureConfig config = unit_config(1, 1.0, 1000.0);
    const PointSet model{Point3::Zero()};
    const std::vector<Covariance3> sigmas{Covariance3::Identity()};

    const double v = 4.0 / 3.0 * std::numbers::pi;
    const double p_in = v / 1000.0;
    const double p_out = (1000.0 - v) / 1000.0;
    const double expected =
        std::log(p_in * std::pow(2.0 * std::numbers::pi, -1.5) + p_out / 1000.0);
    CHECK(observed_log_likelihood({Point3::Zero()}, model, sigmas, config) ==
          doctest::Approx(expected).epsilon(1e-12));

    // Re-ordering the data does not change the sum.
    Rng rng(25);
    const auto scene = random_scene(rng, 12, 4);
    const MixtureConfig c4 = unit_config(4);
    const double base =
        observed_log_likelihood(scene.data, scene.model, scene.sigmas, c4);
    PointSet shuffled = scene.data;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(observed_log_likelihood(shuffled, scene.model, scene.sigmas, c4) ==
          doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("doubling the volume lowers the outlier term") {
    const PointSet model{Point3::Zero()};
    const std::vector<Covariance3> sigmas{Covariance3::Identity()};
    const PointSet data{Point3(30, 0, 0)};  // far away: outlier term dominates

    MixtureConfig c1 = unit_config(1, 1.0, 1000.0);
    MixtureConfig c2 = unit_config(1, 1.0, 2000.0);
    CHECK(observed_log_likelihood(data, model, sigmas, c2) <
          observed_log_likelihood(data, model, sigmas, c1));
}

TEST_CASE("observed log-likelihood matches the reference kernel") {
    Rng rng(26);
    const auto scene = random_scene(rng, 30, 6);
    const MixtureConfig config = unit_config(6);
    const double fast =
        observed_log_likelihood(scene.data, scene.model, scene.sigmas, config);
    const double slow =
        reference::observed_log_likelihood(scene.data, scene.model, scene.sigmas, config);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-11));
}

TEST_CASE("config validation enforces the small-sphere assumption") {
    MixtureConfig c;
    c.outlier_radius = 10.0;
    c.working_volume = 10.0;  // far smaller than n * v
    c.init_sigma = 1.0;
    CHECK_THROWS_AS(c.validate(3), InvalidConfigError);

    MixtureConfig d = MixtureConfig::defaults_for(
        {Point3::Zero(), Point3(1, 1, 1), Point3(0.5, 0, 1)}, 10);
    d.validate(10);  // defaults satisfy their own invariants
    CHECK(d.outlier_radius > 0.0);
    CHECK(d.covariance_mode == CovarianceMode::Common);
}
