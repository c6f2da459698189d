#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ecmpr/geometry.hpp"
#include "ecmpr/rigid.hpp"
#include "ecmpr/synth.hpp"
#include "helpers.hpp"

using namespace ecmpr;
using test_helpers::random_spd;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("apply_transform basic cases") {
    RigidTransform t;
    CHECK(apply_transform(t, Point3(1, 2, 3)).isApprox(Point3(1, 2, 3)));

    t.rotation = axis_angle_rotation(Eigen::Vector3d::UnitZ(), kPi / 2.0);
    CHECK((apply_transform(t, Point3(1, 0, 0)) - Point3(0, 1, 0)).norm() < 1e-12);

    t = RigidTransform{};
    t.translation = Point3(1, 1, 1);
    CHECK(apply_transform(t, Point3::Zero()).isApprox(Point3(1, 1, 1)));
}

TEST_CASE("mahalanobis_sq hand values") {
    const Covariance3 id = Covariance3::Identity();
    CHECK(mahalanobis_sq(Point3(5, 5, 5), Point3(5, 5, 5), id) == doctest::Approx(0.0));
    CHECK(mahalanobis_sq(Point3(1, 0, 0), Point3::Zero(), id) == doctest::Approx(1.0));

    Covariance3 diag = Covariance3::Zero();
    diag.diagonal() << 4.0, 1.0, 1.0;
    CHECK(mahalanobis_sq(Point3(1, 0, 0), Point3::Zero(), diag) == doctest::Approx(0.25));
}

TEST_CASE("mahalanobis_sq rejects degenerate covariance") {
    Covariance3 singular = Covariance3::Zero();
    singular(0, 0) = 1.0;
    CHECK_THROWS_AS(mahalanobis_sq(Point3::Ones(), Point3::Zero(), singular),
                    DegenerateCovarianceError);

    Covariance3 ill = Covariance3::Identity();
    ill(2, 2) = 1e-14;
    CHECK_THROWS_AS(mahalanobis_sq(Point3::Ones(), Point3::Zero(), ill),
                    DegenerateCovarianceError);
}

TEST_CASE("mahalanobis reduces to scaled Euclidean for spherical covariances") {
    Rng rng(11);
    for (int k = 0; k < 200; ++k) {
        const Point3 x = rng.uniform_box(-Point3::Ones(), Point3::Ones());
        const Point3 y = rng.uniform_box(-Point3::Ones(), Point3::Ones());
        const double s2 = rng.uniform(0.01, 5.0);
        const double got = mahalanobis_sq(x, y, s2 * Covariance3::Identity());
        CHECK(got == doctest::Approx((x - y).squaredNorm() / s2).epsilon(1e-10));
    }
}

TEST_CASE("project_to_rotation fixed point and scaling") {
    Rng rng(12);
    const Eigen::Matrix3d r = rng.random_rotation();
    CHECK((project_to_rotation(r) - r).norm() < 1e-12);
    CHECK((project_to_rotation(2.0 * Eigen::Matrix3d::Identity()) -
           Eigen::Matrix3d::Identity())
              .norm() < 1e-12);
}

TEST_CASE("project_to_rotation corrects reflections to the grid optimum") {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(2, 2) = -1.0;
    const Eigen::Matrix3d r = project_to_rotation(m);
    CHECK(is_rotation_matrix(r));

    // Coarse SO(3) sweep; the projection must be at least as close to M.
    const double proj_dist = (r - m).norm();
    Rng rng(13);
    for (int k = 0; k < 4000; ++k) {
        const Eigen::Matrix3d cand = rng.random_rotation();
        CHECK(proj_dist <= (cand - m).norm() + 1e-9);
    }
}

TEST_CASE("project_to_rotation rejects rank-deficient input") {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    m(0, 0) = 1.0;
    CHECK_THROWS_AS(project_to_rotation(m), AmbiguousProjectionError);
    CHECK_THROWS_AS(project_to_rotation(Eigen::Matrix3d::Zero()), AmbiguousProjectionError);
}

TEST_CASE("project_to_rotation is idempotent") {
    Rng rng(14);
    for (int k = 0; k < 100; ++k) {
        Eigen::Matrix3d m;
        for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = rng.normal();
        Eigen::Matrix3d p;
        try {
            p = project_to_rotation(m);
        } catch (const AmbiguousProjectionError&) {
            continue;
        }
        CHECK((project_to_rotation(p) - p).norm() < 1e-12);
        CHECK(is_rotation_matrix(p));
    }
}

TEST_CASE("compose identities and inverses") {
    Rng rng(15);
    RigidTransform t;
    t.rotation = rng.random_rotation();
    t.translation = rng.uniform_box(-Point3::Ones(), Point3::Ones());
    const Homogeneous4 h = to_homogeneous(t);

    CHECK((compose(Homogeneous4::Identity(), h) - h).norm() < 1e-15);
    CHECK((compose(h, h.inverse()) - Homogeneous4::Identity()).norm() < 1e-10);

    RigidTransform t1, t2;
    t1.translation = Point3(1, 2, 3);
    t2.translation = Point3(-4, 0, 2);
    const Homogeneous4 sum = compose(to_homogeneous(t1), to_homogeneous(t2));
    CHECK((sum.topRightCorner<3, 1>() - Point3(-3, 2, 5)).norm() < 1e-15);
    CHECK((sum.topLeftCorner<3, 3>() - Eigen::Matrix3d::Identity()).norm() < 1e-15);
}

TEST_CASE("compose is associative") {
    Rng rng(16);
    for (int k = 0; k < 100; ++k) {
        RigidTransform a, b, c;
        a.rotation = rng.random_rotation();
        b.rotation = rng.random_rotation();
        c.rotation = rng.random_rotation();
        a.translation = rng.normal3();
        b.translation = rng.normal3();
        c.translation = rng.normal3();
        const Homogeneous4 ha = to_homogeneous(a), hb = to_homogeneous(b),
                           hc = to_homogeneous(c);
        CHECK((compose(compose(ha, hb), hc) - compose(ha, compose(hb, hc))).norm() < 1e-12);
    }
}

TEST_CASE("fatten preserves eigenvectors") {
    Rng rng(17);
    for (int k = 0; k < 20; ++k) {
        const Covariance3 sigma = random_spd(rng, 0.1, 3.0);
        const Covariance3 fat = fatten(sigma, 0.5);
        Eigen::SelfAdjointEigenSolver<Covariance3> ea(sigma), eb(fat);
        CHECK((eb.eigenvalues() - ea.eigenvalues() - Eigen::Vector3d::Constant(0.5)).norm() <
              1e-10);
        for (int c = 0; c < 3; ++c) {
            const double dot = std::abs(ea.eigenvectors().col(c).dot(eb.eigenvectors().col(c)));
            CHECK(dot == doctest::Approx(1.0).epsilon(1e-8));
        }
    }

    CHECK((fatten(Covariance3::Zero(), 1e-6) - 1e-6 * Covariance3::Identity()).norm() < 1e-18);
    Covariance3 d = Covariance3::Zero();
    d.diagonal() << 2.0, 1.0, 0.0;
    Covariance3 expect = Covariance3::Zero();
    expect.diagonal() << 2.5, 1.5, 0.5;
    CHECK((fatten(d, 0.5) - expect).norm() < 1e-15);
}

TEST_CASE("random rotations satisfy the rotation invariants") {
    Rng rng(18);
    for (int k = 0; k < 200; ++k) {
        const Eigen::Matrix3d r = rng.random_rotation();
        CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(std::abs(r.determinant() - 1.0) < 1e-9);
    }
}
