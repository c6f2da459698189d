#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "ecmpr/io.hpp"
#include "helpers.hpp"

using namespace ecmpr;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("ecmpr_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("scene files round-trip exactly") {
    TempDir tmp;
    RigidSceneSpec spec;
    spec.n_model = 7;
    spec.n_inliers = 6;
    spec.n_outliers = 3;
    spec.noise = NoiseSpec::anisotropic(0.1, 0.02, 0.005);
    spec.seed = 4242;
    const RigidScene scene = gen_rigid_scene(spec);

    const std::string path = tmp.file("scene.json");
    io::write_scene(path, scene);
    const RigidScene back = io::read_scene(path);

    REQUIRE(back.model.size() == scene.model.size());
    REQUIRE(back.data.size() == scene.data.size());
    for (std::size_t i = 0; i < scene.model.size(); ++i) {
        CHECK(back.model[i] == scene.model[i]);  // bitwise round trip
    }
    for (std::size_t j = 0; j < scene.data.size(); ++j) {
        CHECK(back.data[j] == scene.data[j]);
    }
    CHECK(back.ground_truth.rotation == scene.ground_truth.rotation);
    CHECK(back.ground_truth.translation == scene.ground_truth.translation);
    CHECK(back.labels == scene.labels);
    CHECK(back.spec.seed == scene.spec.seed);
}

TEST_CASE("model files round-trip") {
    TempDir tmp;
    const ArticulatedModel model = test_helpers::make_chain(4, 5, 81);
    const std::string path = tmp.file("model.json");
    io::write_model(path, model, "chain");
    const ArticulatedModel back = io::read_model(path);

    REQUIRE(back.part_count() == model.part_count());
    for (int p = 0; p < model.part_count(); ++p) {
        CHECK(back.parts[p].parent == model.parts[p].parent);
        REQUIRE(back.parts[p].points.size() == model.parts[p].points.size());
        for (std::size_t i = 0; i < model.parts[p].points.size(); ++i) {
            CHECK(back.parts[p].points[i] == model.parts[p].points[i]);
        }
        if (p > 0) {
            CHECK(back.parts[p].joint->fixed_frame == model.parts[p].joint->fixed_frame);
            CHECK(back.parts[p].joint->axes.size() == model.parts[p].joint->axes.size());
        }
    }
}

TEST_CASE("articulated scene files round-trip") {
    TempDir tmp;
    const ArticulatedModel model = test_helpers::make_chain(3, 6, 82);
    PoseParams pose = PoseParams::rest(model);
    pose.joint_angles[1] = {0.25};
    pose.joint_angles[2] = {-0.4};
    io::ArticulatedSceneFile file;
    file.model = model;
    file.scene = gen_articulated_scene(model, {pose, pose}, 0.02, 0.3, 83);
    file.seed = 83;
    file.noise_frac = 0.02;
    file.outlier_fraction = 0.3;

    const std::string path = tmp.file("artscene.json");
    io::write_articulated_scene(path, file);
    const io::ArticulatedSceneFile back = io::read_articulated_scene(path);

    REQUIRE(back.scene.frames.size() == 2);
    CHECK(back.seed == 83);
    for (std::size_t f = 0; f < 2; ++f) {
        const auto& fa = file.scene.frames[f];
        const auto& fb = back.scene.frames[f];
        REQUIRE(fb.data.size() == fa.data.size());
        for (std::size_t j = 0; j < fa.data.size(); ++j) CHECK(fb.data[j] == fa.data[j]);
        CHECK(fb.part_of_point == fa.part_of_point);
        CHECK(fb.ground_truth.joint_angles == fa.ground_truth.joint_angles);
    }
}

TEST_CASE("result files carry the config echo") {
    TempDir tmp;
    RigidSceneSpec spec;
    spec.n_model = 8;
    spec.n_inliers = 8;
    spec.n_outliers = 2;
    spec.rotation_deg = 15.0;
    spec.seed = 84;
    const RigidScene scene = gen_rigid_scene(spec);
    const MixtureConfig config =
        MixtureConfig::defaults_for(scene.data, static_cast<int>(scene.model.size()));
    const RigidResult res = ecmpr_rigid(scene.data, scene.model, config);
    const Metrics metrics = compute_metrics(res, scene.ground_truth, scene.labels,
                                            scene.data, scene.model, true, 0.05);

    const std::string path = tmp.file("result.json");
    io::write_rigid_result(path, res, config, &metrics);

    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"outlier_radius\"") != std::string::npos);
    CHECK(text.find("\"log_likelihood_trace\"") != std::string::npos);
    CHECK(text.find("\"assignment\"") != std::string::npos);
    CHECK(text.find("\"metrics\"") != std::string::npos);
}

TEST_CASE("points csv import") {
    TempDir tmp;
    const std::string path = tmp.file("pts.csv");
    {
        std::ofstream out(path);
        out << "0.5,1.25,-3\n1,2,3\n\n-0.125,0,7.5\n";
    }
    const PointSet pts = io::read_points_csv(path);
    REQUIRE(pts.size() == 3);
    CHECK(pts[0] == Point3(0.5, 1.25, -3));
    CHECK(pts[2] == Point3(-0.125, 0, 7.5));

    const std::string bad = tmp.file("bad.csv");
    {
        std::ofstream out(bad);
        out << "1,2\n";
    }
    CHECK_THROWS_AS(io::read_points_csv(bad), io::ParseError);
}

TEST_CASE("parse errors name the offending field") {
    TempDir tmp;
    const std::string path = tmp.file("broken.json");
    {
        std::ofstream out(path);
        out << R"({"data": [[0,0,0]], "labels": []})";
    }
    try {
        io::read_scene(path);
        FAIL("expected a parse error");
    } catch (const io::ParseError& e) {
        CHECK(std::string(e.what()).find("model") != std::string::npos);
    }

    const std::string badrot = tmp.file("badrot.json");
    {
        std::ofstream out(badrot);
        out << R"({"model": [[0,0,0]], "data": [[0,0,0]],
                   "ground_truth": {"R": [2,0,0,0,1,0,0,0,1], "t": [0,0,0]}})";
    }
    CHECK_THROWS_AS(io::read_scene(badrot), io::ParseError);
}

TEST_CASE("batch csv output is stable for a fixed batch") {
    TempDir tmp;
    BatchSpec spec;
    spec.base_scene.n_model = 6;
    spec.base_scene.n_inliers = 6;
    spec.base_scene.n_outliers = 2;
    spec.sweep_rotation_deg = {15.0};
    spec.n_trials = 2;
    spec.algorithms = {Algorithm::Icp};
    spec.master_seed = 7;
    TrialBatch batch = run_batch(spec);
    for (auto& row : batch.rows) row.metrics.wall_time_ms = 0.0;  // timing is not contractual

    const std::string a = tmp.file("a.csv");
    const std::string b = tmp.file("b.csv");
    io::write_batch_csv(a, batch);
    io::write_batch_csv(b, batch);
    std::ifstream fa(a), fb(b);
    const std::string sa((std::istreambuf_iterator<char>(fa)),
                         std::istreambuf_iterator<char>());
    const std::string sb((std::istreambuf_iterator<char>(fb)),
                         std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    CHECK(sa.rfind("trial,sweep_value,algorithm,rot_err_pct,trans_err_pct,match_pct,"
                   "iters,time_ms\n",
                   0) == 0);

    io::write_batch_summary(tmp.file("summary.json"), spec, batch);
    io::write_batch_columns(tmp.file("curves.dat"), batch);
    CHECK(std::filesystem::exists(tmp.file("summary.json")));
    CHECK(std::filesystem::exists(tmp.file("curves.dat")));
}
