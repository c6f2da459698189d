#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "commands.hpp"
#include "ecmpr/io.hpp"

namespace cli {

using namespace ecmpr;

int run_benchmark(const BenchmarkArgs& args) {
    BatchSpec spec;
    spec.base_scene.n_model = args.n_model;
    spec.base_scene.n_inliers = args.n_inliers;
    spec.base_scene.n_outliers = args.n_outliers;
    spec.base_scene.noise = parse_noise(args.noise);
    spec.n_trials = args.trials;
    spec.master_seed = args.master_seed;

    {
        std::stringstream ss(args.sweep);
        std::string tok;
        std::vector<double> abc;
        while (std::getline(ss, tok, ':')) abc.push_back(std::stod(tok));
        if (abc.size() != 3 || abc[2] <= 0.0 || abc[1] < abc[0]) {
            throw InvalidConfigError("--sweep-rotation must be start:stop:step");
        }
        for (double v = abc[0]; v <= abc[1] + 1e-9; v += abc[2]) {
            spec.sweep_rotation_deg.push_back(v);
        }
    }
    {
        std::stringstream ss(args.algorithms);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            const auto algo = algorithm_from_name(tok);
            if (!algo) throw InvalidConfigError("unknown algorithm '" + tok + "'");
            spec.algorithms.push_back(*algo);
        }
        if (spec.algorithms.empty()) throw InvalidConfigError("empty algorithm list");
    }
    if (const char* env = std::getenv("ECMPR_THREADS")) {
        spec.n_threads = std::max(1, std::atoi(env));
    }

    std::filesystem::create_directories(args.output_dir);
    const TrialBatch batch = run_batch(spec);

    const std::filesystem::path dir(args.output_dir);
    io::write_batch_csv((dir / "trials.csv").string(), batch);
    io::write_batch_summary((dir / "summary.json").string(), spec, batch);
    io::write_batch_columns((dir / "curves.dat").string(), batch);

    std::cout << "sweep points: " << spec.sweep_rotation_deg.size() << ", trials per point: "
              << spec.n_trials << ", algorithms: " << spec.algorithms.size() << "\n";
    for (const auto& agg : batch.aggregates) {
        std::cout << "  " << algorithm_name(agg.algorithm) << " @ " << agg.sweep_value
                  << " deg: matches " << agg.mean.correct_match_pct << "% (sd "
                  << agg.stddev.correct_match_pct << "), rot err "
                  << agg.mean.rotation_error_pct << "%\n";
    }
    std::cout << "wrote " << (dir / "trials.csv").string() << ", summary.json, curves.dat\n";
    return kExitOk;
}

}  // namespace cli
