#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "soh/errors.hpp"
#include "soh/synthetic.hpp"
#include "soh/trial.hpp"

using namespace soh;

namespace {

std::vector<CellSeries> small_corpus(std::size_t n_cells, std::uint64_t seed,
                                     double noise = 0.05) {
    SyntheticSpec spec;
    spec.n_cells = n_cells;
    spec.noise_std = noise;
    spec.rng_seed = seed;
    return generate_synthetic(spec).cells;
}

}  // namespace

TEST_CASE("identical config and seed give identical trial bytes") {
    const auto cells = small_corpus(14, 2);
    TrialConfig cfg;
    cfg.n_repeats = 3;
    cfg.n_train_cells = 8;
    cfg.rng_seed = 7;
    const auto a = run_trial(cells, cfg);
    const auto b = run_trial(cells, cfg);
    CHECK(a.rows_csv() == b.rows_csv());
    CHECK(a.rows.size() == cfg.n_repeats * (cells.size() - cfg.n_train_cells));
}

TEST_CASE("train and test splits are disjoint and exhaustive") {
    for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
        const auto order = split_order(20, seed);
        std::set<std::size_t> seen(order.begin(), order.end());
        CHECK(seen.size() == 20);
        CHECK(*seen.rbegin() == 19);
        const std::set<std::size_t> train(order.begin(), order.begin() + 8);
        for (std::size_t i = 8; i < order.size(); ++i) CHECK(!train.count(order[i]));
    }
}

TEST_CASE("infeasible split sizes are rejected") {
    const auto cells = small_corpus(5, 3);
    TrialConfig cfg;
    cfg.n_train_cells = 5;
    CHECK_THROWS_AS(run_trial(cells, cfg), ConfigError);
    cfg.n_train_cells = 0;
    CHECK_THROWS_AS(run_trial(cells, cfg), ConfigError);
}

TEST_CASE("noiseless trials forecast end of life almost exactly") {
    const auto cells = small_corpus(16, 4, 0.0);
    for (Method method : {Method::plr_curvature, Method::plr_kmeans, Method::plr_freesearch}) {
        TrialConfig cfg;
        cfg.method = method;
        cfg.n_repeats = 2;
        cfg.n_train_cells = 10;
        cfg.rng_seed = 11;
        const auto report = run_trial(cells, cfg);
        CHECK(report.summary.median_abs_eol_error < 0.5);
    }
}

TEST_CASE("sub-model counts stay small at fleet-scale training splits") {
    const auto cells = small_corpus(60, 5);
    TrialConfig cfg;
    cfg.n_repeats = 8;
    cfg.n_train_cells = 50;
    cfg.rng_seed = 3;
    const auto report = run_trial(cells, cfg);
    std::size_t in_range = 0;
    for (std::size_t n_m : report.n_m_per_repeat)
        if (n_m >= 2 && n_m <= 5) ++in_range;
    CHECK(double(in_range) >= 0.75 * double(report.n_m_per_repeat.size()));
}

TEST_CASE("gpr trials run with the same splits and report sane metrics") {
    const auto cells = small_corpus(12, 6);
    TrialConfig cfg;
    cfg.method = Method::gpr;
    cfg.n_repeats = 1;
    cfg.n_train_cells = 8;
    cfg.rng_seed = 5;
    cfg.gpr_starts = 2;
    cfg.gpr_iters = 40;
    const auto report = run_trial(cells, cfg);
    CHECK(report.rows.size() == 4);
    CHECK(report.summary.median_rmse_dq < 0.5);
    CHECK(report.summary.median_abs_eol_error < 10.0);
    for (const auto& row : report.rows) CHECK(row.n_m == 0);
}

TEST_CASE("sweep at rho_max 1.0 equals the unconstrained trial at the ladder seed") {
    const auto cells = small_corpus(12, 7);
    TrialConfig base;
    base.n_repeats = 2;
    base.n_train_cells = 7;
    base.rng_seed = 100;

    SweepConfig sweep;
    sweep.base = base;
    sweep.parameter = "rho_max";
    sweep.values = {0.85, 1.0};
    const auto results = run_sweep(cells, sweep);
    REQUIRE(results.size() == 2);

    TrialConfig unconstrained = base;
    unconstrained.rho_max = 1.0;
    unconstrained.rng_seed = base.rng_seed + 1000000;  // ladder offset of value 1
    const auto direct = run_trial(cells, unconstrained);
    CHECK(results[1].second.median_abs_eol_error == direct.summary.median_abs_eol_error);
    CHECK(results[1].second.median_rmse_dq == direct.summary.median_rmse_dq);
}

TEST_CASE("sweep rejects unknown parameters") {
    TrialConfig cfg;
    CHECK_THROWS_AS(apply_parameter(cfg, "nonsense", 1.0), ConfigError);
    apply_parameter(cfg, "n_features", 3.0);
    CHECK(cfg.n_features == 3);
}

TEST_CASE("histogram exports conserve counts") {
    namespace fs = std::filesystem;
    const auto cells = small_corpus(14, 8);
    TrialConfig cfg;
    cfg.n_repeats = 4;
    cfg.n_train_cells = 9;
    cfg.rng_seed = 13;
    const auto report = run_trial(cells, cfg);

    const auto path = fs::temp_directory_path() / "soh_breaks_hist.csv";
    write_breaks_histogram_csv(report.all_breaks, 12, path.string());
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);  // header
    std::size_t total = 0;
    while (std::getline(in, line)) {
        const auto pos = line.rfind(',');
        total += std::stoul(line.substr(pos + 1));
    }
    fs::remove(path);
    CHECK(total == report.all_breaks.size());
}

TEST_CASE("comparison export joins on repeat and cell") {
    const auto cells = small_corpus(10, 9);
    TrialConfig cfg;
    cfg.n_repeats = 2;
    cfg.n_train_cells = 6;
    cfg.rng_seed = 21;
    const auto plr = run_trial(cells, cfg);
    cfg.method = Method::gpr;
    cfg.gpr_starts = 1;
    cfg.gpr_iters = 30;
    const auto gpr = run_trial(cells, cfg);

    namespace fs = std::filesystem;
    const auto path = fs::temp_directory_path() / "soh_comparison.csv";
    write_comparison_csv(plr, gpr, "plr", "gpr", path.string());
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "repeat,cell_id,eol_error_plr,eol_error_gpr");
    std::size_t rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    fs::remove(path);
    CHECK(rows == plr.rows.size());
}

TEST_CASE("threaded repeats reproduce the single-threaded bytes") {
    const auto cells = small_corpus(12, 10);
    TrialConfig cfg;
    cfg.n_repeats = 4;
    cfg.n_train_cells = 8;
    cfg.rng_seed = 17;
    const auto serial = run_trial(cells, cfg);
    cfg.n_threads = 3;
    const auto threaded = run_trial(cells, cfg);
    CHECK(serial.rows_csv() == threaded.rows_csv());
}
