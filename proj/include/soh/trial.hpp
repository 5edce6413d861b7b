#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "soh/forecast.hpp"
#include "soh/gpr.hpp"
#include "soh/regress.hpp"
#include "soh/segment.hpp"
#include "soh/series.hpp"

namespace soh {

enum class Method { plr_curvature, plr_kmeans, plr_freesearch, gpr };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct TrialConfig {
    Method method = Method::plr_curvature;
    std::size_t n_repeats = 1;
    std::size_t n_train_cells = 50;
    std::size_t n_features = 5;
    double rho_max = 0.85;
    double beta_improv = 0.01;
    std::size_t max_models = 10;
    /// Held-out share for sub-model-count scoring (0 = score on training).
    double size_holdout = 0.0;
    double interval_hours = 12.0;
    std::uint64_t rng_seed = 0;
    /// Compute percentile bounds from the whole fleet instead of the
    /// training cells only (test cells then inform the thresholds).
    bool bounds_from_all = false;
    std::size_t n_threads = 1;
    SmootherConfig smoother;
    /// Hyperparameter search budget for GPR repeats; the final model always
    /// conditions on the full training set.
    std::size_t gpr_max_hyper_points = 300;
    int gpr_starts = 3;
    int gpr_iters = 80;
};

struct TrialRow {
    std::size_t repeat = 0;
    std::string cell_id;
    MetricTriple metrics;
    bool censored = false;
    bool eol_unreachable = false;
    std::size_t n_m = 0;  // sub-model count of the repeat's model (0 for GPR)
};

struct TrialReport {
    TrialConfig config;
    std::vector<TrialRow> rows;  // repeat-major, test cells in split order
    FleetSummary summary;
    std::vector<double> all_breaks;          // every break over all repeats
    std::vector<std::size_t> n_m_per_repeat;

    std::string rows_csv() const;
};

/// The repeated-split experiment: per repeat, a seeded train/test split of
/// the fleet, bounds + selection + splitting + fitting on training cells
/// only, then a forecast and metric triple per test cell.
TrialReport run_trial(const std::vector<CellSeries>& cells, const TrialConfig& cfg);

/// Shuffled cell order for one repeat; the first n_train_cells entries are
/// the training split, the rest the test split.
std::vector<std::size_t> split_order(std::size_t n_cells, std::uint64_t repeat_seed);

struct SweepConfig {
    TrialConfig base;
    std::string parameter;  // rho_max | beta_improv | n_features | max_models | n_train_cells
    std::vector<double> values;
};

void apply_parameter(TrialConfig& cfg, const std::string& parameter, double value);

/// One trial per swept value; value j runs at seed base + j * 10^6 so
/// repeats stay comparable across values.
std::vector<std::pair<double, FleetSummary>> run_sweep(const std::vector<CellSeries>& cells,
                                                       const SweepConfig& cfg);

void write_rows_csv(const TrialReport& report, const std::string& path);
void write_summary_json(const TrialReport& report, const std::string& path);
std::string summary_json(const TrialReport& report);
void write_breaks_histogram_csv(const std::vector<double>& breaks, std::size_t n_bins,
                                const std::string& path);
void write_nm_histogram_csv(const std::vector<std::size_t>& n_m, const std::string& path);
/// Per-(repeat, cell) join of two trials' EoL errors.
void write_comparison_csv(const TrialReport& a, const TrialReport& b, const std::string& label_a,
                          const std::string& label_b, const std::string& path);
void write_sweep_csv(const std::vector<std::pair<double, FleetSummary>>& sweep,
                     const std::string& parameter, const std::string& path);

}  // namespace soh
