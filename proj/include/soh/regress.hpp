#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "soh/featurize.hpp"
#include "soh/linalg.hpp"
#include "soh/segment.hpp"
#include "soh/select.hpp"

namespace soh {

struct BlrPrior {
    double sigma_w = 10.0;  // zero-mean prior weight std
    double sigma_n = 0.1;   // observation noise std, % capacity
};

/// Gaussian posterior over the weights of one linear sub-model. The design
/// carries a trailing bias column, so w_hat has one more entry than the
/// selected feature count.
struct BlrPosterior {
    std::vector<double> w_hat;
    Matrix precision;   // sigma_n^-2 X^T X + sigma_w^-2 I
    Matrix covariance;  // its inverse
    double sigma_n = 0.0;

    double predict(const std::vector<double>& x_with_bias) const;
    double predictive_variance(const std::vector<double>& x_with_bias) const;
};

/// Posterior mean by SPD solve of the precision system; the covariance is
/// the precision inverse.
BlrPosterior fit_blr(const Matrix& design, const std::vector<double>& y, const BlrPrior& prior);

void predict_blr(const BlrPosterior& posterior, const Matrix& design_star,
                 std::vector<double>& mean, std::vector<double>* variance = nullptr);

enum class SegmentFlag { ok, low_rank, borrowed };

struct SegmentModel {
    BlrPosterior posterior;
    SegmentFlag flag = SegmentFlag::ok;
    std::size_t n_points = 0;
};

struct PiecewiseModel {
    SelectionResult selection;
    BreakSet breaks;
    std::vector<SegmentModel> segments;  // breaks.values.size() + 1 entries
    BlrPrior prior;

    std::size_t n_sub_models() const { return segments.size(); }
    /// Segment owning a splitting-feature value: left-closed, right-open.
    std::size_t segment_index(double splitting_value) const;
    double predict(const IntervalRecord& record) const;
    double predict(const IntervalRecord& record, double* variance) const;
};

/// Design matrix of the selected features (selection order) plus a trailing
/// bias column of ones.
Matrix selected_design(const std::vector<IntervalRecord>& records,
                       const SelectionResult& selection);
std::vector<double> selected_row(const IntervalRecord& record, const SelectionResult& selection);

/// One Bayesian linear sub-model per segment of the splitting feature.
/// Segments with no records borrow the nearest fitted neighbour and are
/// flagged; segments with fewer points than coefficients keep their own
/// (prior-dominated) fit and are flagged low_rank.
PiecewiseModel fit_piecewise(const std::vector<IntervalRecord>& records,
                             const SelectionResult& selection, const BreakSet& breaks,
                             const BlrPrior& prior);

double model_rmse_dq(const PiecewiseModel& model, const std::vector<IntervalRecord>& records);

/// Noise level for the prior: residual std of a single global fit run at a
/// coarse initial sigma_n, one refinement pass.
double estimate_noise(const std::vector<IntervalRecord>& records,
                      const SelectionResult& selection, double sigma_w = 10.0,
                      double initial_sigma_n = 0.1);

struct SizeSelectConfig {
    double beta_improv = 0.01;
    std::size_t max_models = 10;
    /// 0 scores candidate sizes on the training records themselves; a
    /// positive fraction holds out roughly that share of records
    /// (deterministic stride) for scoring and refits the chosen size on
    /// everything.
    double holdout_fraction = 0.0;
};

struct SizeCandidate {
    std::size_t n_m = 0;
    std::optional<double> rmse;  // empty when the requested break count is unavailable
};

/// The smallest candidate whose RMSE is within (1 + beta) of the best;
/// returns the index into `candidates`. Candidates without an RMSE are
/// skipped.
std::size_t choose_model_size(const std::vector<SizeCandidate>& candidates, double beta_improv);

using BreakSupplier = std::function<BreakSet(std::size_t n_breaks)>;

struct SizeSelectResult {
    std::size_t n_m = 0;
    PiecewiseModel model;
    std::vector<SizeCandidate> table;  // one row per tried size
};

/// Fits every sub-model count from 1 to max_models (skipping counts whose
/// requested breaks the splitter cannot supply) and keeps the smallest
/// within beta_improv of the optimum.
SizeSelectResult select_model_size(const std::vector<IntervalRecord>& records,
                                   const SelectionResult& selection, const BlrPrior& prior,
                                   const SizeSelectConfig& cfg, const BreakSupplier& splitter);

std::string model_to_json(const PiecewiseModel& model);
PiecewiseModel model_from_json(const std::string& json_text);

}  // namespace soh
