#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "soh/featurize.hpp"
#include "soh/regress.hpp"

namespace soh {

struct CapacityForecast {
    std::string cell_id;
    std::vector<double> predicted_dq;  // % of nominal per interval
    std::vector<double> trajectory;    // % of nominal; size = intervals + 1
    std::optional<double> eol_days;
    bool eol_unreachable = false;
    double interval_days = 0.5;
};

struct MetricTriple {
    double rmse_dq = 0.0;        // % capacity
    double rmse_capacity = 0.0;  // % capacity
    std::optional<double> eol_error_pct;  // signed; empty for censored cells
};

struct FleetSummary {
    double median_rmse_dq = 0.0;
    double p95_rmse_dq = 0.0;
    double median_rmse_capacity = 0.0;
    double p95_rmse_capacity = 0.0;
    double median_abs_eol_error = 0.0;
    double p95_abs_eol_error = 0.0;
    double median_signed_eol_error = 0.0;
    std::size_t n_forecasts = 0;
    std::size_t n_eol_scored = 0;
};

using DqPredictor = std::function<double(const IntervalRecord&)>;

/// Integrates per-interval predictions into a capacity trajectory from the
/// known initial capacity and finds the 80% crossing, linearly interpolated
/// inside the crossing interval. Past the recorded horizon the trajectory is
/// extrapolated at the mean predicted change of the last five intervals; a
/// non-degrading extrapolation rate flags the forecast EoL-unreachable.
CapacityForecast forecast_records(const DqPredictor& predict,
                                  const std::vector<IntervalRecord>& records,
                                  double initial_capacity_pct, double interval_days = 0.5);

CapacityForecast forecast_cell(const PiecewiseModel& model,
                               const std::vector<IntervalRecord>& records,
                               double initial_capacity_pct, double interval_days = 0.5);

/// Metrics against the observed records: RMSE of per-interval delta_q, RMSE
/// of the reconstructed capacity trajectory, and the signed end-of-life
/// error 100 * (observed - predicted) / observed. The EoL term is omitted
/// when the observed EoL is absent or the forecast flagged unreachable.
MetricTriple score(const CapacityForecast& forecast, const std::vector<IntervalRecord>& observed,
                   std::optional<double> observed_eol_days);

/// Linear-interpolation quantile of unsorted values, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Medians and 95th percentiles; EoL percentiles are over |error| with the
/// signed median carried alongside.
FleetSummary summarize(const std::vector<MetricTriple>& triples);

}  // namespace soh
