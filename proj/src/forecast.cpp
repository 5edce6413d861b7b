#include "soh/forecast.hpp"

#include <algorithm>
#include <cmath>

#include "soh/errors.hpp"

namespace soh {

namespace {

constexpr double kEolPct = 80.0;  // % of nominal

/// Time of the 80% crossing given the trajectory point before and after,
/// linear within the interval.
double interpolate_crossing(double t_before_days, double interval_days, double q_before,
                            double q_after) {
    const double frac = (q_before - kEolPct) / (q_before - q_after);
    return t_before_days + frac * interval_days;
}

}  // namespace

CapacityForecast forecast_records(const DqPredictor& predict,
                                  const std::vector<IntervalRecord>& records,
                                  double initial_capacity_pct, double interval_days) {
    CapacityForecast fc;
    fc.interval_days = interval_days;
    if (!records.empty()) fc.cell_id = records.front().cell_id;

    fc.trajectory.push_back(initial_capacity_pct);
    for (const auto& rec : records) {
        const double dq = predict(rec);
        fc.predicted_dq.push_back(dq);
        fc.trajectory.push_back(fc.trajectory.back() + dq);
    }

    for (std::size_t i = 0; i + 1 < fc.trajectory.size(); ++i) {
        if (fc.trajectory[i] > kEolPct && fc.trajectory[i + 1] <= kEolPct) {
            fc.eol_days = interpolate_crossing(double(i) * interval_days, interval_days,
                                               fc.trajectory[i], fc.trajectory[i + 1]);
            return fc;
        }
    }
    if (fc.trajectory.front() <= kEolPct) {
        fc.eol_days = 0.0;
        return fc;
    }

    // Extrapolate past the recorded horizon at the recent mean rate.
    const std::size_t n = fc.predicted_dq.size();
    const std::size_t tail = std::min<std::size_t>(5, n);
    if (tail == 0) {
        fc.eol_unreachable = true;
        return fc;
    }
    double rate = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) rate += fc.predicted_dq[i];
    rate /= double(tail);
    if (rate >= 0.0) {
        fc.eol_unreachable = true;
        return fc;
    }
    const double last_t = double(n) * interval_days;
    const double last_q = fc.trajectory.back();
    const double intervals_left = (last_q - kEolPct) / (-rate);
    fc.eol_days = last_t + intervals_left * interval_days;
    return fc;
}

CapacityForecast forecast_cell(const PiecewiseModel& model,
                               const std::vector<IntervalRecord>& records,
                               double initial_capacity_pct, double interval_days) {
    return forecast_records([&](const IntervalRecord& r) { return model.predict(r); }, records,
                            initial_capacity_pct, interval_days);
}

MetricTriple score(const CapacityForecast& forecast, const std::vector<IntervalRecord>& observed,
                   std::optional<double> observed_eol_days) {
    if (observed.size() != forecast.predicted_dq.size())
        throw Error("score: record count mismatch");
    if (observed.empty()) throw Error("score: no intervals");

    MetricTriple m;
    double sum_dq = 0.0, sum_cap = 0.0;
    double observed_capacity = forecast.trajectory.front();
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double dq_err = forecast.predicted_dq[i] - observed[i].delta_q;
        sum_dq += dq_err * dq_err;
        observed_capacity += observed[i].delta_q;
        const double cap_err = forecast.trajectory[i + 1] - observed_capacity;
        sum_cap += cap_err * cap_err;
    }
    m.rmse_dq = std::sqrt(sum_dq / double(observed.size()));
    m.rmse_capacity = std::sqrt(sum_cap / double(observed.size()));

    if (observed_eol_days && forecast.eol_days && !forecast.eol_unreachable) {
        const double t_hat = *observed_eol_days;
        const double t_pred = *forecast.eol_days;
        m.eol_error_pct = 100.0 * (t_hat - t_pred) / t_hat;
    }
    return m;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw Error("quantile: empty input");
    std::sort(values.begin(), values.end());
    const double h = (double(values.size()) - 1.0) * q;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = h - double(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

FleetSummary summarize(const std::vector<MetricTriple>& triples) {
    if (triples.empty()) throw Error("summarize: no forecasts");
    std::vector<double> rmse_dq, rmse_cap, abs_eol, signed_eol;
    for (const auto& t : triples) {
        rmse_dq.push_back(t.rmse_dq);
        rmse_cap.push_back(t.rmse_capacity);
        if (t.eol_error_pct) {
            abs_eol.push_back(std::abs(*t.eol_error_pct));
            signed_eol.push_back(*t.eol_error_pct);
        }
    }
    FleetSummary s;
    s.n_forecasts = triples.size();
    s.n_eol_scored = abs_eol.size();
    s.median_rmse_dq = quantile(rmse_dq, 0.5);
    s.p95_rmse_dq = quantile(rmse_dq, 0.95);
    s.median_rmse_capacity = quantile(rmse_cap, 0.5);
    s.p95_rmse_capacity = quantile(rmse_cap, 0.95);
    if (!abs_eol.empty()) {
        s.median_abs_eol_error = quantile(abs_eol, 0.5);
        s.p95_abs_eol_error = quantile(abs_eol, 0.95);
        s.median_signed_eol_error = quantile(signed_eol, 0.5);
    }
    return s;
}

}  // namespace soh
