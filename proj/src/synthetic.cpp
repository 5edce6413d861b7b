#include "soh/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "soh/errors.hpp"
#include "soh/rng.hpp"

namespace soh {

namespace {

// Degradation model constants. The regimes are continuous at the knee and
// calibrated so that lives land between 15 and 40 days at 12 h intervals
// for the default knee-onset range.
constexpr double kKnee = 0.40;
constexpr double kSlowSlope = 1.4;
constexpr double kSlowIntercept = -0.98;  // -0.42 %/interval at the knee
constexpr double kSteepSlope = 6.2;
constexpr double kSteepIntercept = -2.90;
constexpr double kZFloor = 0.20;
constexpr double kNominalAh = 1.1;

constexpr std::array<double, 4> kVoltageLevels = {2.55, 2.95, 3.35, 3.75};
constexpr double kRestCurrent = 0.05;
constexpr double kDischarge1 = -1.2;
constexpr double kDischarge2 = -3.8;

double truth_dq(double z) {
    const bool slow = z >= kKnee;
    return slow ? kSlowIntercept + kSlowSlope * z : kSteepIntercept + kSteepSlope * z;
}

double z_at(double z_start, double rate, int interval) {
    return std::max(z_start - rate * double(interval), kZFloor);
}

/// Noiseless life in intervals and the knee interval for a candidate rate.
struct NoiselessRun {
    int n_intervals = 0;
    int knee_interval = 0;
    double eol_days = 0.0;
};

NoiselessRun simulate_noiseless(double z_start, double rate, double interval_days) {
    NoiselessRun run;
    double q = 100.0;
    int knee = -1;
    int i = 0;
    for (; i < 100000; ++i) {
        const double z = z_at(z_start, rate, i);
        if (knee < 0 && z < kKnee) knee = i;
        const double next = q + truth_dq(z);
        if (next <= 80.0) {
            run.eol_days = (double(i) + (q - 80.0) / (q - next)) * interval_days;
            q = next;
            ++i;
            break;
        }
        q = next;
    }
    run.n_intervals = i;
    run.knee_interval = knee < 0 ? i : knee;
    return run;
}

/// Rate whose knee lands at the target fraction of life; the fraction is
/// decreasing in the rate, so bisection applies.
double solve_rate(double z_start, double knee_fraction_target, double interval_days) {
    auto fraction = [&](double rate) {
        const NoiselessRun run = simulate_noiseless(z_start, rate, interval_days);
        if (run.knee_interval >= run.n_intervals) return 1.0;
        return double(run.knee_interval) / double(run.n_intervals);
    };
    double lo = 5e-4, hi = 5e-2;
    if (fraction(hi) >= knee_fraction_target) return hi;
    if (fraction(lo) <= knee_fraction_target) return lo;
    for (int iter = 0; iter < 60; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (fraction(mid) > knee_fraction_target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

void SyntheticSpec::validate() const {
    if (n_cells < 1) throw ConfigError("synthetic: n_cells must be >= 1");
    if (!(interval_hours > 0.0)) throw ConfigError("synthetic: interval_hours must be positive");
    if (noise_std < 0.0) throw ConfigError("synthetic: noise_std must be >= 0");
    if (!(knee_onset_lo >= 0.0 && knee_onset_lo < knee_onset_hi && knee_onset_hi <= 1.0))
        throw ConfigError("synthetic: knee onset range must satisfy 0 <= lo < hi <= 1");
}

double truth_feature_at(const GroundTruth&, const CellTruth& cell, int interval_index) {
    return z_at(cell.z_start, cell.decline_per_interval, interval_index);
}

SyntheticFleet generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.rng_seed);

    SyntheticFleet fleet;
    GroundTruth& truth = fleet.truth;
    truth.knee_value = kKnee;
    truth.above_knee = {kSlowIntercept, kSlowSlope};
    truth.below_knee = {kSteepIntercept, kSteepSlope};
    truth.z_floor = kZFloor;
    truth.voltage_levels = kVoltageLevels;
    truth.nominal_ah = kNominalAh;
    truth.interval_hours = spec.interval_hours;
    truth.noise_std = spec.noise_std;

    const double interval_s = spec.interval_hours * 3600.0;
    const double interval_days = spec.interval_hours / 24.0;

    for (std::size_t c = 0; c < spec.n_cells; ++c) {
        CellTruth cell;
        cell.cell_id = "synth" + std::to_string(c);
        cell.charge_intensity = rng.uniform();
        cell.gamma = rng.uniform(0.55, 0.75);
        const double phi = rng.uniform(0.0, 2.0 * M_PI);
        const double psi = rng.uniform(0.0, 2.0 * M_PI);
        cell.z_start = rng.uniform(0.54, 0.62);
        cell.knee_fraction_target = rng.uniform(spec.knee_onset_lo, spec.knee_onset_hi);
        cell.decline_per_interval =
            solve_rate(cell.z_start, cell.knee_fraction_target, interval_days);

        const NoiselessRun noiseless =
            simulate_noiseless(cell.z_start, cell.decline_per_interval, interval_days);
        cell.analytic_eol_days = noiseless.eol_days;
        cell.knee_interval = noiseless.knee_interval;
        cell.knee_fraction_actual =
            noiseless.knee_interval >= noiseless.n_intervals
                ? 1.0
                : double(noiseless.knee_interval) / double(noiseless.n_intervals);

        // Noisy capacity walk until the 80% crossing (bounded overrun).
        std::vector<double> q_pct = {100.0};
        const int cap = noiseless.n_intervals + 60;
        for (int i = 0; i < cap; ++i) {
            const double z = z_at(cell.z_start, cell.decline_per_interval, i);
            double dq = truth_dq(z);
            if (spec.noise_std > 0.0) dq += rng.normal(0.0, spec.noise_std);
            q_pct.push_back(q_pct.back() + dq);
            if (q_pct.back() <= 80.0) break;
        }
        const int n_intervals = static_cast<int>(q_pct.size()) - 1;
        cell.n_intervals = n_intervals;

        CellSeries series;
        series.cell_id = cell.cell_id;
        series.nominal_ah = kNominalAh;
        series.capacities.reserve(q_pct.size());
        for (std::size_t k = 0; k < q_pct.size(); ++k)
            series.capacities.push_back(
                {double(k) * interval_s, q_pct[k] * kNominalAh / 100.0});

        // Level-dwell trace: one low-voltage rest then three identical
        // subcycles of mid/high dwells. Values sit exactly on the level
        // constants, so occupancies are exact duration ratios.
        series.samples.reserve(std::size_t(n_intervals) * 10 + 1);
        for (int i = 0; i < n_intervals; ++i) {
            const double t0 = double(i) * interval_s;
            const double z = z_at(cell.z_start, cell.decline_per_interval, i);
            const double c0 = 0.018 + 0.006 * std::sin(0.7 * double(i) + phi);
            const double rest = 1.0 - c0 - z;

            double fractions[10];
            double volts[10];
            fractions[0] = c0;
            volts[0] = kVoltageLevels[0];
            for (int s = 0; s < 3; ++s) {
                fractions[1 + 3 * s] = z / 3.0;
                volts[1 + 3 * s] = kVoltageLevels[1];
                fractions[2 + 3 * s] = rest * cell.gamma / 3.0;
                volts[2 + 3 * s] = kVoltageLevels[2];
                fractions[3 + 3 * s] = rest * (1.0 - cell.gamma) / 3.0;
                volts[3 + 3 * s] = kVoltageLevels[3];
            }

            const double charge = 1.8 + 0.8 * cell.charge_intensity;
            const double currents[4] = {kRestCurrent, charge, kDischarge1, kDischarge2};
            double t = t0;
            for (int seg = 0; seg < 10; ++seg) {
                RawSample sample;
                sample.time_s = t;
                sample.voltage_v = volts[seg];
                sample.current_a = currents[(i + seg) % 4];
                sample.temperature_c = 29.5 + 2.5 * std::abs(sample.current_a) / 3.8 +
                                       0.6 * std::sin(0.3 * double(i) + psi) +
                                       0.5 * cell.charge_intensity;
                series.samples.push_back(sample);
                t += fractions[seg] * interval_s;
            }
        }
        RawSample terminal;
        terminal.time_s = double(n_intervals) * interval_s;
        terminal.voltage_v = kVoltageLevels[0];
        terminal.current_a = kRestCurrent;
        terminal.temperature_c = 29.5;
        series.samples.push_back(terminal);

        series.validate();
        fleet.cells.push_back(std::move(series));
        truth.cells.push_back(std::move(cell));
    }
    return fleet;
}

void export_ground_truth_json(const GroundTruth& truth, const std::string& path) {
    nlohmann::json doc;
    doc["knee_value"] = truth.knee_value;
    doc["above_knee"] = {{"intercept", truth.above_knee.intercept},
                         {"slope", truth.above_knee.slope}};
    doc["below_knee"] = {{"intercept", truth.below_knee.intercept},
                         {"slope", truth.below_knee.slope}};
    doc["z_floor"] = truth.z_floor;
    doc["voltage_levels"] = truth.voltage_levels;
    doc["nominal_ah"] = truth.nominal_ah;
    doc["interval_hours"] = truth.interval_hours;
    doc["noise_std"] = truth.noise_std;
    doc["cells"] = nlohmann::json::array();
    for (const auto& c : truth.cells) {
        doc["cells"].push_back({{"cell_id", c.cell_id},
                                {"z_start", c.z_start},
                                {"decline_per_interval", c.decline_per_interval},
                                {"gamma", c.gamma},
                                {"charge_intensity", c.charge_intensity},
                                {"knee_fraction_target", c.knee_fraction_target},
                                {"knee_fraction_actual", c.knee_fraction_actual},
                                {"knee_interval", c.knee_interval},
                                {"analytic_eol_days", c.analytic_eol_days},
                                {"n_intervals", c.n_intervals}});
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << doc.dump(2) << '\n';
}

}  // namespace soh
