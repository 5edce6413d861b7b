#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "soh/series.hpp"

namespace soh {

struct SyntheticSpec {
    std::size_t n_cells = 157;
    double interval_hours = 12.0;
    double noise_std = 0.05;  // % capacity per interval
    double knee_onset_lo = 0.5;  // knee position as a fraction of life
    double knee_onset_hi = 0.8;
    std::uint64_t rng_seed = 1;

    void validate() const;
};

struct SegmentTruth {
    double intercept = 0.0;
    double slope = 0.0;
};

struct CellTruth {
    std::string cell_id;
    double z_start = 0.0;             // initial mid-band dwell fraction
    double decline_per_interval = 0.0;
    double gamma = 0.0;               // high-band share of the non-driving dwell
    double charge_intensity = 0.0;
    double knee_fraction_target = 0.0;
    double knee_fraction_actual = 0.0;
    int knee_interval = 0;            // first interval in the steep regime
    double analytic_eol_days = 0.0;   // noiseless 80% crossing
    int n_intervals = 0;              // intervals actually generated (with noise)
};

/// The generating model: delta_q is a continuous two-piece linear function
/// of the mid-band voltage dwell fraction, with the steep regime below the
/// knee. The dwell fraction is realized exactly as the V_2_3 occupancy
/// because every voltage trace takes only the four listed level values.
struct GroundTruth {
    double knee_value = 0.0;      // break point in splitting-feature units
    SegmentTruth above_knee;      // applies for feature >= knee_value
    SegmentTruth below_knee;
    double z_floor = 0.0;
    std::array<double, 4> voltage_levels{};
    double nominal_ah = 0.0;
    double interval_hours = 0.0;
    double noise_std = 0.0;
    std::vector<CellTruth> cells;

    double delta_q_at(double feature_value) const {
        const SegmentTruth& seg = feature_value >= knee_value ? above_knee : below_knee;
        return seg.intercept + seg.slope * feature_value;
    }
};

struct SyntheticFleet {
    std::vector<CellSeries> cells;
    GroundTruth truth;
};

/// Deterministic synthetic degradation corpus. Each cell cycles through
/// voltage/current level dwells whose mid-band share declines linearly over
/// life; capacity decrements follow the ground-truth model of that share
/// plus Gaussian noise, and cells run until they cross 80% of nominal.
SyntheticFleet generate_synthetic(const SyntheticSpec& spec);

/// Planned dwell fraction of one cell at an interval index.
double truth_feature_at(const GroundTruth& truth, const CellTruth& cell, int interval_index);

void export_ground_truth_json(const GroundTruth& truth, const std::string& path);

}  // namespace soh
