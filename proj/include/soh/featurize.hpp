#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "soh/series.hpp"

namespace soh {

inline constexpr std::size_t kRegionPairCount = 6;
inline constexpr std::size_t kOccupancyFeatureCount = kVariableCount * kRegionPairCount;  // 36
inline constexpr std::size_t kFeatureCount = 2 * kOccupancyFeatureCount + 2;              // 74
inline constexpr std::size_t kTimeFeature = 2 * kOccupancyFeatureCount;        // elapsed days
inline constexpr std::size_t kSqrtTimeFeature = kTimeFeature + 1;

/// Threshold pairs defining the six regions per variable, as 1-based
/// percentile ids over {1st, 33rd, 67th, 99th}.
inline constexpr std::array<std::array<int, 2>, kRegionPairCount> kRegionPairs = {
    {{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}}};

/// Per-variable thresholds at the 1st, 33rd, 67th and 99th time-weighted
/// percentiles of fleet usage.
struct PercentileBounds {
    std::array<std::array<double, 4>, kVariableCount> thresholds{};

    double lower(Variable v, std::size_t pair) const {
        return thresholds[static_cast<int>(v)][kRegionPairs[pair][0] - 1];
    }
    double upper(Variable v, std::size_t pair) const {
        return thresholds[static_cast<int>(v)][kRegionPairs[pair][1] - 1];
    }
};

struct FeatureDescriptor {
    enum class Kind { occupancy, difference, time, sqrt_time };
    std::string name;
    Kind kind;
    int variable = -1;   // for occupancy/difference
    int pair = -1;       // index into kRegionPairs
};

/// The 74 candidate features in catalog order: 36 occupancies (variable-major,
/// pair order as in kRegionPairs), their 36 first differences, elapsed days
/// and its square root.
const std::vector<FeatureDescriptor>& feature_catalog();

const std::string& feature_name(std::size_t index);

/// Index of the occupancy feature for (variable, percentile id pair).
std::size_t occupancy_index(Variable v, int lo_percentile_id, int hi_percentile_id);

struct IntervalRecord {
    std::string cell_id;
    int interval_index = 0;
    std::array<double, kFeatureCount> features{};
    double delta_q = 0.0;  // % of nominal capacity, signed
};

/// Fleet-wide time-weighted percentile thresholds. Each sample's value is
/// weighted by the time until the next sample of the same cell; a threshold
/// at percentile p is the smallest value at or below which the fleet spends
/// at least p percent of its total duration.
PercentileBounds compute_bounds(const std::vector<CellSeries>& cells);

/// Splits one cell into consecutive whole intervals and emits a record per
/// interval. Occupancies are time fractions within [lower, upper) threshold
/// regions; differences subtract the previous interval (zero for the first);
/// delta_q is the capacity change over the interval as % of nominal, with
/// capacity read from the nearest observation in time. Partial trailing
/// intervals are dropped.
std::vector<IntervalRecord> featurize(const CellSeries& cell, const PercentileBounds& bounds,
                                      double interval_hours = 12.0);

/// Feature matrix CSV: `cell_id,interval,<74 names>,delta_q`.
void export_records_csv(const std::vector<IntervalRecord>& records, const std::string& path);
std::vector<IntervalRecord> import_records_csv(const std::string& path);

}  // namespace soh
