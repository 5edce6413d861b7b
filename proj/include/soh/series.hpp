#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace soh {

/// One raw measurement. Power and the absolute variants are derived on
/// demand, never stored.
struct RawSample {
    double time_s = 0.0;
    double current_a = 0.0;
    double voltage_v = 0.0;
    double temperature_c = 0.0;
};

struct CapacityObservation {
    double time_s = 0.0;
    double capacity_ah = 0.0;
};

/// The six usage variables feature regions are defined over.
enum class Variable : int {
    current = 0,
    voltage = 1,
    temperature = 2,
    power = 3,
    abs_current = 4,
    abs_power = 5,
};

inline constexpr std::size_t kVariableCount = 6;

inline constexpr std::array<const char*, kVariableCount> kVariableNames = {
    "I", "V", "T", "P", "absI", "absP"};

double variable_value(const RawSample& s, Variable v);

struct CellSeries {
    std::string cell_id;
    std::vector<RawSample> samples;
    std::vector<CapacityObservation> capacities;
    double nominal_ah = 0.0;

    /// Throws DataError on non-monotonic time, non-positive nominal
    /// capacity, or fewer than two capacity observations.
    void validate() const;
};

/// Capacity at an arbitrary time, taken from the nearest observation.
double capacity_at(const CellSeries& cell, double time_s);

constexpr double kEolFraction = 0.8;
constexpr double kSecondsPerDay = 86400.0;

/// First time the capacity sequence reaches 80% of nominal, linearly
/// interpolated between the bracketing observations, in days. Throws
/// DataError("censored cell ...") when the threshold is never reached.
double true_eol_days(const CellSeries& cell);

bool is_censored(const CellSeries& cell);

}  // namespace soh
