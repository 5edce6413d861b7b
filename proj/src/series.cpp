#include "soh/series.hpp"

#include <cmath>
#include <cstdlib>

#include "soh/errors.hpp"

namespace soh {

double variable_value(const RawSample& s, Variable v) {
    switch (v) {
        case Variable::current: return s.current_a;
        case Variable::voltage: return s.voltage_v;
        case Variable::temperature: return s.temperature_c;
        case Variable::power: return s.current_a * s.voltage_v;
        case Variable::abs_current: return std::abs(s.current_a);
        case Variable::abs_power: return std::abs(s.current_a * s.voltage_v);
    }
    std::abort();
}

void CellSeries::validate() const {
    if (nominal_ah <= 0.0)
        throw DataError("cell " + cell_id + ": nominal capacity must be positive");
    if (capacities.size() < 2)
        throw DataError("cell " + cell_id + ": needs at least two capacity observations");
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (!(samples[i].time_s > samples[i - 1].time_s))
            throw DataError("cell " + cell_id + ": non-monotonic time in samples");
    }
    for (std::size_t i = 1; i < capacities.size(); ++i) {
        if (!(capacities[i].time_s > capacities[i - 1].time_s))
            throw DataError("cell " + cell_id + ": non-monotonic time in capacities");
    }
    for (const auto& s : samples) {
        if (!std::isfinite(s.voltage_v) || s.voltage_v <= 0.0)
            throw DataError("cell " + cell_id + ": voltage must be finite and positive");
    }
    for (const auto& c : capacities) {
        if (!(c.capacity_ah > 0.0))
            throw DataError("cell " + cell_id + ": capacity must be positive");
    }
}

double capacity_at(const CellSeries& cell, double time_s) {
    const auto& obs = cell.capacities;
    if (obs.empty()) throw DataError("cell " + cell.cell_id + ": no capacity observations");
    double best = obs.front().capacity_ah;
    double best_dist = std::abs(obs.front().time_s - time_s);
    for (const auto& o : obs) {
        const double dist = std::abs(o.time_s - time_s);
        if (dist < best_dist) {
            best_dist = dist;
            best = o.capacity_ah;
        }
    }
    return best;
}

double true_eol_days(const CellSeries& cell) {
    const double threshold = kEolFraction * cell.nominal_ah;
    const auto& obs = cell.capacities;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (obs[i].capacity_ah <= threshold) {
            if (i == 0 || obs[i].capacity_ah == threshold)
                return obs[i].time_s / kSecondsPerDay;
            // Interpolate within the bracketing pair.
            const auto& lo = obs[i - 1];
            const auto& hi = obs[i];
            const double frac = (lo.capacity_ah - threshold) / (lo.capacity_ah - hi.capacity_ah);
            return (lo.time_s + frac * (hi.time_s - lo.time_s)) / kSecondsPerDay;
        }
    }
    throw DataError("censored cell " + cell.cell_id + ": capacity never reaches 80% of nominal");
}

bool is_censored(const CellSeries& cell) {
    const double threshold = kEolFraction * cell.nominal_ah;
    for (const auto& o : cell.capacities)
        if (o.capacity_ah <= threshold) return false;
    return true;
}

}  // namespace soh
