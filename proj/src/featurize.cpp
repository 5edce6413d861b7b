#include "soh/featurize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "soh/csv_io.hpp"
#include "soh/errors.hpp"

namespace soh {

namespace {

std::vector<FeatureDescriptor> build_catalog() {
    std::vector<FeatureDescriptor> catalog;
    catalog.reserve(kFeatureCount);
    for (std::size_t v = 0; v < kVariableCount; ++v) {
        for (std::size_t p = 0; p < kRegionPairCount; ++p) {
            FeatureDescriptor d;
            d.name = std::string(kVariableNames[v]) + "_" + std::to_string(kRegionPairs[p][0]) +
                     "_" + std::to_string(kRegionPairs[p][1]);
            d.kind = FeatureDescriptor::Kind::occupancy;
            d.variable = static_cast<int>(v);
            d.pair = static_cast<int>(p);
            catalog.push_back(std::move(d));
        }
    }
    for (std::size_t i = 0; i < kOccupancyFeatureCount; ++i) {
        FeatureDescriptor d = catalog[i];
        d.name = "d" + d.name;
        d.kind = FeatureDescriptor::Kind::difference;
        catalog.push_back(std::move(d));
    }
    catalog.push_back({"t_days", FeatureDescriptor::Kind::time, -1, -1});
    catalog.push_back({"sqrt_t_days", FeatureDescriptor::Kind::sqrt_time, -1, -1});
    return catalog;
}

constexpr std::array<double, 4> kPercentiles = {0.01, 0.33, 0.67, 0.99};

}  // namespace

const std::vector<FeatureDescriptor>& feature_catalog() {
    static const std::vector<FeatureDescriptor> catalog = build_catalog();
    return catalog;
}

const std::string& feature_name(std::size_t index) { return feature_catalog()[index].name; }

std::size_t occupancy_index(Variable v, int lo_percentile_id, int hi_percentile_id) {
    for (std::size_t p = 0; p < kRegionPairCount; ++p) {
        if (kRegionPairs[p][0] == lo_percentile_id && kRegionPairs[p][1] == hi_percentile_id)
            return static_cast<std::size_t>(v) * kRegionPairCount + p;
    }
    throw Error("no such region pair");
}

PercentileBounds compute_bounds(const std::vector<CellSeries>& cells) {
    bool any_samples = false;
    for (const auto& c : cells) any_samples = any_samples || c.samples.size() > 1;
    if (!any_samples) throw DataError("compute_bounds: empty fleet");

    PercentileBounds bounds;
    std::vector<std::pair<double, double>> weighted;  // (value, duration)
    for (std::size_t v = 0; v < kVariableCount; ++v) {
        weighted.clear();
        double total = 0.0;
        for (const auto& cell : cells) {
            for (std::size_t i = 0; i + 1 < cell.samples.size(); ++i) {
                const double dur = cell.samples[i + 1].time_s - cell.samples[i].time_s;
                weighted.emplace_back(variable_value(cell.samples[i], Variable(v)), dur);
                total += dur;
            }
        }
        std::sort(weighted.begin(), weighted.end());
        std::size_t cursor = 0;
        double cum = 0.0;
        for (std::size_t p = 0; p < kPercentiles.size(); ++p) {
            const double target = kPercentiles[p] * total;
            while (cursor < weighted.size() && cum + weighted[cursor].second < target) {
                cum += weighted[cursor].second;
                ++cursor;
            }
            const std::size_t idx = std::min(cursor, weighted.size() - 1);
            bounds.thresholds[v][p] = weighted[idx].first;
        }
    }
    return bounds;
}

std::vector<IntervalRecord> featurize(const CellSeries& cell, const PercentileBounds& bounds,
                                      double interval_hours) {
    if (interval_hours <= 0.0) throw ConfigError("interval_hours must be positive");
    std::vector<IntervalRecord> records;
    if (cell.samples.size() < 2) return records;

    const double interval_s = interval_hours * 3600.0;
    const double start = cell.samples.front().time_s;
    const double coverage = cell.samples.back().time_s - start;
    const std::size_t n_intervals = static_cast<std::size_t>(std::floor(coverage / interval_s));
    if (n_intervals == 0) return records;

    records.reserve(n_intervals);
    std::array<double, kOccupancyFeatureCount> prev_occupancy{};
    std::size_t seg = 0;  // first sample segment that can overlap the interval

    for (std::size_t k = 0; k < n_intervals; ++k) {
        const double lo = start + double(k) * interval_s;
        const double hi = lo + interval_s;

        std::array<double, kOccupancyFeatureCount> occupancy{};
        while (seg + 1 < cell.samples.size() && cell.samples[seg + 1].time_s <= lo) ++seg;
        for (std::size_t i = seg; i + 1 < cell.samples.size(); ++i) {
            const double seg_lo = std::max(cell.samples[i].time_s, lo);
            const double seg_hi = std::min(cell.samples[i + 1].time_s, hi);
            if (seg_hi <= seg_lo) {
                if (cell.samples[i].time_s >= hi) break;
                continue;
            }
            const double dur = seg_hi - seg_lo;
            for (std::size_t v = 0; v < kVariableCount; ++v) {
                const double value = variable_value(cell.samples[i], Variable(v));
                for (std::size_t p = 0; p < kRegionPairCount; ++p) {
                    if (value >= bounds.lower(Variable(v), p) &&
                        value < bounds.upper(Variable(v), p))
                        occupancy[v * kRegionPairCount + p] += dur;
                }
            }
        }

        IntervalRecord rec;
        rec.cell_id = cell.cell_id;
        rec.interval_index = static_cast<int>(k);
        for (std::size_t f = 0; f < kOccupancyFeatureCount; ++f) {
            rec.features[f] = occupancy[f] / interval_s;
            rec.features[kOccupancyFeatureCount + f] =
                k == 0 ? 0.0 : rec.features[f] - prev_occupancy[f];
        }
        const double elapsed_days = (hi - start) / kSecondsPerDay;
        rec.features[kTimeFeature] = elapsed_days;
        rec.features[kSqrtTimeFeature] = std::sqrt(elapsed_days);

        const double q_start = capacity_at(cell, lo);
        const double q_end = capacity_at(cell, hi);
        rec.delta_q = (q_end - q_start) / cell.nominal_ah * 100.0;

        for (std::size_t f = 0; f < kOccupancyFeatureCount; ++f)
            prev_occupancy[f] = rec.features[f];
        records.push_back(std::move(rec));
    }
    return records;
}

void export_records_csv(const std::vector<IntervalRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << "cell_id,interval";
    for (std::size_t f = 0; f < kFeatureCount; ++f) out << ',' << feature_name(f);
    out << ",delta_q\n";
    for (const auto& rec : records) {
        out << rec.cell_id << ',' << rec.interval_index;
        for (std::size_t f = 0; f < kFeatureCount; ++f) out << ',' << format_double(rec.features[f]);
        out << ',' << format_double(rec.delta_q) << '\n';
    }
}

std::vector<IntervalRecord> import_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("file " + path + ": empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);
    if (header.size() != kFeatureCount + 3 || header[0] != "cell_id" ||
        header.back() != "delta_q")
        throw SchemaError("file " + path + ": unexpected feature matrix header");

    std::vector<IntervalRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != kFeatureCount + 3)
            throw ParseError("expected " + std::to_string(kFeatureCount + 3) + " fields", line_no);
        IntervalRecord rec;
        rec.cell_id = fields[0];
        try {
            rec.interval_index = std::stoi(fields[1]);
        } catch (const std::exception&) {
            throw ParseError("malformed interval index '" + fields[1] + "'", line_no);
        }
        auto num = [&](const std::string& s) {
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || ptr != s.data() + s.size())
                throw ParseError("malformed numeric field '" + s + "'", line_no);
            return v;
        };
        for (std::size_t f = 0; f < kFeatureCount; ++f) rec.features[f] = num(fields[2 + f]);
        rec.delta_q = num(fields.back());
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace soh
