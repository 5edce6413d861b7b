#include "soh/select.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "soh/errors.hpp"

namespace soh {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw Error("pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw Error("pearson: needs at least two points");

    const double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
    const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> feature_column(const std::vector<IntervalRecord>& records,
                                   std::size_t feature) {
    std::vector<double> col(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) col[i] = records[i].features[feature];
    return col;
}

std::vector<double> delta_q_column(const std::vector<IntervalRecord>& records) {
    std::vector<double> col(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) col[i] = records[i].delta_q;
    return col;
}

SelectionResult select_features(const std::vector<IntervalRecord>& records,
                                const SelectionConfig& cfg) {
    if (records.size() < 2) throw DataError("select_features: needs at least two records");
    if (cfg.n_features < 1 || cfg.n_features > kFeatureCount)
        throw ConfigError("select_features: n_features out of range");
    if (!(cfg.rho_max > 0.0 && cfg.rho_max <= 1.0))
        throw ConfigError("select_features: rho_max must be in (0, 1]");

    const std::size_t n = records.size();
    std::vector<std::vector<double>> columns(kFeatureCount);
    for (std::size_t f = 0; f < kFeatureCount; ++f) columns[f] = feature_column(records, f);
    const std::vector<double> dq = delta_q_column(records);
    (void)n;

    SelectionResult result;
    result.correlation.assign(kFeatureCount * kFeatureCount, 0.0);
    std::vector<double> rho_target(kFeatureCount);
    for (std::size_t f = 0; f < kFeatureCount; ++f) rho_target[f] = pearson(columns[f], dq);
    for (std::size_t a = 0; a < kFeatureCount; ++a) {
        result.correlation[a * kFeatureCount + a] = 1.0;
        for (std::size_t b = a + 1; b < kFeatureCount; ++b) {
            const double r = pearson(columns[a], columns[b]);
            result.correlation[a * kFeatureCount + b] = r;
            result.correlation[b * kFeatureCount + a] = r;
        }
    }

    std::vector<std::size_t> order(kFeatureCount);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(rho_target[a]) > std::abs(rho_target[b]);
    });

    for (std::size_t candidate : order) {
        if (result.ids.size() == cfg.n_features) break;
        bool blocked = false;
        for (std::size_t chosen : result.ids) {
            const double r = std::abs(result.correlation[candidate * kFeatureCount + chosen]);
            if (r > cfg.rho_max) {
                result.skipped.push_back({candidate, chosen, r});
                blocked = true;
                break;
            }
        }
        if (!blocked) {
            result.ids.push_back(candidate);
            result.rho_dq.push_back(rho_target[candidate]);
        }
    }
    result.truncated = result.ids.size() < cfg.n_features;
    return result;
}

void export_selection_json(const SelectionResult& result, const std::string& path) {
    nlohmann::json doc;
    doc["selected"] = nlohmann::json::array();
    for (std::size_t i = 0; i < result.ids.size(); ++i) {
        doc["selected"].push_back({{"index", result.ids[i]},
                                   {"name", feature_name(result.ids[i])},
                                   {"rho_delta_q", result.rho_dq[i]}});
    }
    doc["truncated"] = result.truncated;
    doc["skipped"] = nlohmann::json::array();
    for (const auto& entry : result.skipped) {
        doc["skipped"].push_back({{"candidate", feature_name(entry.candidate)},
                                  {"blocked_by", feature_name(entry.blocked_by)},
                                  {"abs_rho", entry.rho}});
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << doc.dump(2) << '\n';
}

}  // namespace soh
