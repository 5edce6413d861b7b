#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "soh/featurize.hpp"

namespace soh {

struct SelectionConfig {
    std::size_t n_features = 5;
    double rho_max = 0.85;
};

/// Sample Pearson correlation. Constant vectors are defined to correlate 0
/// so degenerate features rank last instead of poisoning the sort.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct SelectionTraceEntry {
    std::size_t candidate = 0;
    std::size_t blocked_by = 0;
    double rho = 0.0;  // |correlation| with the blocking feature
};

struct SelectionResult {
    /// Catalog indices in selection order; the first is the splitting feature.
    std::vector<std::size_t> ids;
    /// Correlation with delta_q, aligned with `ids`.
    std::vector<double> rho_dq;
    /// Full feature-feature correlation matrix, row-major kFeatureCount^2.
    std::vector<double> correlation;
    /// Set when fewer than the requested number of features were selectable.
    bool truncated = false;
    std::vector<SelectionTraceEntry> skipped;

    std::size_t splitting_feature() const { return ids.front(); }
    double rho(std::size_t a, std::size_t b) const {
        return correlation[a * kFeatureCount + b];
    }
};

/// Greedy selection by descending |pearson(feature, delta_q)|, skipping any
/// candidate whose |correlation| with an already selected feature exceeds
/// rho_max. Ties break on catalog order.
SelectionResult select_features(const std::vector<IntervalRecord>& records,
                                const SelectionConfig& cfg);

/// JSON report with selected names, correlations and the constraint trace.
void export_selection_json(const SelectionResult& result, const std::string& path);

/// Column `feature` over the records, in record order.
std::vector<double> feature_column(const std::vector<IntervalRecord>& records,
                                   std::size_t feature);
std::vector<double> delta_q_column(const std::vector<IntervalRecord>& records);

}  // namespace soh
