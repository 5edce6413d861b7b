#include "soh/free_search.hpp"

#include <algorithm>
#include <cmath>

#include "soh/nelder_mead.hpp"

namespace soh {

BreakSet free_search_breaks(const std::vector<IntervalRecord>& records,
                            const SelectionResult& selection, std::size_t k,
                            const BlrPrior& prior, const SmootherConfig& smoother) {
    BreakSet out;
    out.method = SplitMethod::free_search;
    out.feature_id = static_cast<int>(selection.splitting_feature());
    if (k == 0) return out;

    const std::vector<double> x = feature_column(records, selection.splitting_feature());
    const std::vector<double> dq = delta_q_column(records);
    const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
    const double lo = *lo_it, hi = *hi_it;

    std::vector<double> init = curvature_breaks(x, dq, smoother, k).values;
    if (init.size() != k) {
        init.resize(k);
        for (std::size_t i = 0; i < k; ++i)
            init[i] = lo + (hi - lo) * double(i + 1) / double(k + 1);
    }

    auto objective = [&](const std::vector<double>& candidate) {
        BreakSet trial;
        trial.feature_id = out.feature_id;
        trial.method = SplitMethod::free_search;
        trial.values = candidate;
        std::sort(trial.values.begin(), trial.values.end());
        for (double& b : trial.values) b = std::clamp(b, lo, hi);
        const PiecewiseModel model = fit_piecewise(records, selection, trial, prior);
        return model_rmse_dq(model, records);
    };

    NelderMeadOptions opts;
    opts.max_iter = 200 * static_cast<int>(k);
    opts.initial_step_abs = 0.05 * (hi - lo);
    const NelderMeadResult result = nelder_mead(objective, init, opts);

    out.values = result.x;
    std::sort(out.values.begin(), out.values.end());
    for (double& b : out.values) b = std::clamp(b, lo, hi);
    // Collapse coincident breaks rather than emit a non-increasing set.
    out.values.erase(std::unique(out.values.begin(), out.values.end()), out.values.end());
    return out;
}

}  // namespace soh
