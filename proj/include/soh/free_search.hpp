#pragma once

#include <cstddef>
#include <vector>

#include "soh/regress.hpp"

namespace soh {

/// Unconstrained simplex search over k break positions, initialized at the
/// curvature solution (uniform quantiles when that yields fewer breaks).
/// Candidates are evaluated with their breaks sorted, so order constraints
/// hold by construction; the objective is the training RMSE of the piecewise
/// fit. The returned objective never exceeds the initialization's.
BreakSet free_search_breaks(const std::vector<IntervalRecord>& records,
                            const SelectionResult& selection, std::size_t k,
                            const BlrPrior& prior, const SmootherConfig& smoother = {});

}  // namespace soh
