#pragma once

#include <functional>
#include <vector>

namespace soh {

struct NelderMeadOptions {
    int max_iter = 400;
    double f_tol = 1e-12;
    double x_tol = 1e-10;
    /// Relative size of the initial simplex edges; absolute fallback for
    /// coordinates near zero.
    double initial_step = 0.05;
    double initial_step_abs = 0.01;
};

struct NelderMeadResult {
    std::vector<double> x;
    double fx = 0.0;
    int iterations = 0;
};

/// Derivative-free simplex minimization. The returned point is the best
/// ever evaluated, so the result never exceeds the objective at `x0`.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0,
                             const NelderMeadOptions& opts = {});

}  // namespace soh
