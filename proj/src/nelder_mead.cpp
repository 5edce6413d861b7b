#include "soh/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace soh {

namespace {

struct Vertex {
    std::vector<double> x;
    double fx;
};

std::vector<double> weighted_sum(const std::vector<double>& a, double wa,
                                 const std::vector<double>& b, double wb) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = wa * a[i] + wb * b[i];
    return out;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, const NelderMeadOptions& opts) {
    const std::size_t n = x0.size();
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    std::vector<Vertex> simplex;
    simplex.push_back({x0, f(x0)});
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x = x0;
        const double step =
            std::abs(x[i]) > 1e-12 ? opts.initial_step * std::abs(x[i]) : opts.initial_step_abs;
        x[i] += step;
        simplex.push_back({x, f(x)});
    }

    Vertex best = *std::min_element(simplex.begin(), simplex.end(),
                                    [](const Vertex& a, const Vertex& b) { return a.fx < b.fx; });

    auto consider = [&best](const Vertex& v) {
        if (v.fx < best.fx) best = v;
    };

    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        std::sort(simplex.begin(), simplex.end(),
                  [](const Vertex& a, const Vertex& b) { return a.fx < b.fx; });

        const double f_spread = std::abs(simplex.back().fx - simplex.front().fx);
        double x_spread = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            x_spread = std::max(x_spread, std::abs(simplex.back().x[i] - simplex.front().x[i]));
        if (f_spread <= opts.f_tol && x_spread <= opts.x_tol) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t v = 0; v + 1 < simplex.size(); ++v)
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v].x[i] / double(n);

        const Vertex& worst = simplex.back();
        Vertex reflected{weighted_sum(centroid, 1.0 + alpha, worst.x, -alpha), 0.0};
        reflected.fx = f(reflected.x);
        consider(reflected);

        if (reflected.fx < simplex.front().fx) {
            Vertex expanded{weighted_sum(centroid, 1.0 - gamma, reflected.x, gamma), 0.0};
            expanded.fx = f(expanded.x);
            consider(expanded);
            simplex.back() = expanded.fx < reflected.fx ? expanded : reflected;
            continue;
        }
        if (reflected.fx < simplex[simplex.size() - 2].fx) {
            simplex.back() = reflected;
            continue;
        }

        Vertex contracted{weighted_sum(centroid, 1.0 - rho, worst.x, rho), 0.0};
        contracted.fx = f(contracted.x);
        consider(contracted);
        if (contracted.fx < worst.fx) {
            simplex.back() = contracted;
            continue;
        }

        for (std::size_t v = 1; v < simplex.size(); ++v) {
            simplex[v].x = weighted_sum(simplex.front().x, 1.0 - sigma, simplex[v].x, sigma);
            simplex[v].fx = f(simplex[v].x);
            consider(simplex[v]);
        }
    }

    return {best.x, best.fx, iter};
}

}  // namespace soh
