#include "soh/segment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "soh/csv_io.hpp"
#include "soh/errors.hpp"
#include "soh/rng.hpp"

namespace soh {

const char* split_method_name(SplitMethod m) {
    switch (m) {
        case SplitMethod::curvature: return "curvature";
        case SplitMethod::kmeans: return "kmeans";
        case SplitMethod::free_search: return "free-search";
    }
    return "?";
}

SplitMethod split_method_from_name(const std::string& name) {
    if (name == "curvature") return SplitMethod::curvature;
    if (name == "kmeans") return SplitMethod::kmeans;
    if (name == "free-search" || name == "freesearch") return SplitMethod::free_search;
    throw ConfigError("unknown split method: " + name);
}

SmoothedCurve smooth_dq(const std::vector<double>& x, const std::vector<double>& dq,
                        const SmootherConfig& cfg) {
    if (x.size() != dq.size() || x.empty()) throw Error("smooth_dq: bad input sizes");
    if (cfg.grid_size < 10) throw ConfigError("smooth_dq: grid_size must be >= 10");
    const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) {
        if (x.size() > 1) throw DataError("smooth_dq: degenerate splitting feature");
        // A lone point: the weighted average is that point everywhere.
        SmoothedCurve out;
        out.lengthscale = 0.0;
        out.grid.assign(cfg.grid_size, lo);
        out.f.assign(cfg.grid_size, dq.front());
        return out;
    }

    SmoothedCurve out;
    out.lengthscale = (hi - lo) / cfg.lengthscale_divisor;
    out.grid.resize(cfg.grid_size);
    out.f.resize(cfg.grid_size);
    const double step = (hi - lo) / double(cfg.grid_size - 1);
    const double inv_l2 = 1.0 / (out.lengthscale * out.lengthscale);
    for (std::size_t g = 0; g < cfg.grid_size; ++g) {
        const double gx = lo + double(g) * step;
        out.grid[g] = gx;
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double d = gx - x[j];
            const double w = std::exp(-d * d * inv_l2);
            num += w * dq[j];
            den += w;
        }
        out.f[g] = num / den;
    }
    return out;
}

std::vector<double> density(const std::vector<double>& x, const std::vector<double>& grid,
                            double radius) {
    if (!(radius > 0.0)) throw ConfigError("density: radius must be positive");
    std::vector<double> rho(grid.size(), 0.0);
    if (x.empty()) return rho;
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        // Strictly inside (g - radius, g + radius).
        const auto first = std::upper_bound(sorted.begin(), sorted.end(), grid[g] - radius);
        const auto last = std::lower_bound(sorted.begin(), sorted.end(), grid[g] + radius);
        rho[g] = first < last ? double(last - first) / double(sorted.size()) : 0.0;
    }
    return rho;
}

namespace {

struct ScoredCurve {
    SmoothedCurve curve;
    std::vector<double> f_second;
    std::vector<double> rho;
    std::vector<double> score;
    std::vector<double> excess;  // |f'' - f''_linear|, the significance measure
};

/// Second derivative by central differences; zero at the grid endpoints.
std::vector<double> second_derivative(const std::vector<double>& f, double step) {
    std::vector<double> d2(f.size(), 0.0);
    for (std::size_t i = 1; i + 1 < f.size(); ++i)
        d2[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (step * step);
    return d2;
}

ScoredCurve score_curve(const std::vector<double>& x, const std::vector<double>& dq,
                        const SmootherConfig& cfg) {
    ScoredCurve sc;
    sc.curve = smooth_dq(x, dq, cfg);
    if (!(sc.curve.lengthscale > 0.0)) {
        // Lone data point: a flat curve carries no curvature.
        sc.f_second.assign(sc.curve.grid.size(), 0.0);
        sc.rho.assign(sc.curve.grid.size(), 0.0);
        sc.score.assign(sc.curve.grid.size(), 0.0);
        sc.excess.assign(sc.curve.grid.size(), 0.0);
        return sc;
    }
    const double radius = cfg.density_radius > 0.0 ? cfg.density_radius : sc.curve.lengthscale;
    sc.rho = density(x, sc.curve.grid, radius);

    const double step = sc.curve.grid[1] - sc.curve.grid[0];
    sc.f_second = second_derivative(sc.curve.f, step);

    // The smoother bends even perfectly linear data near the range ends, so
    // raw curvature there is an artifact. Smoothing the least-squares line
    // through (x, dq) with the same kernel reproduces exactly that artifact;
    // the difference isolates curvature the data actually carries.
    const double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
    const double mean_q = std::accumulate(dq.begin(), dq.end(), 0.0) / double(dq.size());
    double sxx = 0.0, sxq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mean_x) * (x[i] - mean_x);
        sxq += (x[i] - mean_x) * (dq[i] - mean_q);
    }
    const double slope = sxx > 0.0 ? sxq / sxx : 0.0;
    std::vector<double> linear(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) linear[i] = mean_q + slope * (x[i] - mean_x);
    const SmoothedCurve base = smooth_dq(x, linear, cfg);
    const std::vector<double> base_second = second_derivative(base.f, step);

    sc.excess.resize(sc.f_second.size());
    sc.score.resize(sc.f_second.size());
    for (std::size_t i = 0; i < sc.f_second.size(); ++i) {
        sc.excess[i] = std::abs(sc.f_second[i] - base_second[i]);
        sc.score[i] = sc.rho[i] * std::abs(sc.f_second[i]);
    }
    return sc;
}

}  // namespace

BreakSet curvature_breaks(const std::vector<double>& x, const std::vector<double>& dq,
                          const SmootherConfig& cfg, std::size_t k) {
    BreakSet out;
    out.method = SplitMethod::curvature;
    if (k == 0) return out;

    const ScoredCurve sc = score_curve(x, dq, cfg);

    double dq_scale = 0.0;
    for (double v : dq) dq_scale = std::max(dq_scale, std::abs(v));
    const double l2 = sc.curve.lengthscale * sc.curve.lengthscale;
    const double floor = std::max(dq_scale, 1e-30) / l2 * 1e-9;

    std::vector<std::size_t> maxima;
    for (std::size_t i = 1; i + 1 < sc.score.size(); ++i) {
        if (sc.score[i] > sc.score[i - 1] && sc.score[i] > sc.score[i + 1] &&
            sc.excess[i] > floor)
            maxima.push_back(i);
    }
    std::stable_sort(maxima.begin(), maxima.end(),
                     [&](std::size_t a, std::size_t b) { return sc.score[a] > sc.score[b]; });

    // The hard-count density steps as the grid slides over data points,
    // splintering one curvature feature into a cluster of micro-maxima.
    // Keep one break per feature: suppress maxima within a lengthscale of a
    // stronger kept one.
    std::vector<std::size_t> kept;
    for (std::size_t i : maxima) {
        if (kept.size() == k) break;
        bool close = false;
        for (std::size_t j : kept)
            if (std::abs(sc.curve.grid[i] - sc.curve.grid[j]) < sc.curve.lengthscale)
                close = true;
        if (!close) kept.push_back(i);
    }

    out.values.reserve(kept.size());
    for (std::size_t i : kept) out.values.push_back(sc.curve.grid[i]);
    std::sort(out.values.begin(), out.values.end());
    return out;
}

BreakDiagnostics curvature_diagnostics(const std::vector<double>& x,
                                       const std::vector<double>& dq,
                                       const SmootherConfig& cfg) {
    const ScoredCurve sc = score_curve(x, dq, cfg);
    return {sc.curve.grid, sc.curve.f, sc.f_second, sc.rho, sc.score};
}

void export_diagnostics_csv(const BreakDiagnostics& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << "x,f_dq,f_second,density,score\n";
    for (std::size_t i = 0; i < d.grid.size(); ++i) {
        out << format_double(d.grid[i]) << ',' << format_double(d.f_dq[i]) << ','
            << format_double(d.f_second[i]) << ',' << format_double(d.rho[i]) << ','
            << format_double(d.score[i]) << '\n';
    }
}

BreakSet kmeans_breaks(const std::vector<double>& x1, const std::vector<double>& x2,
                       std::size_t k, std::uint64_t seed) {
    BreakSet out;
    out.method = SplitMethod::kmeans;
    if (k == 0) return out;
    const std::size_t n = x1.size();
    if (x2.size() != n) throw Error("kmeans_breaks: column length mismatch");
    const std::size_t n_clusters = k + 1;
    if (n_clusters > n) throw DataError("kmeans_breaks: more clusters than points");

    constexpr int kMaxRetries = 8;
    constexpr int kMaxIter = 200;
    Rng rng(seed);

    std::vector<double> cx(n_clusters), cy(n_clusters);
    std::vector<std::size_t> assign(n);

    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
        // k-means++ seeding.
        std::vector<std::size_t> centers;
        centers.push_back(rng.index(n));
        std::vector<double> dist2(n, std::numeric_limits<double>::max());
        while (centers.size() < n_clusters) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double dx = x1[i] - x1[centers.back()];
                const double dy = x2[i] - x2[centers.back()];
                dist2[i] = std::min(dist2[i], dx * dx + dy * dy);
                total += dist2[i];
            }
            if (total <= 0.0) {
                centers.push_back(rng.index(n));
                continue;
            }
            double target = rng.uniform() * total;
            std::size_t pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                target -= dist2[i];
                if (target <= 0.0) {
                    pick = i;
                    break;
                }
            }
            centers.push_back(pick);
        }
        for (std::size_t c = 0; c < n_clusters; ++c) {
            cx[c] = x1[centers[c]];
            cy[c] = x2[centers[c]];
        }

        bool empty_cluster = false;
        for (int iter = 0; iter < kMaxIter; ++iter) {
            bool changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t best = 0;
                double best_d = std::numeric_limits<double>::max();
                for (std::size_t c = 0; c < n_clusters; ++c) {
                    const double dx = x1[i] - cx[c];
                    const double dy = x2[i] - cy[c];
                    const double d = dx * dx + dy * dy;
                    if (d < best_d) {
                        best_d = d;
                        best = c;
                    }
                }
                if (iter == 0 || assign[i] != best) {
                    assign[i] = best;
                    changed = true;
                }
            }
            std::vector<double> sum_x(n_clusters, 0.0), sum_y(n_clusters, 0.0);
            std::vector<std::size_t> count(n_clusters, 0);
            for (std::size_t i = 0; i < n; ++i) {
                sum_x[assign[i]] += x1[i];
                sum_y[assign[i]] += x2[i];
                ++count[assign[i]];
            }
            empty_cluster = false;
            for (std::size_t c = 0; c < n_clusters; ++c) {
                if (count[c] == 0) {
                    empty_cluster = true;
                    continue;
                }
                cx[c] = sum_x[c] / double(count[c]);
                cy[c] = sum_y[c] / double(count[c]);
            }
            if (!changed) break;
        }
        if (empty_cluster) continue;

        std::sort(cx.begin(), cx.end());
        out.values.clear();
        for (std::size_t c = 0; c + 1 < n_clusters; ++c) {
            const double mid = 0.5 * (cx[c] + cx[c + 1]);
            if (out.values.empty() || mid > out.values.back()) out.values.push_back(mid);
        }
        return out;
    }
    throw DataError("kmeans_breaks: empty cluster persisted across retries");
}

}  // namespace soh
