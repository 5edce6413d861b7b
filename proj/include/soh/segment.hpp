#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace soh {

struct SmootherConfig {
    std::size_t grid_size = 201;
    /// Lengthscale is (max - min) / lengthscale_divisor.
    double lengthscale_divisor = 10.0;
    /// Density counting radius; <= 0 means "use the lengthscale".
    double density_radius = 0.0;
};

enum class SplitMethod { curvature, kmeans, free_search };

const char* split_method_name(SplitMethod m);
SplitMethod split_method_from_name(const std::string& name);

struct BreakSet {
    int feature_id = -1;
    std::vector<double> values;  // strictly increasing
    SplitMethod method = SplitMethod::curvature;
};

struct SmoothedCurve {
    std::vector<double> grid;
    std::vector<double> f;  // weighted moving average of delta_q over the grid
    double lengthscale = 0.0;
};

/// Squared-exponential weighted moving average of dq as a function of x,
/// evaluated on a uniform grid over [min(x), max(x)].
SmoothedCurve smooth_dq(const std::vector<double>& x, const std::vector<double>& dq,
                        const SmootherConfig& cfg = {});

/// Fraction of data points strictly within `radius` of each grid point.
std::vector<double> density(const std::vector<double>& x, const std::vector<double>& grid,
                            double radius);

/// Break points at the strongest local maxima of density * |f''|, where f''
/// is the central-difference second derivative of the smoothed dq curve.
/// Returns at most k breaks, ascending; fewer when the data supports fewer.
BreakSet curvature_breaks(const std::vector<double>& x, const std::vector<double>& dq,
                          const SmootherConfig& cfg, std::size_t k);

/// Diagnostics for one curvature run, exportable for plots.
struct BreakDiagnostics {
    std::vector<double> grid;
    std::vector<double> f_dq;
    std::vector<double> f_second;  // second derivative (0 at grid ends)
    std::vector<double> rho;
    std::vector<double> score;     // rho * |f''|
};

BreakDiagnostics curvature_diagnostics(const std::vector<double>& x,
                                       const std::vector<double>& dq,
                                       const SmootherConfig& cfg = {});

void export_diagnostics_csv(const BreakDiagnostics& d, const std::string& path);

/// K-means over the first two selected feature columns with k+1 clusters;
/// breaks are midpoints between consecutive centroid x1 coordinates.
BreakSet kmeans_breaks(const std::vector<double>& x1, const std::vector<double>& x2,
                       std::size_t k, std::uint64_t seed = 2024);

}  // namespace soh
