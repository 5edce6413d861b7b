#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "soh/linalg.hpp"

namespace soh {

/// RBF-ARD hyperparameters: one lengthscale per input dimension.
struct GprHyperparams {
    double sigma_f = 1.0;
    std::vector<double> sigma_l;
    double sigma_n = 0.1;
};

/// sigma_f^2 * exp(-sum_k (xi_k - xj_k)^2 / sigma_l_k^2)
double gpr_kernel(const std::vector<double>& xi, const std::vector<double>& xj,
                  const GprHyperparams& hp);

class GprModel {
public:
    /// Conditions on (X, y) at fixed hyperparameters. Inputs are
    /// standardized internally; lengthscales apply in standardized space.
    GprModel(Matrix inputs, std::vector<double> targets, GprHyperparams hp);

    void predict(const Matrix& inputs_star, std::vector<double>& mean,
                 std::vector<double>* variance = nullptr) const;

    double log_marginal_likelihood() const { return log_ml_; }
    const GprHyperparams& hyperparams() const { return hp_; }

private:
    std::vector<double> standardized_row(const Matrix& inputs, std::size_t r) const;

    std::vector<double> y_;
    GprHyperparams hp_;
    Matrix x_;  // standardized training inputs
    std::vector<double> mean_, std_;
    Cholesky chol_;
    std::vector<double> alpha_;  // (K + sigma_n^2 I)^-1 y
    double log_ml_ = 0.0;
};

struct GprFitOptions {
    int n_starts = 5;
    int max_iter = 120;
    std::uint64_t seed = 7;
};

/// Hyperparameters by multi-start simplex maximization of the log marginal
/// likelihood in log-parameter space; the best start wins and the result is
/// never worse than `init`.
GprModel fit_gpr(const Matrix& inputs, const std::vector<double>& targets,
                 const GprHyperparams& init, const GprFitOptions& opts = {});

/// Serialization mirrors the piecewise model's JSON treatment: the stored
/// raw inputs, targets and hyperparameters rebuild an identical model.
std::string gpr_to_json(const Matrix& inputs, const std::vector<double>& targets,
                        const GprHyperparams& hp);
GprModel gpr_from_json(const std::string& json_text);

}  // namespace soh
