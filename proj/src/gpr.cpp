#include "soh/gpr.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "soh/errors.hpp"
#include "soh/nelder_mead.hpp"
#include "soh/rng.hpp"

namespace soh {

double gpr_kernel(const std::vector<double>& xi, const std::vector<double>& xj,
                  const GprHyperparams& hp) {
    if (xi.size() != xj.size() || xi.size() != hp.sigma_l.size())
        throw Error("gpr_kernel: dimension mismatch");
    double r2 = 0.0;
    for (std::size_t k = 0; k < xi.size(); ++k) {
        const double d = xi[k] - xj[k];
        r2 += d * d / (hp.sigma_l[k] * hp.sigma_l[k]);
    }
    return hp.sigma_f * hp.sigma_f * std::exp(-r2);
}

namespace {

Matrix standardize(const Matrix& inputs, std::vector<double>& mean, std::vector<double>& std) {
    const std::size_t n = inputs.rows(), d = inputs.cols();
    mean.assign(d, 0.0);
    std.assign(d, 1.0);
    for (std::size_t c = 0; c < d; ++c) {
        double m = 0.0;
        for (std::size_t r = 0; r < n; ++r) m += inputs(r, c);
        m /= double(n);
        double var = 0.0;
        for (std::size_t r = 0; r < n; ++r) var += (inputs(r, c) - m) * (inputs(r, c) - m);
        var /= double(n);
        mean[c] = m;
        std[c] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    Matrix out(n, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) out(r, c) = (inputs(r, c) - mean[c]) / std[c];
    return out;
}

Matrix kernel_matrix(const Matrix& x, const GprHyperparams& hp) {
    const std::size_t n = x.rows();
    Matrix k(n, n);
    std::vector<double> a(x.cols()), b(x.cols());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < x.cols(); ++c) a[c] = x(i, c);
        k(i, i) = hp.sigma_f * hp.sigma_f;
        for (std::size_t j = i + 1; j < n; ++j) {
            for (std::size_t c = 0; c < x.cols(); ++c) b[c] = x(j, c);
            const double v = gpr_kernel(a, b, hp);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

Cholesky factorize(const Matrix& x, const GprHyperparams& hp) {
    Matrix k = kernel_matrix(x, hp);
    const double noise = hp.sigma_n * hp.sigma_n;
    for (std::size_t i = 0; i < k.rows(); ++i) k(i, i) += noise;
    double used_jitter = 0.0;
    return cholesky_with_jitter(std::move(k), hp.sigma_f * hp.sigma_f, used_jitter);
}

}  // namespace

GprModel::GprModel(Matrix inputs, std::vector<double> targets, GprHyperparams hp)
    : y_(std::move(targets)), hp_(std::move(hp)) {
    if (inputs.rows() < 2) throw Error("GprModel: needs at least two points");
    if (inputs.rows() != y_.size()) throw Error("GprModel: target count mismatch");
    if (hp_.sigma_l.size() != inputs.cols())
        throw ConfigError("GprModel: lengthscale count must match input dimension");
    for (double s : hp_.sigma_l)
        if (!(s > 0.0)) throw ConfigError("GprModel: lengthscales must be positive");
    if (!(hp_.sigma_f > 0.0) || !(hp_.sigma_n > 0.0))
        throw ConfigError("GprModel: sigma_f and sigma_n must be positive");

    x_ = standardize(inputs, mean_, std_);
    chol_ = factorize(x_, hp_);
    alpha_ = chol_.solve(y_);
    const std::size_t n = y_.size();
    log_ml_ = -0.5 * dot(y_, alpha_) - 0.5 * chol_.log_det() -
              0.5 * double(n) * std::log(2.0 * M_PI);
}

std::vector<double> GprModel::standardized_row(const Matrix& inputs, std::size_t r) const {
    std::vector<double> x(inputs.cols());
    for (std::size_t c = 0; c < inputs.cols(); ++c) x[c] = (inputs(r, c) - mean_[c]) / std_[c];
    return x;
}

void GprModel::predict(const Matrix& inputs_star, std::vector<double>& mean,
                       std::vector<double>* variance) const {
    if (inputs_star.cols() != x_.cols()) throw Error("GprModel::predict: dimension mismatch");
    const std::size_t n = x_.rows();
    const std::size_t m = inputs_star.rows();
    mean.resize(m);
    if (variance) variance->resize(m);

    std::vector<double> k_star(n), row(x_.cols()), train(x_.cols());
    for (std::size_t s = 0; s < m; ++s) {
        row = standardized_row(inputs_star, s);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < x_.cols(); ++c) train[c] = x_(i, c);
            k_star[i] = gpr_kernel(row, train, hp_);
        }
        mean[s] = dot(k_star, alpha_);
        if (variance) {
            const std::vector<double> v = chol_.solve(k_star);
            const double noise = hp_.sigma_n * hp_.sigma_n;
            double var = hp_.sigma_f * hp_.sigma_f - dot(k_star, v) + noise;
            (*variance)[s] = std::max(var, noise);
        }
    }
}

GprModel fit_gpr(const Matrix& inputs, const std::vector<double>& targets,
                 const GprHyperparams& init, const GprFitOptions& opts) {
    if (inputs.rows() < 2) throw Error("fit_gpr: needs at least two points");
    GprHyperparams start = init;
    if (start.sigma_l.size() != inputs.cols())
        throw ConfigError("fit_gpr: lengthscale count must match input dimension");

    const std::size_t d = inputs.cols();
    auto unpack = [&](const std::vector<double>& log_params) {
        GprHyperparams hp;
        hp.sigma_f = std::exp(std::clamp(log_params[0], -12.0, 12.0));
        hp.sigma_l.resize(d);
        for (std::size_t k = 0; k < d; ++k)
            hp.sigma_l[k] = std::exp(std::clamp(log_params[1 + k], -12.0, 12.0));
        hp.sigma_n = std::exp(std::clamp(log_params[1 + d], -12.0, 12.0));
        return hp;
    };
    auto objective = [&](const std::vector<double>& log_params) {
        try {
            const GprModel model(inputs, targets, unpack(log_params));
            return -model.log_marginal_likelihood();
        } catch (const Error&) {
            return 1e30;
        }
    };

    std::vector<double> best_log(2 + d);
    best_log[0] = std::log(start.sigma_f);
    for (std::size_t k = 0; k < d; ++k) best_log[1 + k] = std::log(start.sigma_l[k]);
    best_log[1 + d] = std::log(start.sigma_n);
    double best_obj = objective(best_log);
    const std::vector<double> init_log = best_log;

    Rng rng(opts.seed);
    NelderMeadOptions nm;
    nm.max_iter = opts.max_iter;
    nm.initial_step = 0.3;
    nm.initial_step_abs = 0.3;
    for (int s = 0; s < opts.n_starts; ++s) {
        std::vector<double> x0 = init_log;
        if (s > 0)
            for (double& v : x0) v += rng.normal(0.0, 1.0);
        const NelderMeadResult result = nelder_mead(objective, x0, nm);
        if (result.fx < best_obj) {
            best_obj = result.fx;
            best_log = result.x;
        }
    }
    return GprModel(inputs, targets, unpack(best_log));
}

std::string gpr_to_json(const Matrix& inputs, const std::vector<double>& targets,
                        const GprHyperparams& hp) {
    nlohmann::json doc;
    doc["method"] = "gpr";
    doc["sigma_f"] = hp.sigma_f;
    doc["sigma_l"] = hp.sigma_l;
    doc["sigma_n"] = hp.sigma_n;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < inputs.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t c = 0; c < inputs.cols(); ++c) row.push_back(inputs(r, c));
        rows.push_back(std::move(row));
    }
    doc["inputs"] = std::move(rows);
    doc["targets"] = targets;
    return doc.dump(2);
}

GprModel gpr_from_json(const std::string& json_text) {
    const nlohmann::json doc = nlohmann::json::parse(json_text);
    GprHyperparams hp;
    hp.sigma_f = doc.at("sigma_f").get<double>();
    hp.sigma_l = doc.at("sigma_l").get<std::vector<double>>();
    hp.sigma_n = doc.at("sigma_n").get<double>();
    const auto& rows = doc.at("inputs");
    const std::size_t n = rows.size();
    const std::size_t d = n > 0 ? rows[0].size() : 0;
    Matrix inputs(n, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) inputs(r, c) = rows[r][c].get<double>();
    return GprModel(std::move(inputs), doc.at("targets").get<std::vector<double>>(), hp);
}

}  // namespace soh
