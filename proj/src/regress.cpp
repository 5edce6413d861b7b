#include "soh/regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "soh/errors.hpp"

namespace soh {

double BlrPosterior::predict(const std::vector<double>& x) const { return dot(w_hat, x); }

double BlrPosterior::predictive_variance(const std::vector<double>& x) const {
    const std::vector<double> cx = covariance.mul(x);
    return dot(x, cx) + sigma_n * sigma_n;
}

BlrPosterior fit_blr(const Matrix& design, const std::vector<double>& y, const BlrPrior& prior) {
    if (design.rows() != y.size()) throw Error("fit_blr: row count mismatch");
    if (design.rows() == 0 || design.cols() == 0) throw Error("fit_blr: empty design");
    if (!(prior.sigma_w > 0.0) || !(prior.sigma_n > 0.0))
        throw ConfigError("fit_blr: prior stds must be positive");
    for (double v : design.data())
        if (!std::isfinite(v)) throw DataError("fit_blr: non-finite design entry");
    for (double v : y)
        if (!std::isfinite(v)) throw DataError("fit_blr: non-finite target");

    const std::size_t d = design.cols();
    const double noise_var = prior.sigma_n * prior.sigma_n;
    const double lambda = noise_var / (prior.sigma_w * prior.sigma_w);

    // Solve in ridge form (X^T X + lambda I) w = X^T y; the posterior
    // precision is the same system scaled by sigma_n^-2.
    Matrix ridge = design.gram();
    for (std::size_t i = 0; i < d; ++i) ridge(i, i) += lambda;
    const std::vector<double> xty = design.tmul(y);

    const Cholesky chol(ridge);
    std::vector<double> w = chol.solve(xty);
    // Two steps of iterative refinement hold the closed form tightly even on
    // ill-conditioned designs.
    for (int step = 0; step < 2; ++step) {
        const std::vector<double> aw = ridge.mul(w);
        std::vector<double> residual(d);
        for (std::size_t i = 0; i < d; ++i) residual[i] = xty[i] - aw[i];
        const std::vector<double> correction = chol.solve(residual);
        for (std::size_t i = 0; i < d; ++i) w[i] += correction[i];
    }

    BlrPosterior post;
    post.w_hat = std::move(w);
    post.covariance = chol.inverse();
    for (auto& v : post.covariance.data()) v *= noise_var;
    post.precision = std::move(ridge);
    for (auto& v : post.precision.data()) v /= noise_var;
    post.sigma_n = prior.sigma_n;
    return post;
}

void predict_blr(const BlrPosterior& posterior, const Matrix& design_star,
                 std::vector<double>& mean, std::vector<double>* variance) {
    if (design_star.cols() != posterior.w_hat.size())
        throw Error("predict_blr: column count mismatch");
    mean = design_star.mul(posterior.w_hat);
    if (variance) {
        variance->resize(design_star.rows());
        std::vector<double> x(design_star.cols());
        for (std::size_t r = 0; r < design_star.rows(); ++r) {
            for (std::size_t c = 0; c < design_star.cols(); ++c) x[c] = design_star(r, c);
            (*variance)[r] = posterior.predictive_variance(x);
        }
    }
}

std::size_t PiecewiseModel::segment_index(double splitting_value) const {
    std::size_t idx = 0;
    for (double b : breaks.values) {
        if (splitting_value >= b)
            ++idx;
        else
            break;
    }
    return idx;
}

double PiecewiseModel::predict(const IntervalRecord& record) const {
    return predict(record, nullptr);
}

double PiecewiseModel::predict(const IntervalRecord& record, double* variance) const {
    const std::vector<double> x = selected_row(record, selection);
    const double split_value = record.features[selection.splitting_feature()];
    const SegmentModel& seg = segments[segment_index(split_value)];
    if (variance) *variance = seg.posterior.predictive_variance(x);
    return seg.posterior.predict(x);
}

Matrix selected_design(const std::vector<IntervalRecord>& records,
                       const SelectionResult& selection) {
    Matrix design(records.size(), selection.ids.size() + 1);
    for (std::size_t r = 0; r < records.size(); ++r) {
        for (std::size_t c = 0; c < selection.ids.size(); ++c)
            design(r, c) = records[r].features[selection.ids[c]];
        design(r, selection.ids.size()) = 1.0;
    }
    return design;
}

std::vector<double> selected_row(const IntervalRecord& record, const SelectionResult& selection) {
    std::vector<double> x(selection.ids.size() + 1);
    for (std::size_t c = 0; c < selection.ids.size(); ++c)
        x[c] = record.features[selection.ids[c]];
    x[selection.ids.size()] = 1.0;
    return x;
}

PiecewiseModel fit_piecewise(const std::vector<IntervalRecord>& records,
                             const SelectionResult& selection, const BreakSet& breaks,
                             const BlrPrior& prior) {
    PiecewiseModel model;
    model.selection = selection;
    model.breaks = breaks;
    model.prior = prior;

    const std::size_t n_segments = breaks.values.size() + 1;
    const std::size_t split = selection.splitting_feature();
    std::vector<std::vector<std::size_t>> members(n_segments);
    for (std::size_t i = 0; i < records.size(); ++i) {
        std::size_t idx = 0;
        for (double b : breaks.values) {
            if (records[i].features[split] >= b)
                ++idx;
            else
                break;
        }
        members[idx].push_back(i);
    }

    model.segments.resize(n_segments);
    const std::size_t d = selection.ids.size() + 1;
    for (std::size_t s = 0; s < n_segments; ++s) {
        if (members[s].empty()) continue;
        Matrix design(members[s].size(), d);
        std::vector<double> y(members[s].size());
        for (std::size_t r = 0; r < members[s].size(); ++r) {
            const IntervalRecord& rec = records[members[s][r]];
            for (std::size_t c = 0; c < selection.ids.size(); ++c)
                design(r, c) = rec.features[selection.ids[c]];
            design(r, selection.ids.size()) = 1.0;
            y[r] = rec.delta_q;
        }
        model.segments[s].posterior = fit_blr(design, y, prior);
        model.segments[s].n_points = members[s].size();
        model.segments[s].flag =
            members[s].size() >= d + 1 ? SegmentFlag::ok : SegmentFlag::low_rank;
    }

    // Empty segments borrow the nearest fitted neighbour.
    for (std::size_t s = 0; s < n_segments; ++s) {
        if (!members[s].empty()) continue;
        std::size_t best = n_segments;
        std::size_t best_dist = std::numeric_limits<std::size_t>::max();
        for (std::size_t t = 0; t < n_segments; ++t) {
            if (members[t].empty()) continue;
            const std::size_t dist = t > s ? t - s : s - t;
            if (dist < best_dist) {
                best_dist = dist;
                best = t;
            }
        }
        if (best == n_segments) throw DataError("fit_piecewise: no records at all");
        model.segments[s].posterior = model.segments[best].posterior;
        model.segments[s].n_points = 0;
        model.segments[s].flag = SegmentFlag::borrowed;
    }
    return model;
}

double model_rmse_dq(const PiecewiseModel& model, const std::vector<IntervalRecord>& records) {
    if (records.empty()) throw Error("model_rmse_dq: no records");
    double sum_sq = 0.0;
    for (const auto& rec : records) {
        const double err = model.predict(rec) - rec.delta_q;
        sum_sq += err * err;
    }
    return std::sqrt(sum_sq / double(records.size()));
}

double estimate_noise(const std::vector<IntervalRecord>& records,
                      const SelectionResult& selection, double sigma_w,
                      double initial_sigma_n) {
    const Matrix design = selected_design(records, selection);
    std::vector<double> y = delta_q_column(records);
    const BlrPosterior coarse = fit_blr(design, y, {sigma_w, initial_sigma_n});
    std::vector<double> mean;
    predict_blr(coarse, design, mean);
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) sum_sq += (y[i] - mean[i]) * (y[i] - mean[i]);
    const double resid_std = std::sqrt(sum_sq / double(y.size()));
    return std::max(resid_std, 1e-6);
}

std::size_t choose_model_size(const std::vector<SizeCandidate>& candidates, double beta_improv) {
    if (beta_improv < 0.0) throw ConfigError("choose_model_size: beta_improv must be >= 0");
    double best = std::numeric_limits<double>::max();
    bool any = false;
    for (const auto& c : candidates) {
        if (c.rmse) {
            best = std::min(best, *c.rmse);
            any = true;
        }
    }
    if (!any) throw Error("choose_model_size: no evaluable candidates");
    const double threshold = best * (1.0 + beta_improv);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i].rmse && *candidates[i].rmse <= threshold) return i;
    }
    throw Error("choose_model_size: unreachable");
}

SizeSelectResult select_model_size(const std::vector<IntervalRecord>& records,
                                   const SelectionResult& selection, const BlrPrior& prior,
                                   const SizeSelectConfig& cfg, const BreakSupplier& splitter) {
    if (records.empty()) throw DataError("select_model_size: no records");
    if (cfg.max_models < 1) throw ConfigError("select_model_size: max_models must be >= 1");
    if (cfg.holdout_fraction < 0.0 || cfg.holdout_fraction >= 1.0)
        throw ConfigError("select_model_size: holdout_fraction must be in [0, 1)");

    // Optional held-out scoring split (deterministic stride).
    std::vector<IntervalRecord> fit_subset, held_out;
    const bool use_holdout = cfg.holdout_fraction > 0.0 && records.size() >= 4;
    if (use_holdout) {
        const std::size_t stride =
            std::max<std::size_t>(2, std::size_t(std::lround(1.0 / cfg.holdout_fraction)));
        for (std::size_t i = 0; i < records.size(); ++i)
            (i % stride == 0 ? held_out : fit_subset).push_back(records[i]);
    }
    const std::vector<IntervalRecord>& fit_records = use_holdout ? fit_subset : records;
    const std::vector<IntervalRecord>& score_records = use_holdout ? held_out : records;

    SizeSelectResult out;
    std::vector<PiecewiseModel> fitted;
    std::vector<std::size_t> fitted_candidate;
    for (std::size_t n_m = 1; n_m <= cfg.max_models; ++n_m) {
        SizeCandidate cand;
        cand.n_m = n_m;
        BreakSet breaks = splitter(n_m - 1);
        if (breaks.values.size() == n_m - 1) {
            PiecewiseModel model = fit_piecewise(fit_records, selection, breaks, prior);
            cand.rmse = model_rmse_dq(model, score_records);
            fitted.push_back(std::move(model));
            fitted_candidate.push_back(out.table.size());
        }
        out.table.push_back(cand);
    }

    const std::size_t chosen = choose_model_size(out.table, cfg.beta_improv);
    for (std::size_t i = 0; i < fitted_candidate.size(); ++i) {
        if (fitted_candidate[i] == chosen) {
            out.n_m = out.table[chosen].n_m;
            // With a holdout split the kept model refits on everything.
            out.model = use_holdout ? fit_piecewise(records, selection,
                                                    fitted[i].breaks, prior)
                                    : std::move(fitted[i]);
            return out;
        }
    }
    throw Error("select_model_size: chosen size not fitted");
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    const std::size_t rows = j.size();
    const std::size_t cols = rows > 0 ? j[0].size() : 0;
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    return m;
}

const char* flag_name(SegmentFlag f) {
    switch (f) {
        case SegmentFlag::ok: return "ok";
        case SegmentFlag::low_rank: return "low_rank";
        case SegmentFlag::borrowed: return "borrowed";
    }
    return "?";
}

SegmentFlag flag_from_name(const std::string& s) {
    if (s == "ok") return SegmentFlag::ok;
    if (s == "low_rank") return SegmentFlag::low_rank;
    if (s == "borrowed") return SegmentFlag::borrowed;
    throw Error("unknown segment flag: " + s);
}

}  // namespace

std::string model_to_json(const PiecewiseModel& model) {
    nlohmann::json doc;
    doc["selection"]["ids"] = model.selection.ids;
    doc["selection"]["rho_dq"] = model.selection.rho_dq;
    doc["selection"]["truncated"] = model.selection.truncated;
    nlohmann::json names = nlohmann::json::array();
    for (std::size_t id : model.selection.ids) names.push_back(feature_name(id));
    doc["selection"]["names"] = names;
    doc["breaks"]["feature_id"] = model.breaks.feature_id;
    doc["breaks"]["values"] = model.breaks.values;
    doc["breaks"]["method"] = split_method_name(model.breaks.method);
    doc["prior"]["sigma_w"] = model.prior.sigma_w;
    doc["prior"]["sigma_n"] = model.prior.sigma_n;
    doc["segments"] = nlohmann::json::array();
    for (const auto& seg : model.segments) {
        nlohmann::json s;
        s["w_hat"] = seg.posterior.w_hat;
        s["covariance"] = matrix_to_json(seg.posterior.covariance);
        s["precision"] = matrix_to_json(seg.posterior.precision);
        s["sigma_n"] = seg.posterior.sigma_n;
        s["flag"] = flag_name(seg.flag);
        s["n_points"] = seg.n_points;
        doc["segments"].push_back(std::move(s));
    }
    return doc.dump(2);
}

PiecewiseModel model_from_json(const std::string& json_text) {
    const nlohmann::json doc = nlohmann::json::parse(json_text);
    PiecewiseModel model;
    model.selection.ids = doc["selection"]["ids"].get<std::vector<std::size_t>>();
    model.selection.rho_dq = doc["selection"]["rho_dq"].get<std::vector<double>>();
    model.selection.truncated = doc["selection"]["truncated"].get<bool>();
    model.breaks.feature_id = doc["breaks"]["feature_id"].get<int>();
    model.breaks.values = doc["breaks"]["values"].get<std::vector<double>>();
    model.breaks.method = split_method_from_name(doc["breaks"]["method"].get<std::string>());
    model.prior.sigma_w = doc["prior"]["sigma_w"].get<double>();
    model.prior.sigma_n = doc["prior"]["sigma_n"].get<double>();
    for (const auto& s : doc["segments"]) {
        SegmentModel seg;
        seg.posterior.w_hat = s["w_hat"].get<std::vector<double>>();
        seg.posterior.covariance = matrix_from_json(s["covariance"]);
        seg.posterior.precision = matrix_from_json(s["precision"]);
        seg.posterior.sigma_n = s["sigma_n"].get<double>();
        seg.flag = flag_from_name(s["flag"].get<std::string>());
        seg.n_points = s["n_points"].get<std::size_t>();
        model.segments.push_back(std::move(seg));
    }
    return model;
}

}  // namespace soh
