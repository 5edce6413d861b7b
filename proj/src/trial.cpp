#include "soh/trial.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "soh/csv_io.hpp"
#include "soh/errors.hpp"
#include "soh/free_search.hpp"
#include "soh/rng.hpp"

namespace soh {

const char* method_name(Method m) {
    switch (m) {
        case Method::plr_curvature: return "plr-curvature";
        case Method::plr_kmeans: return "plr-kmeans";
        case Method::plr_freesearch: return "plr-freesearch";
        case Method::gpr: return "gpr";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "plr-curvature") return Method::plr_curvature;
    if (name == "plr-kmeans") return Method::plr_kmeans;
    if (name == "plr-freesearch") return Method::plr_freesearch;
    if (name == "gpr") return Method::gpr;
    throw ConfigError("unknown method: " + name);
}

namespace {

struct RepeatOutput {
    std::vector<TrialRow> rows;
    std::vector<double> breaks;
    std::size_t n_m = 0;
};

Matrix selected_inputs_no_bias(const std::vector<IntervalRecord>& records,
                               const SelectionResult& selection) {
    Matrix x(records.size(), selection.ids.size());
    for (std::size_t r = 0; r < records.size(); ++r)
        for (std::size_t c = 0; c < selection.ids.size(); ++c)
            x(r, c) = records[r].features[selection.ids[c]];
    return x;
}

RepeatOutput run_repeat(const std::vector<CellSeries>& cells, const TrialConfig& cfg,
                        std::size_t repeat) {
    const std::uint64_t repeat_seed = cfg.rng_seed + repeat;
    const std::vector<std::size_t> order = split_order(cells.size(), repeat_seed);

    std::vector<CellSeries> train_cells;
    train_cells.reserve(cfg.n_train_cells);
    for (std::size_t i = 0; i < cfg.n_train_cells; ++i) train_cells.push_back(cells[order[i]]);

    const PercentileBounds bounds =
        cfg.bounds_from_all ? compute_bounds(cells) : compute_bounds(train_cells);

    std::vector<IntervalRecord> train_records;
    for (const auto& cell : train_cells) {
        auto recs = featurize(cell, bounds, cfg.interval_hours);
        train_records.insert(train_records.end(), recs.begin(), recs.end());
    }
    if (train_records.size() < 2) throw DataError("run_trial: training split has no intervals");

    const SelectionResult selection =
        select_features(train_records, {cfg.n_features, cfg.rho_max});
    const double sigma_n = estimate_noise(train_records, selection);
    const BlrPrior prior{10.0, sigma_n};

    RepeatOutput out;
    DqPredictor predictor;
    PiecewiseModel model;
    GprModel* gpr_model = nullptr;
    std::unique_ptr<GprModel> gpr_holder;

    if (cfg.method == Method::gpr) {
        const Matrix inputs = selected_inputs_no_bias(train_records, selection);
        const std::vector<double> y = delta_q_column(train_records);

        double y_std = 0.0;
        const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / double(y.size());
        for (double v : y) y_std += (v - y_mean) * (v - y_mean);
        y_std = std::sqrt(y_std / double(y.size()));
        GprHyperparams init;
        init.sigma_f = y_std > 0.0 ? y_std : 1.0;
        init.sigma_l.assign(selection.ids.size(), 1.0);
        init.sigma_n = sigma_n;

        // Search hyperparameters on a capped subsample, condition on all.
        GprHyperparams tuned = init;
        {
            Matrix search_x = inputs;
            std::vector<double> search_y = y;
            if (train_records.size() > cfg.gpr_max_hyper_points) {
                std::vector<std::size_t> idx(train_records.size());
                std::iota(idx.begin(), idx.end(), 0);
                Rng sub_rng(repeat_seed ^ 0x9e3779b97f4a7c15ULL);
                sub_rng.shuffle(idx);
                idx.resize(cfg.gpr_max_hyper_points);
                std::sort(idx.begin(), idx.end());
                search_x = Matrix(idx.size(), inputs.cols());
                search_y.resize(idx.size());
                for (std::size_t r = 0; r < idx.size(); ++r) {
                    for (std::size_t c = 0; c < inputs.cols(); ++c)
                        search_x(r, c) = inputs(idx[r], c);
                    search_y[r] = y[idx[r]];
                }
            }
            GprFitOptions opts;
            opts.n_starts = cfg.gpr_starts;
            opts.max_iter = cfg.gpr_iters;
            opts.seed = repeat_seed ^ 0xda3e39cb94b95bdbULL;
            const GprModel searched = fit_gpr(search_x, search_y, init, opts);
            tuned = searched.hyperparams();
        }
        gpr_holder = std::make_unique<GprModel>(inputs, y, tuned);
        gpr_model = gpr_holder.get();

        predictor = [gpr_model, &selection](const IntervalRecord& rec) {
            Matrix x(1, selection.ids.size());
            for (std::size_t c = 0; c < selection.ids.size(); ++c)
                x(0, c) = rec.features[selection.ids[c]];
            std::vector<double> mean;
            gpr_model->predict(x, mean);
            return mean[0];
        };
    } else {
        const std::vector<double> x = feature_column(train_records, selection.splitting_feature());
        const std::vector<double> dq = delta_q_column(train_records);
        const std::size_t second =
            selection.ids.size() > 1 ? selection.ids[1] : selection.splitting_feature();
        const std::vector<double> x2 = feature_column(train_records, second);

        BreakSupplier splitter;
        switch (cfg.method) {
            case Method::plr_curvature:
                splitter = [&](std::size_t k) { return curvature_breaks(x, dq, cfg.smoother, k); };
                break;
            case Method::plr_kmeans:
                splitter = [&, repeat_seed](std::size_t k) {
                    BreakSet b;
                    if (k > 0) b = kmeans_breaks(x, x2, k, repeat_seed ^ 0x6b6d65616e73ULL);
                    b.method = SplitMethod::kmeans;
                    return b;
                };
                break;
            case Method::plr_freesearch:
                splitter = [&](std::size_t k) {
                    return free_search_breaks(train_records, selection, k, prior, cfg.smoother);
                };
                break;
            default: break;
        }

        SizeSelectResult sized =
            select_model_size(train_records, selection, prior,
                              {cfg.beta_improv, cfg.max_models, cfg.size_holdout}, splitter);
        model = std::move(sized.model);
        model.breaks.feature_id = static_cast<int>(selection.splitting_feature());
        out.n_m = sized.n_m;
        out.breaks = model.breaks.values;
        predictor = [&model](const IntervalRecord& rec) { return model.predict(rec); };
    }

    const double interval_days = cfg.interval_hours / 24.0;
    for (std::size_t i = cfg.n_train_cells; i < cells.size(); ++i) {
        const CellSeries& cell = cells[order[i]];
        const auto records = featurize(cell, bounds, cfg.interval_hours);
        if (records.empty()) continue;

        const double initial_pct =
            capacity_at(cell, cell.samples.front().time_s) / cell.nominal_ah * 100.0;
        const CapacityForecast fc =
            forecast_records(predictor, records, initial_pct, interval_days);

        TrialRow row;
        row.repeat = repeat;
        row.cell_id = cell.cell_id;
        row.censored = is_censored(cell);
        row.eol_unreachable = fc.eol_unreachable;
        row.n_m = out.n_m;
        std::optional<double> observed_eol;
        if (!row.censored) observed_eol = true_eol_days(cell);
        row.metrics = score(fc, records, observed_eol);
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace

std::vector<std::size_t> split_order(std::size_t n_cells, std::uint64_t repeat_seed) {
    Rng rng(repeat_seed);
    std::vector<std::size_t> order(n_cells);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    return order;
}

TrialReport run_trial(const std::vector<CellSeries>& cells, const TrialConfig& cfg) {
    if (cfg.n_repeats < 1) throw ConfigError("run_trial: n_repeats must be >= 1");
    if (cfg.n_train_cells < 1 || cfg.n_train_cells >= cells.size())
        throw ConfigError("run_trial: split needs 1 <= n_train_cells < n_cells");

    std::vector<RepeatOutput> repeats(cfg.n_repeats);
    const std::size_t n_threads = std::max<std::size_t>(1, cfg.n_threads);
    if (n_threads == 1) {
        for (std::size_t r = 0; r < cfg.n_repeats; ++r) repeats[r] = run_repeat(cells, cfg, r);
    } else {
        std::vector<std::future<void>> futures;
        for (std::size_t t = 0; t < n_threads; ++t) {
            futures.push_back(std::async(std::launch::async, [&, t]() {
                for (std::size_t r = t; r < cfg.n_repeats; r += n_threads)
                    repeats[r] = run_repeat(cells, cfg, r);
            }));
        }
        for (auto& f : futures) f.get();
    }

    TrialReport report;
    report.config = cfg;
    for (auto& rep : repeats) {
        report.rows.insert(report.rows.end(), rep.rows.begin(), rep.rows.end());
        report.all_breaks.insert(report.all_breaks.end(), rep.breaks.begin(), rep.breaks.end());
        report.n_m_per_repeat.push_back(rep.n_m);
    }
    std::vector<MetricTriple> triples;
    triples.reserve(report.rows.size());
    for (const auto& row : report.rows) triples.push_back(row.metrics);
    report.summary = summarize(triples);
    return report;
}

void apply_parameter(TrialConfig& cfg, const std::string& parameter, double value) {
    if (parameter == "rho_max")
        cfg.rho_max = value;
    else if (parameter == "beta_improv")
        cfg.beta_improv = value;
    else if (parameter == "n_features")
        cfg.n_features = static_cast<std::size_t>(value);
    else if (parameter == "max_models")
        cfg.max_models = static_cast<std::size_t>(value);
    else if (parameter == "n_train_cells")
        cfg.n_train_cells = static_cast<std::size_t>(value);
    else
        throw ConfigError("unknown sweep parameter: " + parameter);
}

std::vector<std::pair<double, FleetSummary>> run_sweep(const std::vector<CellSeries>& cells,
                                                       const SweepConfig& cfg) {
    if (cfg.values.empty()) throw ConfigError("run_sweep: no values");
    std::vector<std::pair<double, FleetSummary>> out;
    for (std::size_t j = 0; j < cfg.values.size(); ++j) {
        TrialConfig trial_cfg = cfg.base;
        apply_parameter(trial_cfg, cfg.parameter, cfg.values[j]);
        trial_cfg.rng_seed = cfg.base.rng_seed + j * 1000000ULL;
        out.emplace_back(cfg.values[j], run_trial(cells, trial_cfg).summary);
    }
    return out;
}

std::string TrialReport::rows_csv() const {
    std::ostringstream out;
    out << "repeat,cell_id,rmse_dq,rmse_capacity,eol_error_pct,abs_eol_error_pct,censored,"
           "eol_unreachable,n_m\n";
    for (const auto& row : rows) {
        out << row.repeat << ',' << row.cell_id << ',' << format_double(row.metrics.rmse_dq)
            << ',' << format_double(row.metrics.rmse_capacity) << ',';
        if (row.metrics.eol_error_pct) {
            out << format_double(*row.metrics.eol_error_pct) << ','
                << format_double(std::abs(*row.metrics.eol_error_pct));
        } else {
            out << ',';
        }
        out << ',' << (row.censored ? 1 : 0) << ',' << (row.eol_unreachable ? 1 : 0) << ','
            << row.n_m << '\n';
    }
    return out.str();
}

void write_rows_csv(const TrialReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << report.rows_csv();
}

std::string summary_json(const TrialReport& report) {
    nlohmann::json doc;
    doc["method"] = method_name(report.config.method);
    doc["n_repeats"] = report.config.n_repeats;
    doc["n_train_cells"] = report.config.n_train_cells;
    doc["n_features"] = report.config.n_features;
    doc["rho_max"] = report.config.rho_max;
    doc["beta_improv"] = report.config.beta_improv;
    doc["max_models"] = report.config.max_models;
    doc["rng_seed"] = report.config.rng_seed;
    doc["n_forecasts"] = report.summary.n_forecasts;
    doc["n_eol_scored"] = report.summary.n_eol_scored;
    doc["rmse_dq"] = {{"median", report.summary.median_rmse_dq},
                      {"p95", report.summary.p95_rmse_dq}};
    doc["rmse_capacity"] = {{"median", report.summary.median_rmse_capacity},
                            {"p95", report.summary.p95_rmse_capacity}};
    doc["abs_eol_error"] = {{"median", report.summary.median_abs_eol_error},
                            {"p95", report.summary.p95_abs_eol_error}};
    doc["signed_eol_error_median"] = report.summary.median_signed_eol_error;
    return doc.dump(2);
}

void write_summary_json(const TrialReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << summary_json(report) << '\n';
}

void write_breaks_histogram_csv(const std::vector<double>& breaks, std::size_t n_bins,
                                const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << "bin_lo,bin_hi,count\n";
    if (breaks.empty() || n_bins == 0) return;
    const auto [lo_it, hi_it] = std::minmax_element(breaks.begin(), breaks.end());
    const double lo = *lo_it;
    const double width = std::max((*hi_it - lo) / double(n_bins), 1e-12);
    std::vector<std::size_t> counts(n_bins, 0);
    for (double b : breaks) {
        std::size_t bin = static_cast<std::size_t>((b - lo) / width);
        counts[std::min(bin, n_bins - 1)]++;
    }
    for (std::size_t i = 0; i < n_bins; ++i) {
        out << format_double(lo + double(i) * width) << ','
            << format_double(lo + double(i + 1) * width) << ',' << counts[i] << '\n';
    }
}

void write_nm_histogram_csv(const std::vector<std::size_t>& n_m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << "n_m,count\n";
    std::map<std::size_t, std::size_t> counts;
    for (std::size_t v : n_m) counts[v]++;
    for (const auto& [value, count] : counts) out << value << ',' << count << '\n';
}

void write_comparison_csv(const TrialReport& a, const TrialReport& b, const std::string& label_a,
                          const std::string& label_b, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << "repeat,cell_id,eol_error_" << label_a << ",eol_error_" << label_b << '\n';
    std::map<std::pair<std::size_t, std::string>, const TrialRow*> b_rows;
    for (const auto& row : b.rows) b_rows[{row.repeat, row.cell_id}] = &row;
    for (const auto& row : a.rows) {
        const auto it = b_rows.find({row.repeat, row.cell_id});
        if (it == b_rows.end()) continue;
        out << row.repeat << ',' << row.cell_id << ',';
        if (row.metrics.eol_error_pct) out << format_double(*row.metrics.eol_error_pct);
        out << ',';
        if (it->second->metrics.eol_error_pct)
            out << format_double(*it->second->metrics.eol_error_pct);
        out << '\n';
    }
}

void write_sweep_csv(const std::vector<std::pair<double, FleetSummary>>& sweep,
                     const std::string& parameter, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << parameter
        << ",median_rmse_dq,p95_rmse_dq,median_rmse_capacity,p95_rmse_capacity,"
           "median_abs_eol_error,p95_abs_eol_error,n_forecasts\n";
    for (const auto& [value, s] : sweep) {
        out << format_double(value) << ',' << format_double(s.median_rmse_dq) << ','
            << format_double(s.p95_rmse_dq) << ',' << format_double(s.median_rmse_capacity) << ','
            << format_double(s.p95_rmse_capacity) << ',' << format_double(s.median_abs_eol_error)
            << ',' << format_double(s.p95_abs_eol_error) << ',' << s.n_forecasts << '\n';
    }
}

}  // namespace soh
