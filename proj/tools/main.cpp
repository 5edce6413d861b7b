#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "soh/csv_io.hpp"
#include "soh/errors.hpp"
#include "soh/featurize.hpp"
#include "soh/forecast.hpp"
#include "soh/free_search.hpp"
#include "soh/regress.hpp"
#include "soh/select.hpp"
#include "soh/synthetic.hpp"
#include "soh/trial.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct DataSource {
    std::string samples_path;
    std::string capacities_path;
    soh::SyntheticSpec synth;
    bool use_synthetic = false;
};

std::vector<soh::CellSeries> load_cells(const DataSource& src) {
    if (src.use_synthetic) return soh::generate_synthetic(src.synth).cells;
    if (src.samples_path.empty() || src.capacities_path.empty())
        throw soh::ConfigError("either --samples/--capacities or --synth-cells is required");
    return soh::ingest_csv(src.samples_path, src.capacities_path);
}

void add_data_flags(CLI::App* cmd, DataSource& src) {
    cmd->add_option("--samples", src.samples_path, "sample CSV path");
    cmd->add_option("--capacities", src.capacities_path, "capacity CSV path");
    auto* synth = cmd->add_option(
        "--synth-cells", [&src](const std::vector<std::string>& vals) {
            src.synth.n_cells = std::stoul(vals.back());
            src.use_synthetic = true;
            return true;
        },
        "generate a synthetic corpus with this many cells");
    synth->type_name("UINT");
    cmd->add_option("--noise-std", src.synth.noise_std,
                    "synthetic noise std, % capacity per interval");
    cmd->add_option("--knee-lo", src.synth.knee_onset_lo, "synthetic knee onset lower fraction");
    cmd->add_option("--knee-hi", src.synth.knee_onset_hi, "synthetic knee onset upper fraction");
    cmd->add_option("--synth-seed", src.synth.rng_seed, "synthetic corpus seed");
}

fs::path out_dir(const std::string& out) {
    fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw soh::Error("cannot write file: " + path.string());
    f << text;
}

std::string read_text(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw soh::Error("cannot open file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

json bounds_to_json(const soh::PercentileBounds& bounds) {
    json j;
    for (std::size_t v = 0; v < soh::kVariableCount; ++v)
        j[soh::kVariableNames[v]] = bounds.thresholds[v];
    return j;
}

soh::PercentileBounds bounds_from_json(const json& j) {
    soh::PercentileBounds bounds;
    for (std::size_t v = 0; v < soh::kVariableCount; ++v) {
        const auto& arr = j.at(soh::kVariableNames[v]);
        for (std::size_t p = 0; p < 4; ++p) bounds.thresholds[v][p] = arr.at(p).get<double>();
    }
    return bounds;
}

/// Applies `config.json` fields (flags still win: they are parsed after and
/// write over these values).
void apply_config_file(const std::string& path, soh::TrialConfig& cfg, DataSource& src) {
    const json doc = json::parse(read_text(path));
    if (doc.contains("method")) cfg.method = soh::method_from_name(doc["method"]);
    if (doc.contains("repeats")) cfg.n_repeats = doc["repeats"].get<std::size_t>();
    if (doc.contains("train_cells")) cfg.n_train_cells = doc["train_cells"].get<std::size_t>();
    if (doc.contains("features")) cfg.n_features = doc["features"].get<std::size_t>();
    if (doc.contains("rho_max")) cfg.rho_max = doc["rho_max"].get<double>();
    if (doc.contains("beta_improv")) cfg.beta_improv = doc["beta_improv"].get<double>();
    if (doc.contains("max_models")) cfg.max_models = doc["max_models"].get<std::size_t>();
    if (doc.contains("interval_hours")) cfg.interval_hours = doc["interval_hours"].get<double>();
    if (doc.contains("seed")) cfg.rng_seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("bounds_from_all")) cfg.bounds_from_all = doc["bounds_from_all"].get<bool>();
    if (doc.contains("threads")) cfg.n_threads = doc["threads"].get<std::size_t>();
    if (doc.contains("samples")) src.samples_path = doc["samples"].get<std::string>();
    if (doc.contains("capacities")) src.capacities_path = doc["capacities"].get<std::string>();
    if (doc.contains("synthetic")) {
        const json& s = doc["synthetic"];
        src.use_synthetic = true;
        if (s.contains("n_cells")) src.synth.n_cells = s["n_cells"].get<std::size_t>();
        if (s.contains("noise_std")) src.synth.noise_std = s["noise_std"].get<double>();
        if (s.contains("knee_onset_lo")) src.synth.knee_onset_lo = s["knee_onset_lo"].get<double>();
        if (s.contains("knee_onset_hi")) src.synth.knee_onset_hi = s["knee_onset_hi"].get<double>();
        if (s.contains("seed")) src.synth.rng_seed = s["seed"].get<std::uint64_t>();
    }
}

void add_trial_flags(CLI::App* cmd, soh::TrialConfig& cfg, std::string& method_name) {
    cmd->add_option("--method", method_name,
                    "plr-curvature | plr-kmeans | plr-freesearch | gpr");
    cmd->add_option("--repeats", cfg.n_repeats, "number of train/test repeats");
    cmd->add_option("--train-cells", cfg.n_train_cells, "training cells per repeat");
    cmd->add_option("--features", cfg.n_features, "number of selected input features");
    cmd->add_option("--rho-max", cfg.rho_max, "maximum correlation between selected features");
    cmd->add_option("--beta-improv", cfg.beta_improv, "sub-model count selection slack");
    cmd->add_option("--max-models", cfg.max_models, "maximum sub-model count");
    cmd->add_option("--size-holdout", cfg.size_holdout,
                    "held-out share for sub-model-count scoring (0 = training RMSE)");
    cmd->add_option("--interval-hours", cfg.interval_hours, "interval length in hours");
    cmd->add_option("--seed", cfg.rng_seed, "base trial seed");
    cmd->add_flag("--bounds-from-all", cfg.bounds_from_all,
                  "compute percentile bounds from all cells, not just training cells");
    cmd->add_option("--threads", cfg.n_threads, "worker threads over repeats");
}

int run(int argc, char** argv) {
    CLI::App app{"Piecewise-linear battery capacity forecasting"};
    app.require_subcommand(1);

    // synth ------------------------------------------------------------
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic cycling corpus");
    soh::SyntheticSpec synth_spec;
    std::string synth_out;
    synth_cmd->add_option("--cells", synth_spec.n_cells, "number of cells");
    synth_cmd->add_option("--noise-std", synth_spec.noise_std, "% capacity noise per interval");
    synth_cmd->add_option("--knee-lo", synth_spec.knee_onset_lo, "knee onset lower fraction");
    synth_cmd->add_option("--knee-hi", synth_spec.knee_onset_hi, "knee onset upper fraction");
    synth_cmd->add_option("--interval-hours", synth_spec.interval_hours, "interval hours");
    synth_cmd->add_option("--seed", synth_spec.rng_seed, "generator seed");
    synth_cmd->add_option("--out", synth_out, "output directory")->required();

    // featurize ---------------------------------------------------------
    auto* feat_cmd = app.add_subcommand("featurize", "compute the 74-feature interval matrix");
    DataSource feat_src;
    add_data_flags(feat_cmd, feat_src);
    std::string feat_bounds_in, feat_out;
    double feat_interval_hours = 12.0;
    feat_cmd->add_option("--bounds", feat_bounds_in,
                         "bounds JSON to reuse (otherwise computed from this fleet)");
    feat_cmd->add_option("--interval-hours", feat_interval_hours, "interval hours");
    feat_cmd->add_option("--out", feat_out, "output directory")->required();

    // select -------------------------------------------------------------
    auto* select_cmd = app.add_subcommand("select", "rank and select input features");
    std::string select_features_csv, select_out;
    soh::SelectionConfig select_cfg;
    select_cmd->add_option("--features-csv", select_features_csv, "feature matrix CSV")
        ->required();
    select_cmd->add_option("--features", select_cfg.n_features, "number of features");
    select_cmd->add_option("--rho-max", select_cfg.rho_max, "max inter-feature correlation");
    select_cmd->add_option("--out", select_out, "output directory")->required();

    // fit ----------------------------------------------------------------
    auto* fit_cmd = app.add_subcommand("fit", "fit the piecewise model on a feature matrix");
    std::string fit_features_csv, fit_out, fit_splitter = "curvature";
    soh::SelectionConfig fit_select_cfg;
    soh::SizeSelectConfig fit_size_cfg;
    std::uint64_t fit_seed = 0;
    fit_cmd->add_option("--features-csv", fit_features_csv, "feature matrix CSV")->required();
    fit_cmd->add_option("--splitter", fit_splitter, "curvature | kmeans | free-search");
    fit_cmd->add_option("--features", fit_select_cfg.n_features, "number of features");
    fit_cmd->add_option("--rho-max", fit_select_cfg.rho_max, "max inter-feature correlation");
    fit_cmd->add_option("--beta-improv", fit_size_cfg.beta_improv, "size selection slack");
    fit_cmd->add_option("--max-models", fit_size_cfg.max_models, "maximum sub-model count");
    fit_cmd->add_option("--size-holdout", fit_size_cfg.holdout_fraction,
                        "held-out share for sub-model-count scoring (0 = training RMSE)");
    fit_cmd->add_option("--seed", fit_seed, "seed (k-means splitter)");
    fit_cmd->add_option("--out", fit_out, "output directory")->required();

    // forecast -------------------------------------------------------------
    auto* forecast_cmd =
        app.add_subcommand("forecast", "forecast capacity trajectories with a fitted model");
    std::string fc_model, fc_features_csv, fc_capacities, fc_out;
    double fc_interval_hours = 12.0;
    forecast_cmd->add_option("--model", fc_model, "model JSON from `fit`")->required();
    forecast_cmd->add_option("--features-csv", fc_features_csv, "feature matrix CSV")->required();
    forecast_cmd->add_option("--capacities", fc_capacities,
                             "capacity CSV (initial capacity and observed EoL)")
        ->required();
    forecast_cmd->add_option("--interval-hours", fc_interval_hours, "interval hours");
    forecast_cmd->add_option("--out", fc_out, "output directory")->required();

    // trial / sweep ----------------------------------------------------------
    auto* trial_cmd = app.add_subcommand("trial", "run the repeated-split experiment");
    DataSource trial_src;
    soh::TrialConfig trial_cfg;
    std::string trial_method = "plr-curvature", trial_out, trial_config_path;
    trial_cmd->add_option("--config", trial_config_path, "JSON config (flags override)");
    add_data_flags(trial_cmd, trial_src);
    add_trial_flags(trial_cmd, trial_cfg, trial_method);
    trial_cmd->add_option("--out", trial_out, "output directory")->required();

    auto* sweep_cmd = app.add_subcommand("sweep", "sweep one trial parameter");
    DataSource sweep_src;
    soh::TrialConfig sweep_base;
    std::string sweep_method = "plr-curvature", sweep_out, sweep_param, sweep_values_csv;
    std::string sweep_config_path;
    sweep_cmd->add_option("--config", sweep_config_path, "JSON config (flags override)");
    add_data_flags(sweep_cmd, sweep_src);
    add_trial_flags(sweep_cmd, sweep_base, sweep_method);
    sweep_cmd->add_option("--param", sweep_param,
                          "rho_max | beta_improv | n_features | max_models | n_train_cells")
        ->required();
    sweep_cmd->add_option("--values", sweep_values_csv, "comma-separated values")->required();
    sweep_cmd->add_option("--out", sweep_out, "output directory")->required();

    // report -------------------------------------------------------------------
    auto* report_cmd = app.add_subcommand("report", "summarize trial rows");
    std::string report_rows, report_rows_b, report_label_a = "a", report_label_b = "b", report_out;
    report_cmd->add_option("--rows", report_rows, "rows CSV from `trial`")->required();
    report_cmd->add_option("--rows-b", report_rows_b, "second rows CSV for a comparison join");
    report_cmd->add_option("--label-a", report_label_a, "label for the first rows file");
    report_cmd->add_option("--label-b", report_label_b, "label for the second rows file");
    report_cmd->add_option("--out", report_out, "output directory")->required();

    // Config files load before CLI11 assigns flag values, so flags override.
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            apply_config_file(argv[i + 1], trial_cfg, trial_src);
            apply_config_file(argv[i + 1], sweep_base, sweep_src);
            trial_method = soh::method_name(trial_cfg.method);
            sweep_method = soh::method_name(sweep_base.method);
        }
    }

    CLI11_PARSE(app, argc, argv);

    if (synth_cmd->parsed()) {
        const fs::path dir = out_dir(synth_out);
        const soh::SyntheticFleet fleet = soh::generate_synthetic(synth_spec);
        soh::export_csv(fleet.cells, (dir / "samples.csv").string(),
                        (dir / "capacities.csv").string());
        soh::export_ground_truth_json(fleet.truth, (dir / "ground_truth.json").string());
        std::cout << "wrote " << fleet.cells.size() << " cells to " << dir.string() << "\n";
        return 0;
    }

    if (feat_cmd->parsed()) {
        const fs::path dir = out_dir(feat_out);
        const auto cells = load_cells(feat_src);
        soh::PercentileBounds bounds;
        if (!feat_bounds_in.empty())
            bounds = bounds_from_json(json::parse(read_text(feat_bounds_in)));
        else
            bounds = soh::compute_bounds(cells);
        std::vector<soh::IntervalRecord> records;
        for (const auto& cell : cells) {
            const auto recs = soh::featurize(cell, bounds, feat_interval_hours);
            records.insert(records.end(), recs.begin(), recs.end());
        }
        soh::export_records_csv(records, (dir / "features.csv").string());
        write_text(dir / "bounds.json", bounds_to_json(bounds).dump(2) + "\n");
        std::cout << "wrote " << records.size() << " interval records\n";
        return 0;
    }

    if (select_cmd->parsed()) {
        const fs::path dir = out_dir(select_out);
        const auto records = soh::import_records_csv(select_features_csv);
        const soh::SelectionResult result = soh::select_features(records, select_cfg);
        soh::export_selection_json(result, (dir / "selection.json").string());
        std::cout << "selected";
        for (std::size_t id : result.ids) std::cout << ' ' << soh::feature_name(id);
        std::cout << "\n";
        return 0;
    }

    if (fit_cmd->parsed()) {
        const fs::path dir = out_dir(fit_out);
        const auto records = soh::import_records_csv(fit_features_csv);
        const soh::SelectionResult selection = soh::select_features(records, fit_select_cfg);
        const double sigma_n = soh::estimate_noise(records, selection);
        const soh::BlrPrior prior{10.0, sigma_n};
        const soh::SplitMethod split = soh::split_method_from_name(fit_splitter);

        const auto x = soh::feature_column(records, selection.splitting_feature());
        const auto dq = soh::delta_q_column(records);
        const std::size_t second_id =
            selection.ids.size() > 1 ? selection.ids[1] : selection.splitting_feature();
        const auto x2 = soh::feature_column(records, second_id);
        soh::SmootherConfig smoother;
        soh::BreakSupplier splitter = [&](std::size_t k) -> soh::BreakSet {
            switch (split) {
                case soh::SplitMethod::curvature:
                    return soh::curvature_breaks(x, dq, smoother, k);
                case soh::SplitMethod::kmeans: {
                    soh::BreakSet b;
                    if (k > 0) b = soh::kmeans_breaks(x, x2, k, fit_seed + 1);
                    b.method = soh::SplitMethod::kmeans;
                    return b;
                }
                case soh::SplitMethod::free_search:
                    return soh::free_search_breaks(records, selection, k, prior, smoother);
            }
            return {};
        };

        soh::SizeSelectResult sized =
            soh::select_model_size(records, selection, prior, fit_size_cfg, splitter);
        sized.model.breaks.feature_id = static_cast<int>(selection.splitting_feature());
        write_text(dir / "model.json", soh::model_to_json(sized.model) + "\n");

        std::ofstream sizes(dir / "sizes.csv");
        sizes << "n_m,rmse_dq,selected\n";
        for (const auto& cand : sized.table) {
            sizes << cand.n_m << ',';
            if (cand.rmse) sizes << soh::format_double(*cand.rmse);
            sizes << ',' << (cand.n_m == sized.n_m ? 1 : 0) << '\n';
        }
        soh::export_diagnostics_csv(soh::curvature_diagnostics(x, dq, smoother),
                                    (dir / "break_diagnostics.csv").string());
        std::cout << "fitted n_m=" << sized.n_m << " model, splitting on "
                  << soh::feature_name(selection.splitting_feature()) << "\n";
        return 0;
    }

    if (forecast_cmd->parsed()) {
        const fs::path dir = out_dir(fc_out);
        const soh::PiecewiseModel model = soh::model_from_json(read_text(fc_model));
        const auto records = soh::import_records_csv(fc_features_csv);
        // The capacity file provides initial capacity and the observed EoL.
        std::vector<soh::CellSeries> shells;
        {
            const auto cap_lines_path = fc_capacities;
            // Reuse the ingest machinery with an empty sample file schema: read
            // capacities directly.
            std::ifstream in(cap_lines_path);
            if (!in) throw soh::Error("cannot open file: " + cap_lines_path);
            std::string line;
            std::getline(in, line);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line != "cell_id,time_s,capacity_ah,nominal_ah")
                throw soh::SchemaError("unexpected capacity header in " + cap_lines_path);
            std::map<std::string, std::size_t> index;
            std::size_t line_no = 1;
            while (std::getline(in, line)) {
                ++line_no;
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty()) continue;
                const auto fields = soh::split_csv_line(line);
                if (fields.size() != 4)
                    throw soh::ParseError("expected 4 fields in capacity row", line_no);
                auto it = index.find(fields[0]);
                if (it == index.end()) {
                    index.emplace(fields[0], shells.size());
                    shells.push_back(soh::CellSeries{fields[0], {}, {}, 0.0});
                    it = index.find(fields[0]);
                }
                soh::CellSeries& cell = shells[it->second];
                cell.capacities.push_back({std::stod(fields[1]), std::stod(fields[2])});
                cell.nominal_ah = std::stod(fields[3]);
            }
        }

        std::ofstream out(dir / "forecasts.csv");
        out << "cell_id,predicted_eol_days,observed_eol_days,rmse_dq,rmse_capacity,"
               "eol_error_pct,eol_unreachable\n";
        const double interval_days = fc_interval_hours / 24.0;
        for (const auto& shell : shells) {
            std::vector<soh::IntervalRecord> cell_records;
            for (const auto& rec : records)
                if (rec.cell_id == shell.cell_id) cell_records.push_back(rec);
            if (cell_records.empty()) continue;
            const double initial_pct =
                soh::capacity_at(shell, 0.0) / shell.nominal_ah * 100.0;
            const soh::CapacityForecast fc =
                soh::forecast_cell(model, cell_records, initial_pct, interval_days);
            std::optional<double> observed;
            if (!soh::is_censored(shell)) observed = soh::true_eol_days(shell);
            const soh::MetricTriple m = soh::score(fc, cell_records, observed);
            out << shell.cell_id << ',';
            if (fc.eol_days) out << soh::format_double(*fc.eol_days);
            out << ',';
            if (observed) out << soh::format_double(*observed);
            out << ',' << soh::format_double(m.rmse_dq) << ','
                << soh::format_double(m.rmse_capacity) << ',';
            if (m.eol_error_pct) out << soh::format_double(*m.eol_error_pct);
            out << ',' << (fc.eol_unreachable ? 1 : 0) << '\n';
        }
        std::cout << "wrote forecasts for " << shells.size() << " cells\n";
        return 0;
    }

    if (trial_cmd->parsed()) {
        const fs::path dir = out_dir(trial_out);
        trial_cfg.method = soh::method_from_name(trial_method);
        const auto cells = load_cells(trial_src);
        const soh::TrialReport report = soh::run_trial(cells, trial_cfg);
        soh::write_rows_csv(report, (dir / "rows.csv").string());
        soh::write_summary_json(report, (dir / "summary.json").string());
        soh::write_breaks_histogram_csv(report.all_breaks, 30,
                                        (dir / "breaks_hist.csv").string());
        soh::write_nm_histogram_csv(report.n_m_per_repeat, (dir / "nm_hist.csv").string());
        std::cout << soh::summary_json(report) << "\n";
        return 0;
    }

    if (sweep_cmd->parsed()) {
        const fs::path dir = out_dir(sweep_out);
        sweep_base.method = soh::method_from_name(sweep_method);
        const auto cells = load_cells(sweep_src);
        soh::SweepConfig cfg;
        cfg.base = sweep_base;
        cfg.parameter = sweep_param;
        std::stringstream ss(sweep_values_csv);
        std::string token;
        while (std::getline(ss, token, ',')) cfg.values.push_back(std::stod(token));
        const auto sweep = soh::run_sweep(cells, cfg);
        soh::write_sweep_csv(sweep, cfg.parameter, (dir / "sweep.csv").string());
        std::cout << "swept " << cfg.parameter << " over " << cfg.values.size() << " values\n";
        return 0;
    }

    if (report_cmd->parsed()) {
        const fs::path dir = out_dir(report_out);
        auto parse_rows = [](const std::string& path) {
            std::vector<soh::TrialRow> rows;
            std::ifstream in(path);
            if (!in) throw soh::Error("cannot open file: " + path);
            std::string line;
            std::getline(in, line);
            while (std::getline(in, line)) {
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty()) continue;
                const auto f = soh::split_csv_line(line);
                soh::TrialRow row;
                row.repeat = std::stoul(f[0]);
                row.cell_id = f[1];
                row.metrics.rmse_dq = std::stod(f[2]);
                row.metrics.rmse_capacity = std::stod(f[3]);
                if (!f[4].empty()) row.metrics.eol_error_pct = std::stod(f[4]);
                row.censored = f[6] == "1";
                row.eol_unreachable = f[7] == "1";
                row.n_m = std::stoul(f[8]);
                rows.push_back(std::move(row));
            }
            return rows;
        };

        soh::TrialReport report;
        report.rows = parse_rows(report_rows);
        std::vector<soh::MetricTriple> triples;
        for (const auto& row : report.rows) triples.push_back(row.metrics);
        report.summary = soh::summarize(triples);
        soh::write_summary_json(report, (dir / "summary.json").string());
        if (!report_rows_b.empty()) {
            soh::TrialReport b;
            b.rows = parse_rows(report_rows_b);
            soh::write_comparison_csv(report, b, report_label_a, report_label_b,
                                      (dir / "comparison.csv").string());
        }
        std::cout << "summary: median |EoL error| = " << report.summary.median_abs_eol_error
                  << "%\n";
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        json err;
        err["error"] = e.what();
        std::cerr << err.dump() << std::endl;
        return 1;
    }
}
