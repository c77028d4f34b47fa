#include "phyhsl/eval.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include <json.hpp>

namespace phyhsl {

double mae(const std::vector<Tensor>& reference, const std::vector<Tensor>& predicted, bool l2) {
    if (reference.size() != predicted.size() || reference.empty()) {
        throw std::invalid_argument("mae: horizon length mismatch");
    }
    std::size_t n = reference[0].rows();
    std::size_t d = reference[0].cols();
    for (std::size_t t = 0; t < reference.size(); ++t) {
        if (!reference[t].same_shape(predicted[t])) {
            throw std::invalid_argument("mae: shape mismatch at step " + std::to_string(t));
        }
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double node_err = 0.0;
        for (std::size_t t = 0; t < reference.size(); ++t) {
            for (std::size_t c = 0; c < d; ++c) {
                double e = predicted[t](i, c) - reference[t](i, c);
                node_err += l2 ? e * e : std::abs(e);
            }
        }
        acc += l2 ? std::sqrt(node_err) : node_err;
    }
    return acc / static_cast<double>(n);
}

std::vector<Tensor> persistence_baseline(const std::vector<Tensor>& observed, int horizon) {
    if (observed.empty()) throw std::invalid_argument("persistence_baseline: empty window");
    return std::vector<Tensor>(horizon, observed.back());
}

std::vector<Tensor> linear_trend_baseline(const std::vector<Tensor>& observed, int horizon) {
    if (observed.size() < 2) throw std::invalid_argument("linear_trend_baseline: need >= 2 samples");
    std::size_t n = observed[0].rows();
    std::size_t d = observed[0].cols();
    double t_count = static_cast<double>(observed.size());
    double t_mean = (t_count - 1.0) / 2.0;
    double t_var = 0.0;
    for (std::size_t t = 0; t < observed.size(); ++t) {
        t_var += (t - t_mean) * (t - t_mean);
    }

    std::vector<Tensor> out(horizon, Tensor::zeros({n, d}));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            double x_mean = 0.0;
            for (std::size_t t = 0; t < observed.size(); ++t) x_mean += observed[t](i, c);
            x_mean /= t_count;
            double cov = 0.0;
            for (std::size_t t = 0; t < observed.size(); ++t) {
                cov += (t - t_mean) * (observed[t](i, c) - x_mean);
            }
            double slope = t_var > 0.0 ? cov / t_var : 0.0;
            double intercept = x_mean - slope * t_mean;
            for (int h = 0; h < horizon; ++h) {
                double tt = t_count + static_cast<double>(h);
                out[h](i, c) = intercept + slope * tt;
            }
        }
    }
    return out;
}

namespace {

std::vector<Tensor> slice(const std::vector<Tensor>& xs, int start, int len) {
    return std::vector<Tensor>(xs.begin() + start, xs.begin() + start + len);
}

}  // namespace

MetricReport run_experiment(const Dataset& ds, const TrainConfig& cfg,
                            const ExperimentOptions& opts) {
    if (opts.repeats < 1) throw std::invalid_argument("run_experiment: need repeats >= 1");
    int n_steps = ds.series.n_steps();
    TimeSplit split = time_split(n_steps, cfg.split_fraction);
    std::vector<Tensor> observed = slice(ds.series.states, 0, split.n_observe);
    std::vector<Tensor> held_out = slice(ds.series.states, split.n_observe, split.n_predict);
    int horizon = split.n_predict;

    MetricReport report;
    report.baseline_mae = mae(held_out, persistence_baseline(observed, horizon), opts.l2_norm);
    report.linear_baseline_mae =
        mae(held_out, linear_trend_baseline(observed, horizon), opts.l2_norm);
    report.per_horizon.assign(horizon, 0.0);

    std::ofstream loss_csv;
    if (!opts.loss_history_path.empty()) {
        loss_csv.open(opts.loss_history_path);
        if (!loss_csv) throw std::runtime_error("cannot write " + opts.loss_history_path);
        loss_csv << "repeat,epoch,recon,kl,total\n";
        loss_csv.precision(17);
    }

    double sec_acc = 0.0;
    for (int r = 0; r < opts.repeats; ++r) {
        TrainConfig run_cfg = cfg;
        run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(r);
        TrainResult tr;
        try {
            tr = train(ds.graph, observed, run_cfg);
        } catch (const std::exception& e) {
            throw std::runtime_error("run_experiment: repeat with seed " +
                                     std::to_string(run_cfg.seed) + " failed: " + e.what());
        }
        std::vector<Tensor> full = predict(ds.graph, tr.store, observed, horizon, run_cfg);
        std::vector<Tensor> forecast = slice(full, split.n_observe, horizon);
        report.per_repeat_mae.push_back(mae(held_out, forecast, opts.l2_norm));
        for (int h = 0; h < horizon; ++h) {
            report.per_horizon[h] += mae(slice(held_out, h, 1), slice(forecast, h, 1),
                                         opts.l2_norm) /
                                     static_cast<double>(opts.repeats);
        }
        sec_acc += tr.seconds_per_iter;
        if (loss_csv.is_open()) {
            for (std::size_t e = 0; e < tr.history.size(); ++e) {
                loss_csv << r << "," << e << "," << tr.history[e].recon << ","
                         << tr.history[e].kl << "," << tr.history[e].total << "\n";
            }
        }
    }
    report.seconds_per_iter = sec_acc / static_cast<double>(opts.repeats);

    double mean = 0.0;
    for (double v : report.per_repeat_mae) mean += v;
    mean /= static_cast<double>(opts.repeats);
    double var = 0.0;
    for (double v : report.per_repeat_mae) var += (v - mean) * (v - mean);
    report.mae_mean = mean;
    report.mae_std = opts.repeats > 1 ? std::sqrt(var / (opts.repeats - 1)) : 0.0;

    if (!opts.results_path.empty()) {
        nlohmann::json j;
        j["dataset"] = opts.dataset_name;
        j["config_echo"] = nlohmann::json::parse(cfg.to_json());
        j["repeats"] = opts.repeats;
        j["mae_mean"] = report.mae_mean;
        j["mae_std"] = report.mae_std;
        j["baseline_mae"] = report.baseline_mae;
        j["linear_baseline_mae"] = report.linear_baseline_mae;
        j["seconds_per_iter"] = report.seconds_per_iter;
        j["per_horizon"] = report.per_horizon;
        j["per_repeat_mae"] = report.per_repeat_mae;
        std::ofstream out(opts.results_path);
        if (!out) throw std::runtime_error("cannot write " + opts.results_path);
        out << j.dump(2) << "\n";
    }
    return report;
}

std::vector<SweepRow> sweep(const Dataset& ds, const TrainConfig& cfg, SweepAxis axis,
                            const std::vector<int>& values, const ExperimentOptions& opts,
                            const std::string& csv_path) {
    int n_steps = ds.series.n_steps();
    std::vector<SweepRow> rows;
    for (int v : values) {
        SweepRow row;
        row.axis = axis == SweepAxis::TrainLen ? "train_len" : "pred_len";
        row.value = v;

        TrainConfig run_cfg = cfg;
        int n_obs, horizon;
        if (axis == SweepAxis::TrainLen) {
            n_obs = v;
            horizon = cfg.horizon;
        } else {
            n_obs = time_split(n_steps, cfg.split_fraction).n_observe;
            horizon = v;
        }
        if (n_obs < 2 || horizon < 1 || n_obs + horizon > n_steps) {
            std::cerr << "warning: sweep value " << v << " exceeds dataset length, skipped\n";
            row.skipped = true;
            rows.push_back(row);
            continue;
        }
        // restrict the dataset to the window this sweep point uses
        Dataset window;
        window.graph = ds.graph;
        window.series.dt = ds.series.dt;
        window.series.states.assign(ds.series.states.begin(),
                                    ds.series.states.begin() + n_obs + horizon);
        run_cfg.split_fraction =
            (static_cast<double>(n_obs) + 0.5) / static_cast<double>(n_obs + horizon);
        ExperimentOptions run_opts = opts;
        run_opts.results_path.clear();
        run_opts.loss_history_path.clear();
        MetricReport rep = run_experiment(window, run_cfg, run_opts);
        row.mae_mean = rep.mae_mean;
        row.mae_std = rep.mae_std;
        rows.push_back(row);
    }
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) throw std::runtime_error("cannot write " + csv_path);
        out << "axis,value,mae,std\n";
        out.precision(17);
        for (const SweepRow& r : rows) {
            if (r.skipped) continue;
            out << r.axis << "," << r.value << "," << r.mae_mean << "," << r.mae_std << "\n";
        }
    }
    return rows;
}

std::vector<AblationRow> ablate(const Dataset& ds, const TrainConfig& cfg,
                                const ExperimentOptions& opts, const std::string& csv_path) {
    struct Variant {
        std::string label;
        bool phys, koop, dhsl;
    };
    const std::vector<Variant> variants = {
        {"w/o Phy", false, true, true},   {"w/o Koop", true, false, true},
        {"w/o DHSL", true, true, false},  {"w/o Phy&Koop", false, false, true},
        {"PhyHSL", true, true, true},
    };
    std::vector<AblationRow> rows;
    for (const Variant& v : variants) {
        TrainConfig run_cfg = cfg;
        run_cfg.use_phys = v.phys;
        run_cfg.use_koop = v.koop;
        run_cfg.use_dhsl = v.dhsl;
        ExperimentOptions run_opts = opts;
        run_opts.results_path.clear();
        run_opts.loss_history_path.clear();
        MetricReport rep = run_experiment(ds, run_cfg, run_opts);
        rows.push_back({v.label, rep.mae_mean, rep.mae_std});
    }
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) throw std::runtime_error("cannot write " + csv_path);
        out << "variant,mae_mean,mae_std\n";
        out.precision(17);
        for (const AblationRow& r : rows) {
            out << r.label << "," << r.mae_mean << "," << r.mae_std << "\n";
        }
    }
    return rows;
}

}  // namespace phyhsl
