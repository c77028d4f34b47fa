#pragma once

#include <string>
#include <vector>

#include "phyhsl/datagen.hpp"
#include "phyhsl/training.hpp"

namespace phyhsl {

/// Mean absolute error over nodes: (1/N) sum_i ||xhat_i - x_i|| with the
/// norm taken over each node's flattened horizon block. Euclidean by
/// default; absolute-value (L1) variant behind the flag.
double mae(const std::vector<Tensor>& reference, const std::vector<Tensor>& predicted,
           bool l2 = true);

/// Repeats the last observed state over the horizon.
std::vector<Tensor> persistence_baseline(const std::vector<Tensor>& observed, int horizon);

/// Per-node, per-dim least-squares line over the observed window,
/// extrapolated over the horizon.
std::vector<Tensor> linear_trend_baseline(const std::vector<Tensor>& observed, int horizon);

struct MetricReport {
    double mae_mean = 0.0;
    double mae_std = 0.0;
    std::vector<double> per_horizon;  // MAE restricted to each horizon step
    double baseline_mae = 0.0;
    double linear_baseline_mae = 0.0;
    double seconds_per_iter = 0.0;
    std::vector<double> per_repeat_mae;
};

struct ExperimentOptions {
    int repeats = 10;
    bool l2_norm = true;
    std::string results_path;       // results.json, empty = don't write
    std::string loss_history_path;  // loss_history.csv, empty = don't write
    std::string dataset_name = "dataset";
};

/// Trains `repeats` models with seeds seed+0..repeats-1 on the observed
/// prefix of the dataset and evaluates MAE on the held-out suffix.
MetricReport run_experiment(const Dataset& ds, const TrainConfig& cfg,
                            const ExperimentOptions& opts);

enum class SweepAxis { TrainLen, PredLen };

struct SweepRow {
    std::string axis;
    int value;
    double mae_mean;
    double mae_std;
    bool skipped = false;
};

/// One run_experiment per value along the chosen axis; values exceeding the
/// dataset length are skipped with a warning.
std::vector<SweepRow> sweep(const Dataset& ds, const TrainConfig& cfg, SweepAxis axis,
                            const std::vector<int>& values, const ExperimentOptions& opts,
                            const std::string& csv_path = "");

struct AblationRow {
    std::string label;
    double mae_mean;
    double mae_std;
};

/// Full model plus the four ablation variants, Table-style CSV output.
std::vector<AblationRow> ablate(const Dataset& ds, const TrainConfig& cfg,
                                const ExperimentOptions& opts, const std::string& csv_path = "");

}  // namespace phyhsl
