#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "phyhsl/checkpoint.hpp"
#include "phyhsl/datagen.hpp"
#include "phyhsl/eval.hpp"
#include "phyhsl/training.hpp"

namespace fs = std::filesystem;
using namespace phyhsl;

namespace {

struct CommonOpts {
    std::string workdir = ".";
    std::string config_path;
    std::string dataset_dir = "dataset";
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--workdir", c.workdir, "base directory for all relative paths");
    cmd->add_option("--config", c.config_path, "JSON config file (TrainConfig fields)");
    cmd->add_option("--data", c.dataset_dir, "dataset directory (edges.csv/states.csv/meta.json)");
    cmd->add_option_function<std::uint64_t>(
        "--seed",
        [&c](std::uint64_t s) {
            c.seed = s;
            c.seed_set = true;
        },
        "override the config seed");
}

TrainConfig load_config(const CommonOpts& c) {
    TrainConfig cfg;
    if (!c.config_path.empty()) {
        cfg = TrainConfig::from_json_file((fs::path(c.workdir) / c.config_path).string());
    }
    if (c.seed_set) cfg.seed = c.seed;
    return cfg;
}

Dataset load_dataset(const CommonOpts& c) {
    return import_dataset((fs::path(c.workdir) / c.dataset_dir).string());
}

std::string wpath(const CommonOpts& c, const std::string& rel) {
    return (fs::path(c.workdir) / rel).string();
}

void dump_sequence_csv(const std::vector<Tensor>& seq, const std::string& path,
                       const std::string& value_prefix) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    std::size_t cols = seq.at(0).cols();
    out << "node,t";
    for (std::size_t c = 0; c < cols; ++c) out << "," << value_prefix << c;
    out << "\n";
    for (std::size_t t = 0; t < seq.size(); ++t)
        for (std::size_t i = 0; i < seq[t].rows(); ++i) {
            out << i << "," << t;
            for (std::size_t c = 0; c < cols; ++c) out << "," << seq[t](i, c);
            out << "\n";
        }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PhyHSL: dynamics forecasting on complex networks"};
    app.require_subcommand(1);

    // ---- generate ----
    CommonOpts gen_c;
    std::string gen_kind = "heat";
    int gen_nodes = 100, gen_k = 4, gen_samples = 40;
    double gen_p = 0.1, gen_tend = 9.75, gen_noise = 0.01;
    std::uint64_t gen_seed = 1;
    auto* gen = app.add_subcommand("generate", "generate a synthetic WS dataset");
    gen->add_option("--workdir", gen_c.workdir, "base directory");
    gen->add_option("--out", gen_c.dataset_dir, "output dataset directory");
    gen->add_option("--kind", gen_kind, "heat | mutualistic | sis");
    gen->add_option("--nodes", gen_nodes, "node count");
    gen->add_option("--ws-k", gen_k, "ring-lattice degree (even)");
    gen->add_option("--ws-p", gen_p, "rewiring probability");
    gen->add_option("--samples", gen_samples, "number of samples T");
    gen->add_option("--t-end", gen_tend, "final time");
    gen->add_option("--noise-std", gen_noise, "observation noise std");
    gen->add_option("--seed", gen_seed, "generation seed");

    // ---- train ----
    CommonOpts train_c;
    std::string train_ckpt = "checkpoint.json";
    std::string train_loss_csv = "loss_history.csv";
    auto* tr = app.add_subcommand("train", "train a model on the dataset's observed prefix");
    add_common(tr, train_c);
    tr->add_option("--checkpoint-out", train_ckpt, "checkpoint output path");
    tr->add_option("--loss-csv", train_loss_csv, "per-epoch loss CSV output");

    // ---- predict ----
    CommonOpts pred_c;
    std::string pred_ckpt = "checkpoint.json";
    std::string pred_out = "predictions.csv";
    bool dump_incidence = false, dump_latent = false;
    auto* pr = app.add_subcommand("predict", "forecast the held-out suffix from a checkpoint");
    add_common(pr, pred_c);
    pr->add_option("--checkpoint", pred_ckpt, "checkpoint to load");
    pr->add_option("--out", pred_out, "predictions CSV output");
    pr->add_flag("--dump-incidence", dump_incidence, "dump last-layer incidence to incidence.csv");
    pr->add_flag("--dump-latent", dump_latent, "dump latent trajectories to latent_*.csv");

    // ---- evaluate ----
    CommonOpts eval_c;
    int eval_repeats = 10;
    bool eval_l1 = false;
    auto* ev = app.add_subcommand("evaluate", "train repeats and report MAE vs baselines");
    add_common(ev, eval_c);
    ev->add_option("--repeats", eval_repeats, "independent training repeats");
    ev->add_flag("--l1", eval_l1, "use per-node L1 norm in the MAE instead of L2");

    // ---- ablate ----
    CommonOpts abl_c;
    int abl_repeats = 10;
    auto* ab = app.add_subcommand("ablate", "run the five-variant ablation table");
    add_common(ab, abl_c);
    ab->add_option("--repeats", abl_repeats, "repeats per variant");

    // ---- sweep ----
    CommonOpts sw_c;
    std::string sw_axis = "pred_len";
    std::vector<int> sw_values;
    int sw_repeats = 10;
    auto* sw = app.add_subcommand("sweep", "sweep training or prediction length");
    add_common(sw, sw_c);
    sw->add_option("--axis", sw_axis, "train_len | pred_len");
    sw->add_option("--values", sw_values, "grid values")->required();
    sw->add_option("--repeats", sw_repeats, "repeats per value");

    // ---- gradcheck ----
    CommonOpts gc_c;
    int gc_nodes = 6, gc_steps = 8, gc_hidden = 4, gc_edges = 3, gc_probes = 60;
    double gc_h = 1e-5;
    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the full model loss");
    gc->add_option("--seed", gc_c.seed, "instance seed");
    gc->add_option("--nodes", gc_nodes, "instance node count");
    gc->add_option("--steps", gc_steps, "instance timestamps");
    gc->add_option("--hidden", gc_hidden, "hidden dim");
    gc->add_option("--hyperedges", gc_edges, "hyperedge count");
    gc->add_option("--probes", gc_probes, "sampled coordinates");
    gc->add_option("--fd-step", gc_h, "finite-difference step");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            DynamicsSpec spec;
            spec.kind = dynamics_kind_from_string(gen_kind);
            spec.fill_defaults();
            spec.t_end = gen_tend;
            spec.n_samples = gen_samples;
            spec.noise_std = gen_noise;
            spec.seed = gen_seed;
            StaticGraph g = watts_strogatz(gen_nodes, gen_k, gen_p, gen_seed);
            StateSeries series = simulate(g, spec);
            std::string out_dir = wpath(gen_c, gen_c.dataset_dir);
            export_dataset(series, g, spec, out_dir);
            std::cout << "wrote " << out_dir << " (" << g.n_nodes << " nodes, "
                      << g.edges.size() << " edges, T=" << series.n_steps() << ")\n";
        } else if (*tr) {
            TrainConfig cfg = load_config(train_c);
            Dataset ds = load_dataset(train_c);
            TimeSplit split = time_split(ds.series.n_steps(), cfg.split_fraction);
            std::vector<Tensor> observed(ds.series.states.begin(),
                                         ds.series.states.begin() + split.n_observe);
            TrainResult result = train(ds.graph, observed, cfg);
            save_checkpoint(result.store, wpath(train_c, train_ckpt));
            std::ofstream loss(wpath(train_c, train_loss_csv));
            loss << "epoch,recon,kl,total\n";
            loss.precision(17);
            for (std::size_t e = 0; e < result.history.size(); ++e) {
                loss << e << "," << result.history[e].recon << "," << result.history[e].kl << ","
                     << result.history[e].total << "\n";
            }
            std::cout << "trained " << cfg.epochs << " epochs, final loss "
                      << result.history.back().total << ", " << result.seconds_per_iter
                      << " s/iter\n";
        } else if (*pr) {
            TrainConfig cfg = load_config(pred_c);
            Dataset ds = load_dataset(pred_c);
            TimeSplit split = time_split(ds.series.n_steps(), cfg.split_fraction);
            std::vector<Tensor> observed(ds.series.states.begin(),
                                         ds.series.states.begin() + split.n_observe);
            ParamStore store;
            load_checkpoint(store, wpath(pred_c, pred_ckpt));
            std::vector<Tensor> full =
                predict(ds.graph, store, observed, split.n_predict, cfg);
            dump_sequence_csv(full, wpath(pred_c, pred_out), "v");
            if (dump_incidence || dump_latent) {
                ModelConfig mcfg = cfg.model_config(static_cast<int>(observed[0].cols()));
                GraphContext ctx = GraphContext::build(ds.graph, split.n_observe);
                Tape tape;
                ParamBinding binding(tape, store);
                Tensor noise = Tensor::zeros(
                    {static_cast<std::size_t>(ds.graph.n_nodes),
                     static_cast<std::size_t>(cfg.hidden)});
                ForwardOutput fwd = model_forward(tape, binding, ctx, observed, noise,
                                                  split.n_predict, mcfg);
                auto values = [](const std::vector<Var>& vars) {
                    std::vector<Tensor> out;
                    for (const Var& v : vars) out.push_back(v.value());
                    return out;
                };
                if (dump_incidence && !fwd.incidence.empty()) {
                    dump_sequence_csv(values(fwd.incidence), wpath(pred_c, "incidence.csv"), "e");
                }
                if (dump_latent) {
                    if (!fwd.z_phys.empty()) {
                        dump_sequence_csv(values(fwd.z_phys), wpath(pred_c, "latent_phys.csv"),
                                          "z");
                    }
                    if (!fwd.z_koop.empty()) {
                        dump_sequence_csv(values(fwd.z_koop), wpath(pred_c, "latent_koop.csv"),
                                          "z");
                    }
                }
            }
            std::cout << "wrote " << wpath(pred_c, pred_out) << "\n";
        } else if (*ev) {
            TrainConfig cfg = load_config(eval_c);
            Dataset ds = load_dataset(eval_c);
            ExperimentOptions opts;
            opts.repeats = eval_repeats;
            opts.l2_norm = !eval_l1;
            opts.dataset_name = eval_c.dataset_dir;
            opts.results_path = wpath(eval_c, "results.json");
            opts.loss_history_path = wpath(eval_c, "loss_history.csv");
            MetricReport rep = run_experiment(ds, cfg, opts);
            std::cout << "MAE " << rep.mae_mean << " ± " << rep.mae_std << " (persistence "
                      << rep.baseline_mae << ", linear " << rep.linear_baseline_mae << "), "
                      << rep.seconds_per_iter << " s/iter\n";
        } else if (*ab) {
            TrainConfig cfg = load_config(abl_c);
            Dataset ds = load_dataset(abl_c);
            ExperimentOptions opts;
            opts.repeats = abl_repeats;
            opts.dataset_name = abl_c.dataset_dir;
            auto rows = ablate(ds, cfg, opts, wpath(abl_c, "ablation.csv"));
            for (const auto& r : rows) {
                std::cout << r.label << ": " << r.mae_mean << " ± " << r.mae_std << "\n";
            }
        } else if (*sw) {
            TrainConfig cfg = load_config(sw_c);
            Dataset ds = load_dataset(sw_c);
            ExperimentOptions opts;
            opts.repeats = sw_repeats;
            opts.dataset_name = sw_c.dataset_dir;
            SweepAxis axis = sw_axis == "train_len" ? SweepAxis::TrainLen : SweepAxis::PredLen;
            auto rows = sweep(ds, cfg, axis, sw_values, opts, wpath(sw_c, "sweep.csv"));
            for (const auto& r : rows) {
                if (r.skipped) continue;
                std::cout << r.axis << "=" << r.value << ": " << r.mae_mean << " ± " << r.mae_std
                          << "\n";
            }
        } else if (*gc) {
            double err = full_model_gradcheck(gc_nodes, gc_steps, gc_hidden, gc_edges, gc_probes,
                                              gc_h, gc_c.seed);
            std::cout << "max relative gradient error: " << err << "\n";
            if (err >= 1e-4) {
                std::cerr << "gradcheck FAILED (threshold 1e-4)\n";
                return 1;
            }
        }
    } catch (const std::exception& e) {
        nlohmann::json err;
        err["error"] = e.what();
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
