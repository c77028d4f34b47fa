#include "phyhsl/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "phyhsl/rng.hpp"

namespace phyhsl {

void TrainConfig::validate() const {
    if (split_fraction <= 0.0 || split_fraction >= 1.0) {
        throw std::invalid_argument("TrainConfig: split_fraction must be in (0,1)");
    }
    if (sigma2 <= 0.0) throw std::invalid_argument("TrainConfig: sigma2 must be positive");
    if (epochs < 0) throw std::invalid_argument("TrainConfig: negative epochs");
    if (hidden < 1 || hyperedges < 1 || encoder_layers < 1 || dhsl_layers < 1 || substeps < 1) {
        throw std::invalid_argument("TrainConfig: structural fields must be >= 1");
    }
}

ModelConfig TrainConfig::model_config(int d_in) const {
    ModelConfig m;
    m.d_in = d_in;
    m.hidden = hidden;
    m.hyperedges = hyperedges;
    m.encoder_layers = encoder_layers;
    m.dhsl_layers = dhsl_layers;
    m.substeps = substeps;
    m.use_phys = use_phys;
    m.use_koop = use_koop;
    m.use_dhsl = use_dhsl;
    return m;
}

TrainConfig TrainConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    nlohmann::json j;
    in >> j;
    TrainConfig c;
    c.epochs = j.value("epochs", c.epochs);
    c.lr = j.value("lr", c.lr);
    c.sigma2 = j.value("sigma2", c.sigma2);
    c.kl_weight = j.value("kl_weight", c.kl_weight);
    c.seed = j.value("seed", c.seed);
    c.split_fraction = j.value("split_fraction", c.split_fraction);
    c.use_phys = j.value("use_phys", c.use_phys);
    c.use_koop = j.value("use_koop", c.use_koop);
    c.use_dhsl = j.value("use_dhsl", c.use_dhsl);
    c.horizon = j.value("horizon", c.horizon);
    c.hidden = j.value("hidden", c.hidden);
    c.hyperedges = j.value("hyperedges", c.hyperedges);
    c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
    c.dhsl_layers = j.value("dhsl_layers", c.dhsl_layers);
    c.substeps = j.value("substeps", c.substeps);
    c.validate();
    return c;
}

std::string TrainConfig::to_json() const {
    nlohmann::json j;
    j["epochs"] = epochs;
    j["lr"] = lr;
    j["sigma2"] = sigma2;
    j["kl_weight"] = kl_weight;
    j["seed"] = seed;
    j["split_fraction"] = split_fraction;
    j["use_phys"] = use_phys;
    j["use_koop"] = use_koop;
    j["use_dhsl"] = use_dhsl;
    j["horizon"] = horizon;
    j["hidden"] = hidden;
    j["hyperedges"] = hyperedges;
    j["encoder_layers"] = encoder_layers;
    j["dhsl_layers"] = dhsl_layers;
    j["substeps"] = substeps;
    return j.dump(2);
}

Var kl_diag_gaussian(Tape& tape, const PosteriorParams& p) {
    // 1/2 sum (exp(log_var) + mu^2 - 1 - log_var)
    Var term = sub(add(exp_op(p.log_var), mul(p.mu, p.mu)), add_scalar(p.log_var, 1.0));
    return scale(sum_all(term), 0.5);
}

ElboVars elbo_loss(Tape& tape, const std::vector<Tensor>& x, const std::vector<Var>& x_hat,
                   const PosteriorParams& posterior, double sigma2, double kl_weight) {
    if (x.empty()) throw std::invalid_argument("elbo_loss: empty window");
    if (x_hat.size() < x.size()) throw std::invalid_argument("elbo_loss: prediction too short");
    Var recon = squared_error(x_hat[0], tape.constant(x[0]));
    for (std::size_t t = 1; t < x.size(); ++t) {
        recon = add(recon, squared_error(x_hat[t], tape.constant(x[t])));
    }
    Var kl = kl_diag_gaussian(tape, posterior);
    Var total = add(scale(recon, 1.0 / (2.0 * sigma2)), scale(kl, kl_weight));
    return {recon, kl, total};
}

TimeSplit time_split(int n_steps, double fraction) {
    if (fraction <= 0.0 || fraction >= 1.0) {
        throw std::invalid_argument("time_split: fraction must be in (0,1)");
    }
    int n_obs = static_cast<int>(std::floor(fraction * n_steps));
    if (n_obs < 1 || n_obs >= n_steps) {
        throw std::invalid_argument("time_split: degenerate split (observe " +
                                    std::to_string(n_obs) + " of " + std::to_string(n_steps) + ")");
    }
    return {n_obs, n_steps - n_obs};
}

TrainResult train(const StaticGraph& graph, const std::vector<Tensor>& x_observed,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (x_observed.empty()) throw std::invalid_argument("train: empty observation window");
    int n_obs = static_cast<int>(x_observed.size());
    int d_in = static_cast<int>(x_observed[0].cols());
    std::size_t n = x_observed[0].rows();

    ModelConfig mcfg = cfg.model_config(d_in);
    GraphContext ctx = GraphContext::build(graph, n_obs);

    TrainResult result;
    init_params(result.store, mcfg, cfg.seed);
    Rng noise_rng(cfg.seed * 0x9E3779B97F4A7C15ULL + 1);

    AdamConfig adam;
    adam.lr = cfg.lr;

    std::vector<double> iter_seconds;
    iter_seconds.reserve(cfg.epochs);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        Tensor noise = noise_rng.gaussian({n, static_cast<std::size_t>(cfg.hidden)});

        Tape tape;
        ParamBinding binding(tape, result.store);
        ForwardOutput fwd = model_forward(tape, binding, ctx, x_observed, noise, 0, mcfg);
        ElboVars loss = elbo_loss(tape, x_observed, fwd.x_hat, fwd.posterior, cfg.sigma2,
                                  cfg.kl_weight);

        LossReport rep{loss.recon.value()[0], loss.kl.value()[0], loss.total.value()[0]};
        if (!std::isfinite(rep.total)) {
            double last = result.history.empty() ? rep.total : result.history.back().total;
            throw std::runtime_error("train: loss diverged at epoch " + std::to_string(epoch) +
                                     " (last finite loss " + std::to_string(last) + ")");
        }
        result.history.push_back(rep);

        tape.backward(loss.total);
        binding.accumulate_grads();
        result.store.clip_grad_norm(5.0);
        result.store.adam_update(adam);

        auto t1 = std::chrono::steady_clock::now();
        iter_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    }

    if (!iter_seconds.empty()) {
        std::size_t window = std::min<std::size_t>(50, iter_seconds.size());
        double s = 0.0;
        for (std::size_t i = iter_seconds.size() - window; i < iter_seconds.size(); ++i) {
            s += iter_seconds[i];
        }
        result.seconds_per_iter = s / static_cast<double>(window);
    }
    return result;
}

double full_model_gradcheck(int n_nodes, int n_steps, int hidden, int hyperedges, int n_probes,
                            double h, std::uint64_t seed) {
    Rng rng(seed);
    // ring plus a few random chords
    StaticGraph g;
    g.n_nodes = n_nodes;
    std::set<std::pair<int, int>> seen;
    auto add_edge = [&](int a, int b, double w) {
        auto key = std::make_pair(std::min(a, b), std::max(a, b));
        if (a == b || seen.count(key)) return;
        seen.insert(key);
        g.edges.push_back({a, b, w});
    };
    for (int i = 0; i < n_nodes; ++i) add_edge(i, (i + 1) % n_nodes, rng.uniform(0.2, 1.0));
    for (int extra = 0; extra < n_nodes / 3; ++extra) {
        int a = static_cast<int>(rng.integer(0, n_nodes - 1));
        int b = static_cast<int>(rng.integer(0, n_nodes - 1));
        add_edge(a, b, rng.uniform(0.2, 1.0));
    }

    std::vector<Tensor> x;
    for (int t = 0; t < n_steps; ++t) x.push_back(rng.gaussian({static_cast<std::size_t>(n_nodes), 1}, 0.5));

    ModelConfig mcfg;
    mcfg.d_in = 1;
    mcfg.hidden = hidden;
    mcfg.hyperedges = hyperedges;
    GraphContext ctx = GraphContext::build(g, n_steps);
    Tensor noise = rng.gaussian({static_cast<std::size_t>(n_nodes), static_cast<std::size_t>(hidden)});

    ParamStore store;
    init_params(store, mcfg, seed + 1);

    LossFn loss_fn = [&](ParamStore& s, bool with_grad) {
        Tape tape;
        ParamBinding binding(tape, s);
        ForwardOutput fwd = model_forward(tape, binding, ctx, x, noise, 0, mcfg);
        ElboVars loss = elbo_loss(tape, x, fwd.x_hat, fwd.posterior, 1.0, 1.0);
        if (with_grad) {
            tape.backward(loss.total);
            binding.accumulate_grads();
        }
        return loss.total.value()[0];
    };
    return finite_diff_check(loss_fn, store, n_probes, h, seed + 2);
}

std::vector<Tensor> predict(const StaticGraph& graph, const ParamStore& store,
                            const std::vector<Tensor>& x_observed, int horizon,
                            const TrainConfig& cfg) {
    if (x_observed.empty()) throw std::invalid_argument("predict: empty observation window");
    int n_obs = static_cast<int>(x_observed.size());
    int d_in = static_cast<int>(x_observed[0].cols());
    std::size_t n = x_observed[0].rows();

    ModelConfig mcfg = cfg.model_config(d_in);
    GraphContext ctx = GraphContext::build(graph, n_obs);

    ParamStore local = store;  // ParamBinding needs mutable access for grad slots
    Tape tape;
    ParamBinding binding(tape, local);
    Tensor noise = Tensor::zeros({n, static_cast<std::size_t>(cfg.hidden)});  // posterior mean
    ForwardOutput fwd = model_forward(tape, binding, ctx, x_observed, noise, horizon, mcfg);

    std::vector<Tensor> out;
    out.reserve(fwd.x_hat.size());
    for (const Var& v : fwd.x_hat) out.push_back(v.value());
    return out;
}

}  // namespace phyhsl
