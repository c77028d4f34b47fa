#include "phyhsl/model.hpp"

#include <string>

#include "phyhsl/rng.hpp"

namespace phyhsl {

void init_params(ParamStore& store, const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    std::size_t d = static_cast<std::size_t>(cfg.hidden);
    std::size_t din = static_cast<std::size_t>(cfg.d_in);
    std::size_t ne = static_cast<std::size_t>(cfg.hyperedges);

    auto weight = [&](const std::string& name, std::size_t in, std::size_t out) {
        store.add(name, rng.xavier(in, out));
    };
    auto bias = [&](const std::string& name, std::size_t n) {
        store.add(name, Tensor::zeros({1, n}));
    };

    weight("input.W", din, d);
    bias("input.b", d);

    for (int k = 0; k < cfg.encoder_layers; ++k) {
        std::string sp = "enc.spatial." + std::to_string(k) + ".";
        weight(sp + "Wq", d, d);
        weight(sp + "Wk", d, d);
        weight(sp + "Wv", d, d);
        std::string cp = "enc.cheb." + std::to_string(k) + ".";
        weight(cp + "W0", d, d);
        weight(cp + "W1", d, d);
        weight(cp + "W2", d, d);
    }

    weight("enc.fuse.W1", 2 * d, d);
    bias("enc.fuse.b1", d);
    weight("enc.fuse.W2", d, d);
    bias("enc.fuse.b2", d);
    // Pool gates are elementwise, not fan-in/fan-out maps; v_q1 starts wide
    // so the softmax's 1/T factor leaves the pooled embedding at unit scale.
    store.add("enc.pool.vq1", rng.uniform_tensor({1, d}, -20.0, 20.0));
    store.add("enc.pool.vq2", rng.uniform_tensor({d, 1}, -0.5, 0.5));

    for (int l = 0; l < cfg.dhsl_layers; ++l) {
        std::string prefix = "dhsl." + std::to_string(l) + ".";
        weight(prefix + "Wlambda", d, ne);
        weight(prefix + "WE", ne, ne);
    }

    for (const std::string& head : {std::string("post.mu."), std::string("post.var.")}) {
        weight(head + "W1", d, d);
        bias(head + "b1", d);
        weight(head + "W2", d, d);
        bias(head + "b2", d);
    }

    weight("ode.W1", 2 * d, d);
    bias("ode.b1", d);
    weight("ode.W2", d, d);
    bias("ode.b2", d);

    store.add("koop.K", Tensor::identity(d));

    weight("dec.W1", 2 * d, d);
    bias("dec.b1", d);
    weight("dec.W2", d, din);
    bias("dec.b2", din);
}

GraphContext GraphContext::build(const StaticGraph& g, int n_steps) {
    GraphContext ctx;
    ctx.temporal = build_temporal_adjacency(g, n_steps);
    ctx.laplacian = normalized_laplacian(g);
    ctx.l_scaled = SparseMatrix::from_dense(ctx.laplacian.scaled, 1e-15);
    ctx.a_hat = SparseMatrix::from_dense(g.row_normalized_adjacency(), 0.0);
    return ctx;
}

ForwardOutput model_forward(Tape& tape, const ParamBinding& params, const GraphContext& ctx,
                            const std::vector<Tensor>& x_window, const Tensor& noise, int horizon,
                            const ModelConfig& cfg) {
    int n_obs = static_cast<int>(x_window.size());
    int n_total = n_obs + horizon;
    std::size_t n = x_window[0].rows();
    std::size_t d = static_cast<std::size_t>(cfg.hidden);

    Sequence x(n_obs);
    for (int t = 0; t < n_obs; ++t) x[t] = tape.constant(x_window[t]);

    EncoderConfig ecfg{cfg.encoder_layers, cfg.hidden};
    Sequence u = encode(tape, ctx.temporal, ctx.l_scaled, x, params, ecfg);

    Sequence f = u;
    Sequence incidence;
    if (cfg.use_dhsl) {
        DhslConfig dcfg{cfg.dhsl_layers, cfg.hyperedges, cfg.normalize_incidence};
        f = dhsl_stack(tape, u, params, dcfg, &incidence);
    }

    PosteriorMlpParams pmp{params["post.mu.W1"],  params["post.mu.b1"],  params["post.mu.W2"],
                           params["post.mu.b2"],  params["post.var.W1"], params["post.var.b1"],
                           params["post.var.W2"], params["post.var.b2"]};
    PosteriorParams posterior = posterior_params(tape, f, pmp);

    ForwardOutput out;
    out.posterior = posterior;
    out.embedding = u;
    out.refined = f;
    out.incidence = incidence;

    std::vector<Var> z_phys, z_koop;
    if (cfg.use_phys) {
        Var z0 = reparameterize(tape, posterior, noise);
        OdeFuncParams ofp{params["ode.W1"], params["ode.b1"], params["ode.W2"], params["ode.b2"]};
        auto g = [&](Var z) { return ode_derivative_g(tape, z, ctx.a_hat, ofp); };
        z_phys = ode_solve(tape, z0, g, n_total - 1, cfg.substeps);
        out.z_phys = z_phys;
    } else {
        Var zero = tape.constant(Tensor::zeros({n, d}));
        z_phys.assign(n_total, zero);
    }

    if (cfg.use_koop) {
        z_koop = koopman_propagate(tape, f, params["koop.K"], horizon);
        out.z_koop = z_koop;
    } else {
        Var zero = tape.constant(Tensor::zeros({n, d}));
        z_koop.assign(n_total, zero);
    }

    DecoderParams dp{params["dec.W1"], params["dec.b1"], params["dec.W2"], params["dec.b2"]};
    out.x_hat = fuse_decode(tape, z_phys, z_koop, dp);
    return out;
}

}  // namespace phyhsl
