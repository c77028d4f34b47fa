#include "phyhsl/encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace phyhsl {

Tensor temporal_encoding(int n_steps, int dim) {
    Tensor te = Tensor::zeros({static_cast<std::size_t>(n_steps), static_cast<std::size_t>(dim)});
    for (int t = 0; t < n_steps; ++t) {
        double dt = static_cast<double>(t);  // offset from sequence start in unit steps
        for (int i = 0; 2 * i < dim; ++i) {
            double freq = std::pow(10000.0, 2.0 * i / static_cast<double>(dim));
            te(t, 2 * i) = std::sin(dt / freq);
            if (2 * i + 1 < dim) te(t, 2 * i + 1) = std::cos(dt / freq);
        }
    }
    return te;
}

Sequence spatial_attention_layer(Tape& tape, const TemporalGraph& tg, const Sequence& h,
                                 const SpatialAttentionParams& p) {
    int n_steps = static_cast<int>(h.size());
    if (n_steps != tg.n_steps) throw std::invalid_argument("spatial_attention_layer: T mismatch");

    std::vector<Var> q(n_steps), k(n_steps), v(n_steps);
    for (int t = 0; t < n_steps; ++t) {
        q[t] = matmul(h[t], p.w_query);
        k[t] = matmul(h[t], p.w_key);
        v[t] = matmul(h[t], p.w_value);
    }

    Sequence out(n_steps);
    for (int t = 0; t < n_steps; ++t) {
        // spatial edges at timestamp t: score = w_ij * cos(Wq h_i, Wk h_j)
        Var scores = mask_mul(cosine_matrix(q[t], k[t]), tg.spatial_matrix(t));
        Var agg = matmul(scores, v[t]);
        // forward temporal edge (i,t) -> (i,t+1), weight 1
        if (t + 1 < n_steps) {
            Var c = cosine_rows(q[t], k[t + 1]);
            agg = add(agg, row_scale(c, v[t + 1]));
        }
        out[t] = add(h[t], tanh_op(agg));
    }
    return out;
}

Sequence chebyshev_layer(Tape& tape, const SparseMatrix& l_scaled, const Sequence& c,
                         const ChebyshevParams& p) {
    Sequence out(c.size());
    for (std::size_t t = 0; t < c.size(); ++t) {
        Var c0 = c[t];                                    // T_0 = I
        Var c1 = spmm(l_scaled, c0);                      // T_1 = L
        Var c2 = sub(scale(spmm(l_scaled, c1), 2.0), c0); // T_2 = 2L^2 - I
        out[t] = add(add(matmul(c0, p.w0), matmul(c1, p.w1)), matmul(c2, p.w2));
    }
    return out;
}

Sequence fuse_and_embed(Tape& tape, const Sequence& h_final, const Sequence& c_final,
                        const Tensor& te, const FuseParams& p) {
    if (h_final.size() != c_final.size()) throw std::invalid_argument("fuse_and_embed: T mismatch");
    Sequence out(h_final.size());
    std::size_t d = te.cols();
    for (std::size_t t = 0; t < h_final.size(); ++t) {
        Var cat = concat_cols(c_final[t], h_final[t]);
        Var hidden = tanh_op(linear(cat, p.w1, p.b1));
        Var q = linear(hidden, p.w2, p.b2);
        Tensor te_row = Tensor::zeros({1, d});
        for (std::size_t j = 0; j < d; ++j) te_row(0, j) = te(t, j);
        out[t] = add_rowvec(q, tape.constant(std::move(te_row)));
    }
    return out;
}

Sequence attention_pool(Tape& tape, const Sequence& q, const PoolParams& p) {
    if (q.empty()) throw std::invalid_argument("attention_pool: empty sequence (T=0)");
    std::vector<Var> scores(q.size());
    for (std::size_t t = 0; t < q.size(); ++t) {
        scores[t] = matmul(tanh_op(q[t]), p.v_q2);  // N x 1
    }
    Var alpha = softmax_rows(concat_cols(scores));  // N x T, rows sum to 1
    Sequence out(q.size());
    for (std::size_t t = 0; t < q.size(); ++t) {
        Var alpha_t = slice_cols(alpha, t, 1);
        out[t] = tanh_op(row_scale(alpha_t, mul_rowvec(q[t], p.v_q1)));
    }
    return out;
}

Sequence encode(Tape& tape, const TemporalGraph& tg, const SparseMatrix& l_scaled,
                const Sequence& x, const ParamBinding& params, const EncoderConfig& cfg) {
    // shared learned D_in -> d input projection defines h^(0) and C^(0)
    Sequence h(x.size()), c(x.size());
    Var w_in = params["input.W"];
    Var b_in = params["input.b"];
    for (std::size_t t = 0; t < x.size(); ++t) {
        h[t] = linear(x[t], w_in, b_in);
        c[t] = h[t];
    }

    for (int k = 0; k < cfg.n_layers; ++k) {
        std::string sp = "enc.spatial." + std::to_string(k) + ".";
        SpatialAttentionParams sap{params[sp + "Wq"], params[sp + "Wk"], params[sp + "Wv"]};
        h = spatial_attention_layer(tape, tg, h, sap);

        std::string cp = "enc.cheb." + std::to_string(k) + ".";
        ChebyshevParams chp{params[cp + "W0"], params[cp + "W1"], params[cp + "W2"]};
        c = chebyshev_layer(tape, l_scaled, c, chp);
    }

    Tensor te = temporal_encoding(static_cast<int>(x.size()), cfg.hidden);
    FuseParams fp{params["enc.fuse.W1"], params["enc.fuse.b1"], params["enc.fuse.W2"],
                  params["enc.fuse.b2"]};
    Sequence q = fuse_and_embed(tape, h, c, te, fp);

    PoolParams pp{params["enc.pool.vq1"], params["enc.pool.vq2"]};
    return attention_pool(tape, q, pp);
}

}  // namespace phyhsl
