#pragma once

#include <vector>

#include "phyhsl/graph.hpp"
#include "phyhsl/param_store.hpp"
#include "phyhsl/tape.hpp"

namespace phyhsl {

/// A node-embedding sequence: one N x d matrix per timestamp.
using Sequence = std::vector<Var>;

/// Sinusoidal temporal encoding table, TE(t) as row t of a T x d matrix.
/// TE(t)[2i] = sin(t / 10000^(2i/d)), TE(t)[2i+1] = cos(t / 10000^(2i/d)).
Tensor temporal_encoding(int n_steps, int dim);

struct SpatialAttentionParams {
    Var w_query;
    Var w_key;
    Var w_value;
};

/// One attention-weighted spatial convolution layer over the temporal graph:
/// scores are edge weight times cosine similarity of projected embeddings,
/// aggregated over the temporal-graph neighborhood with a tanh residual
/// update.
Sequence spatial_attention_layer(Tape& tape, const TemporalGraph& tg, const Sequence& h,
                                 const SpatialAttentionParams& p);

struct ChebyshevParams {
    Var w0;
    Var w1;
    Var w2;
};

/// Second-order Chebyshev spectral convolution, applied independently at
/// each timestamp slice: sum_m T_m(L_scaled) C W_m with T_0=I, T_1=L,
/// T_2=2L^2-I.
Sequence chebyshev_layer(Tape& tape, const SparseMatrix& l_scaled, const Sequence& c,
                         const ChebyshevParams& p);

struct FuseParams {
    Var w1;
    Var b1;
    Var w2;
    Var b2;
};

/// q_t = MLP([c_t, h_t]) + TE(t), MLP is 2d -> d with tanh hidden layer.
Sequence fuse_and_embed(Tape& tape, const Sequence& h_final, const Sequence& c_final,
                        const Tensor& te, const FuseParams& p);

struct PoolParams {
    Var v_q1;  // 1 x d
    Var v_q2;  // d x 1
};

/// Per-node softmax attention over timestamps followed by a gated tanh
/// readout; output keeps the per-timestep sequence shape.
Sequence attention_pool(Tape& tape, const Sequence& q, const PoolParams& p);

struct EncoderConfig {
    int n_layers = 2;  // spatial and spectral layer count
    int hidden = 16;
};

/// Full domain-relation-capture encoder: input projection, K spatial
/// attention layers, K Chebyshev layers, temporal-embedding fusion and
/// attention pooling.
Sequence encode(Tape& tape, const TemporalGraph& tg, const SparseMatrix& l_scaled,
                const Sequence& x, const ParamBinding& params, const EncoderConfig& cfg);

}  // namespace phyhsl
