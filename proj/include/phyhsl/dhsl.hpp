#pragma once

#include <vector>

#include "phyhsl/encoder.hpp"
#include "phyhsl/param_store.hpp"
#include "phyhsl/tape.hpp"

namespace phyhsl {

struct DhslLayerParams {
    Var w_lambda;  // d x I
    Var w_edge;    // I x I
};

struct DhslConfig {
    int n_layers = 2;
    int n_hyperedges = 8;
    /// Optional softmax-over-hyperedges normalization of the incidence
    /// matrix; off by default (incidence entries stay real-valued).
    bool normalize_incidence = false;
};

/// Low-rank incidence generation: Lambda^t = U^t W_lambda per timestamp.
Sequence incidence_from_states(Tape& tape, const Sequence& u, Var w_lambda,
                               bool normalize = false);

/// One hypergraph convolution: per timestamp, B = Lambda^T U,
/// E = tanh(W_E B) + B (hyperedge embeddings), F = Lambda E (node update).
struct HypergraphConvOut {
    Sequence hyperedges;  // T entries, each I x d
    Sequence nodes;       // T entries, each N x d
};
HypergraphConvOut hypergraph_conv_layer(Tape& tape, const Sequence& lambda, const Sequence& u,
                                        Var w_edge);

/// Stacks incidence generation + hypergraph convolution; each layer owns
/// its W_lambda and W_E and re-derives the incidence from updated states.
/// When last_incidence is given it receives the final layer's Lambda
/// sequence (for --dump-incidence).
Sequence dhsl_stack(Tape& tape, const Sequence& u, const ParamBinding& params,
                    const DhslConfig& cfg, Sequence* last_incidence = nullptr);

}  // namespace phyhsl
