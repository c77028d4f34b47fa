#include "phyhsl/dhsl.hpp"

#include <stdexcept>
#include <string>

namespace phyhsl {

Sequence incidence_from_states(Tape& tape, const Sequence& u, Var w_lambda, bool normalize) {
    Sequence lambda(u.size());
    for (std::size_t t = 0; t < u.size(); ++t) {
        Var l = matmul(u[t], w_lambda);
        if (normalize) l = softmax_rows(l);
        lambda[t] = l;
    }
    return lambda;
}

HypergraphConvOut hypergraph_conv_layer(Tape& tape, const Sequence& lambda, const Sequence& u,
                                        Var w_edge) {
    if (lambda.size() != u.size()) throw std::invalid_argument("hypergraph_conv_layer: T mismatch");
    HypergraphConvOut out;
    out.hyperedges.resize(u.size());
    out.nodes.resize(u.size());
    for (std::size_t t = 0; t < u.size(); ++t) {
        Var agg = matmul(transpose(lambda[t]), u[t]);  // I x d, node -> edge
        Var e = add(tanh_op(matmul(w_edge, agg)), agg);
        out.hyperedges[t] = e;
        out.nodes[t] = matmul(lambda[t], e);  // edge -> node broadcast
    }
    return out;
}

Sequence dhsl_stack(Tape& tape, const Sequence& u, const ParamBinding& params,
                    const DhslConfig& cfg, Sequence* last_incidence) {
    if (cfg.n_layers < 1) throw std::invalid_argument("dhsl_stack: need layers >= 1");
    Sequence f = u;
    for (int l = 0; l < cfg.n_layers; ++l) {
        std::string prefix = "dhsl." + std::to_string(l) + ".";
        Sequence lambda =
            incidence_from_states(tape, f, params[prefix + "Wlambda"], cfg.normalize_incidence);
        if (last_incidence && l + 1 == cfg.n_layers) *last_incidence = lambda;
        f = hypergraph_conv_layer(tape, lambda, f, params[prefix + "WE"]).nodes;
    }
    return f;
}

}  // namespace phyhsl
