#pragma once

#include <cstdint>
#include <vector>

#include "phyhsl/dhsl.hpp"
#include "phyhsl/dynamics.hpp"
#include "phyhsl/encoder.hpp"
#include "phyhsl/graph.hpp"
#include "phyhsl/param_store.hpp"

namespace phyhsl {

struct ModelConfig {
    int d_in = 1;
    int hidden = 16;
    int hyperedges = 8;
    int encoder_layers = 2;
    int dhsl_layers = 2;
    int substeps = 4;
    bool use_phys = true;
    bool use_koop = true;
    bool use_dhsl = true;
    bool normalize_incidence = false;
};

/// Registers every learnable tensor of the model under its stable name.
/// Xavier-uniform weights, zero biases, Koopman matrix at identity.
void init_params(ParamStore& store, const ModelConfig& cfg, std::uint64_t seed);

/// Precomputed graph-side context shared across forward passes.
struct GraphContext {
    TemporalGraph temporal;
    LaplacianBundle laplacian;
    SparseMatrix l_scaled;
    SparseMatrix a_hat;  // row-normalized adjacency for the ODE field

    static GraphContext build(const StaticGraph& g, int n_steps);
};

struct ForwardOutput {
    std::vector<Var> x_hat;  // n_obs + horizon entries, each N x D_in
    PosteriorParams posterior;
    Sequence embedding;       // U from the encoder
    Sequence refined;         // F after DHSL (== U when DHSL disabled)
    Sequence incidence;       // last-layer Lambda (empty when DHSL disabled)
    std::vector<Var> z_phys;  // empty when the physics branch is off
    std::vector<Var> z_koop;  // empty when the Koopman branch is off
};

/// One full forward pass: encoder -> DHSL -> variational init -> dual
/// dynamics -> fusion decoder. `x_window` holds the observed states (one
/// N x D_in matrix per timestamp); `noise` is the reparameterization draw.
ForwardOutput model_forward(Tape& tape, const ParamBinding& params, const GraphContext& ctx,
                            const std::vector<Tensor>& x_window, const Tensor& noise, int horizon,
                            const ModelConfig& cfg);

}  // namespace phyhsl
