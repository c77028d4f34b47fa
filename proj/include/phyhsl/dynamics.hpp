#pragma once

#include <functional>
#include <vector>

#include "phyhsl/encoder.hpp"
#include "phyhsl/graph.hpp"
#include "phyhsl/param_store.hpp"
#include "phyhsl/tape.hpp"

namespace phyhsl {

struct PosteriorParams {
    Var mu;       // N x d
    Var log_var;  // N x d
};

struct PosteriorMlpParams {
    Var mu_w1, mu_b1, mu_w2, mu_b2;
    Var var_w1, var_b1, var_w2, var_b2;
};

/// Mean-pool F over time, then mu = MLP_m(fbar), log_var = MLP_v(fbar).
PosteriorParams posterior_params(Tape& tape, const Sequence& f, const PosteriorMlpParams& p);

/// z0 = mu + exp(log_var / 2) ⊙ noise, noise injected for determinism.
Var reparameterize(Tape& tape, const PosteriorParams& p, const Tensor& noise);

struct OdeFuncParams {
    Var w1, b1, w2, b2;
};

/// Graph-diffusion-informed vector field:
/// dz_i/dt = MLP_g([z_i, sum_j Ahat_ij z_j]) with Ahat row-normalized.
Var ode_derivative_g(Tape& tape, Var z, const SparseMatrix& a_hat, const OdeFuncParams& p);

/// Classical RK4 over an integer grid 0..n_steps with unit spacing and
/// `substeps` steps per unit; returns states at every grid point (n_steps+1
/// entries, index 0 = z0). Differentiable through the unrolled solver.
std::vector<Var> ode_solve(Tape& tape, Var z0, const std::function<Var(Var)>& g, int n_steps,
                           int substeps);

/// Koopman rollout over the observed latent window plus an H-step forecast:
/// ztilde^0 = f^0, ztilde^t = f^{t-1} K inside the window (teacher-forced),
/// then recursive K powers from the last observation. Row convention: node
/// states are rows, K right-multiplies.
std::vector<Var> koopman_propagate(Tape& tape, const Sequence& f, Var k, int horizon);

struct DecoderParams {
    Var w1, b1, w2, b2;
};

/// x_hat_t = MLP(tanh([z_t, ztilde_t])), two layers 2d -> d -> D_in.
/// A disabled branch contributes a zero block of matching shape.
std::vector<Var> fuse_decode(Tape& tape, const std::vector<Var>& z_phys,
                             const std::vector<Var>& z_koop, const DecoderParams& p);

/// Least-squares one-step fit K of f^{t+1} = f^t K over stacked snapshot
/// pairs (DMD-style diagnostic oracle for the learned Koopman matrix).
Tensor dmd_fit(const std::vector<Tensor>& snapshots);

}  // namespace phyhsl
