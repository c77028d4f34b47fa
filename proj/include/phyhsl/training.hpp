#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phyhsl/model.hpp"
#include "phyhsl/param_store.hpp"

namespace phyhsl {

struct TrainConfig {
    int epochs = 300;
    double lr = 5e-3;
    double sigma2 = 1.0;     // observation variance in the reconstruction term
    double kl_weight = 1.0;
    std::uint64_t seed = 42;
    double split_fraction = 0.75;
    bool use_phys = true;
    bool use_koop = true;
    bool use_dhsl = true;
    int horizon = 10;
    int hidden = 16;
    int hyperedges = 8;
    int encoder_layers = 2;
    int dhsl_layers = 2;
    int substeps = 4;

    void validate() const;
    ModelConfig model_config(int d_in) const;

    static TrainConfig from_json_file(const std::string& path);
    std::string to_json() const;
};

struct LossReport {
    double recon = 0.0;
    double kl = 0.0;
    double total = 0.0;
};

/// Closed-form KL(q || N(0,I)) for a diagonal Gaussian posterior, summed
/// over nodes and dims: 1/2 sum(exp(log_var) + mu^2 - 1 - log_var).
Var kl_diag_gaussian(Tape& tape, const PosteriorParams& p);

/// recon = sum_t ||x_t - x_hat_t||^2 over the window;
/// total = recon/(2 sigma2) + kl_weight * KL.
struct ElboVars {
    Var recon;
    Var kl;
    Var total;
};
ElboVars elbo_loss(Tape& tape, const std::vector<Tensor>& x, const std::vector<Var>& x_hat,
                   const PosteriorParams& posterior, double sigma2, double kl_weight);

struct TimeSplit {
    int n_observe;  // indices 0 .. n_observe-1
    int n_predict;  // indices n_observe .. end
};

/// Contiguous prefix/suffix split at floor(fraction * T); both parts must
/// be non-empty.
TimeSplit time_split(int n_steps, double fraction);

struct TrainResult {
    ParamStore store;
    std::vector<LossReport> history;
    double seconds_per_iter = 0.0;  // mean wall time over the final 50 iterations
};

/// Full-batch variational training on the observed window. Deterministic
/// given the seed; aborts on divergence naming the epoch.
TrainResult train(const StaticGraph& graph, const std::vector<Tensor>& x_observed,
                  const TrainConfig& cfg);

/// Deterministic prediction with a trained store: forward with zero
/// reparameterization noise, returning the decoded states on the full grid
/// (observed window + horizon).
std::vector<Tensor> predict(const StaticGraph& graph, const ParamStore& store,
                            const std::vector<Tensor>& x_observed, int horizon,
                            const TrainConfig& cfg);

/// Finite-difference check of the full training loss (encoder, DHSL, both
/// dynamics branches, decoder, KL) on a small random instance. Returns the
/// worst relative gradient error over n_probes sampled coordinates.
double full_model_gradcheck(int n_nodes, int n_steps, int hidden, int hyperedges, int n_probes,
                            double h, std::uint64_t seed);

}  // namespace phyhsl
