#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "phyhsl/graph.hpp"
#include "phyhsl/tensor.hpp"

namespace phyhsl {

enum class DynamicsKind { Heat, Mutualistic, Sis };

DynamicsKind dynamics_kind_from_string(const std::string& s);
std::string to_string(DynamicsKind k);

struct DynamicsSpec {
    DynamicsKind kind = DynamicsKind::Heat;
    std::map<std::string, double> parameters;  // kind-specific, see defaults()
    double t_end = 9.75;                       // 40 samples at dt = 0.25
    int n_samples = 40;
    double noise_std = 0.01;
    std::uint64_t seed = 1;

    static std::map<std::string, double> defaults(DynamicsKind k);
    void fill_defaults();
    void validate() const;
    double param(const std::string& name) const;
};

/// Observed node states: one N x D_in matrix per sample time.
struct StateSeries {
    std::vector<Tensor> states;
    double dt = 0.0;

    int n_steps() const { return static_cast<int>(states.size()); }
};

/// Watts-Strogatz small-world graph: ring lattice with k neighbors per
/// node, each edge rewired with probability p; edge count is exactly n*k/2.
StaticGraph watts_strogatz(int n, int k, double p, std::uint64_t seed);

/// Integrates the chosen dynamics with RK4 at 20 substeps per sample
/// interval, then adds i.i.d. Gaussian observation noise.
StateSeries simulate(const StaticGraph& g, const DynamicsSpec& spec);

/// Instantaneous derivative of the governing equations (exposed for tests).
std::vector<double> dynamics_derivative(const StaticGraph& g, const DynamicsSpec& spec,
                                        const std::vector<double>& x);

/// Writes edges.csv, states.csv and meta.json into dir.
void export_dataset(const StateSeries& series, const StaticGraph& g, const DynamicsSpec& spec,
                    const std::string& dir);

struct Dataset {
    StaticGraph graph;
    StateSeries series;
};
Dataset import_dataset(const std::string& dir);

}  // namespace phyhsl
