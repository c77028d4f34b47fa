#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phyhsl/tensor.hpp"

namespace phyhsl {

/// Static weighted graph; undirected by default. Node indices are dense
/// integers in [0, n_nodes).
struct StaticGraph {
    struct Edge {
        int src;
        int dst;
        double weight;
    };

    int n_nodes = 0;
    std::vector<Edge> edges;
    bool directed = false;

    void validate() const;

    /// Neighbor lists (both directions for undirected graphs).
    std::vector<std::vector<std::pair<int, double>>> adjacency() const;

    Tensor dense_adjacency() const;

    /// Row-normalized adjacency: Ahat_ij = A_ij / deg(i), zero rows for
    /// isolated nodes.
    Tensor row_normalized_adjacency() const;

    /// CSV with header src,dst,weight; node count inferred as max index + 1
    /// unless given.
    static StaticGraph load_csv(const std::string& path, std::optional<int> n_nodes = {});
    void save_csv(const std::string& path) const;
};

/// Neighbor in the temporal graph: node j observed at timestamp t.
struct TemporalNeighbor {
    int node;
    int t;
    double weight;
};

/// Temporal graph over (node, timestamp) pairs: weighted spatial edges
/// within a timestamp, unit temporal edges (i,t) -> (i,t+1).
struct TemporalGraph {
    int n_nodes = 0;
    int n_steps = 0;
    // spatial[t][i] = weighted neighbors of node i at timestamp t
    std::vector<std::vector<std::vector<std::pair<int, double>>>> spatial;

    /// Full temporal-graph neighborhood of (i, t): spatial neighbors at t
    /// plus the forward temporal neighbor (i, t+1) when it exists.
    std::vector<TemporalNeighbor> neighbors(int node, int t) const;

    /// Adjacency entry A((i,t),(j,t')) per the three-case definition.
    double adjacency(int i, int t, int j, int t_prime) const;

    std::size_t temporal_edge_count() const {
        return static_cast<std::size_t>(n_nodes) * (n_steps - 1);
    }

    /// Dense spatial weight matrix at timestamp t (zero diagonal).
    Tensor spatial_matrix(int t) const;

    /// Per-timestamp weight override hook; weights default to the static
    /// graph's.
    void override_spatial_weights(int t, const Tensor& weights);
};

TemporalGraph build_temporal_adjacency(const StaticGraph& g, int n_steps);

struct PowerIterResult {
    double value = 0.0;
    bool converged = false;
};

/// Dominant eigenvalue of a symmetric PSD matrix via power iteration with a
/// seeded start vector.
PowerIterResult power_iteration_lambda_max(const Tensor& m, int iters = 1000, double tol = 1e-6,
                                           std::uint64_t seed = 7);

/// Normalized Laplacian of the static spatial graph plus the Chebyshev
/// rescaling L_scaled = 2L/lambda_max - I.
struct LaplacianBundle {
    Tensor laplacian;
    double lambda_max = 0.0;
    Tensor scaled;
    bool had_isolated_nodes = false;
    bool power_iteration_converged = true;
};

LaplacianBundle normalized_laplacian(const StaticGraph& g);

}  // namespace phyhsl
