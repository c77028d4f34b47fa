#include "phyhsl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace phyhsl {

void StaticGraph::validate() const {
    for (const Edge& e : edges) {
        if (e.src == e.dst) throw std::invalid_argument("StaticGraph: self-loop at node " +
                                                        std::to_string(e.src));
        if (e.src < 0 || e.dst < 0 || e.src >= n_nodes || e.dst >= n_nodes) {
            throw std::invalid_argument("StaticGraph: edge index out of range");
        }
        if (!std::isfinite(e.weight) || e.weight < 0.0) {
            throw std::invalid_argument("StaticGraph: invalid edge weight");
        }
    }
}

std::vector<std::vector<std::pair<int, double>>> StaticGraph::adjacency() const {
    std::vector<std::vector<std::pair<int, double>>> adj(n_nodes);
    for (const Edge& e : edges) {
        adj[e.src].emplace_back(e.dst, e.weight);
        if (!directed) adj[e.dst].emplace_back(e.src, e.weight);
    }
    return adj;
}

Tensor StaticGraph::dense_adjacency() const {
    Tensor a = Tensor::zeros({static_cast<std::size_t>(n_nodes), static_cast<std::size_t>(n_nodes)});
    for (const Edge& e : edges) {
        a(e.src, e.dst) = e.weight;
        if (!directed) a(e.dst, e.src) = e.weight;
    }
    return a;
}

Tensor StaticGraph::row_normalized_adjacency() const {
    Tensor a = dense_adjacency();
    std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) deg += a(i, j);
        if (deg > 0.0)
            for (std::size_t j = 0; j < n; ++j) a(i, j) /= deg;
    }
    return a;
}

StaticGraph StaticGraph::load_csv(const std::string& path, std::optional<int> n_nodes) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    StaticGraph g;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty edge file " + path);
    int max_idx = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string a, b, w;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, w, ',')) {
            throw std::runtime_error("malformed edge row in " + path + ": " + line);
        }
        StaticGraph::Edge e{std::stoi(a), std::stoi(b), std::stod(w)};
        max_idx = std::max({max_idx, e.src, e.dst});
        g.edges.push_back(e);
    }
    g.n_nodes = n_nodes.value_or(max_idx + 1);
    g.validate();
    return g;
}

void StaticGraph::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "src,dst,weight\n";
    out << std::setprecision(17);
    for (const Edge& e : edges) out << e.src << "," << e.dst << "," << e.weight << "\n";
}

std::vector<TemporalNeighbor> TemporalGraph::neighbors(int node, int t) const {
    std::vector<TemporalNeighbor> out;
    for (const auto& [j, w] : spatial[t][node]) out.push_back({j, t, w});
    if (t + 1 < n_steps) out.push_back({node, t + 1, 1.0});
    return out;
}

double TemporalGraph::adjacency(int i, int t, int j, int t_prime) const {
    if (t_prime == t) {
        for (const auto& [jj, w] : spatial[t][i])
            if (jj == j) return w;
        return 0.0;
    }
    if (i == j && t_prime == t + 1) return 1.0;
    return 0.0;
}

Tensor TemporalGraph::spatial_matrix(int t) const {
    std::size_t n = static_cast<std::size_t>(n_nodes);
    Tensor m = Tensor::zeros({n, n});
    for (int i = 0; i < n_nodes; ++i)
        for (const auto& [j, w] : spatial[t][i]) m(i, j) = w;
    return m;
}

void TemporalGraph::override_spatial_weights(int t, const Tensor& weights) {
    for (int i = 0; i < n_nodes; ++i)
        for (auto& [j, w] : spatial[t][i]) w = weights(i, j);
}

TemporalGraph build_temporal_adjacency(const StaticGraph& g, int n_steps) {
    if (n_steps < 1) throw std::invalid_argument("build_temporal_adjacency: need n_steps >= 1");
    g.validate();
    TemporalGraph tg;
    tg.n_nodes = g.n_nodes;
    tg.n_steps = n_steps;
    auto adj = g.adjacency();
    tg.spatial.assign(n_steps, adj);
    return tg;
}

PowerIterResult power_iteration_lambda_max(const Tensor& m, int iters, double tol,
                                           std::uint64_t seed) {
    std::size_t n = m.rows();
    if (n != m.cols()) throw std::invalid_argument("power iteration: matrix not square");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = uni(gen);

    auto normalize = [&](std::vector<double>& x) {
        double s = 0.0;
        for (double a : x) s += a * a;
        s = std::sqrt(s);
        if (s > 0.0)
            for (auto& a : x) a /= s;
        return s;
    };
    normalize(v);

    PowerIterResult res;
    for (int it = 0; it < iters; ++it) {
        std::vector<double> w(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) w[i] += m(i, j) * v[j];
        // Rayleigh quotient with the (normalized) previous vector
        double rq = 0.0;
        for (std::size_t i = 0; i < n; ++i) rq += v[i] * w[i];
        // for symmetric M, |rq - lambda| <= ||Mv - rq v||, so this residual
        // test makes tol a bound on the eigenvalue error itself
        double resid = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = w[i] - rq * v[i];
            resid += r * r;
        }
        res.value = rq;
        if (std::sqrt(resid) < tol) {
            res.converged = true;
            return res;
        }
        if (normalize(w) == 0.0) {
            res.value = 0.0;
            res.converged = true;
            return res;
        }
        v = w;
    }
    res.converged = false;
    return res;
}

LaplacianBundle normalized_laplacian(const StaticGraph& g) {
    if (g.directed) throw std::invalid_argument("normalized_laplacian: undirected graphs only");
    g.validate();
    std::size_t n = static_cast<std::size_t>(g.n_nodes);
    Tensor a = g.dense_adjacency();

    std::vector<double> dinv_sqrt(n, 0.0);
    LaplacianBundle lb;
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) deg += a(i, j);
        if (deg > 0.0) {
            dinv_sqrt[i] = 1.0 / std::sqrt(deg);
        } else {
            lb.had_isolated_nodes = true;
        }
    }
    if (lb.had_isolated_nodes) {
        std::cerr << "warning: graph has isolated nodes; their Laplacian rows are zeroed\n";
    }

    Tensor l = Tensor::identity(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) l(i, j) -= dinv_sqrt[i] * a(i, j) * dinv_sqrt[j];
    // isolated nodes keep the identity diagonal off: their row is all-zero
    for (std::size_t i = 0; i < n; ++i)
        if (dinv_sqrt[i] == 0.0) l(i, i) = 0.0;

    PowerIterResult pi = power_iteration_lambda_max(l);
    lb.power_iteration_converged = pi.converged;
    // lambda_max fallback: 2 is the universal upper bound for normalized
    // Laplacians, keeps L_scaled well-defined on (near-)edgeless graphs.
    lb.lambda_max = pi.value < 1e-9 ? 2.0 : pi.value;

    Tensor scaled = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            scaled(i, j) = 2.0 * l(i, j) / lb.lambda_max - (i == j ? 1.0 : 0.0);
        }
    lb.laplacian = std::move(l);
    lb.scaled = std::move(scaled);
    return lb;
}

}  // namespace phyhsl
