#include "phyhsl/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "phyhsl/rng.hpp"

namespace phyhsl {

DynamicsKind dynamics_kind_from_string(const std::string& s) {
    if (s == "heat") return DynamicsKind::Heat;
    if (s == "mutualistic") return DynamicsKind::Mutualistic;
    if (s == "sis") return DynamicsKind::Sis;
    throw std::invalid_argument("unknown dynamics kind: " + s);
}

std::string to_string(DynamicsKind k) {
    switch (k) {
        case DynamicsKind::Heat: return "heat";
        case DynamicsKind::Mutualistic: return "mutualistic";
        case DynamicsKind::Sis: return "sis";
    }
    return "?";
}

std::map<std::string, double> DynamicsSpec::defaults(DynamicsKind k) {
    switch (k) {
        case DynamicsKind::Heat: return {{"kappa", 0.5}};
        case DynamicsKind::Mutualistic: return {{"b", 0.1}, {"a", 0.2}, {"c", 3.0}};
        case DynamicsKind::Sis: return {{"beta", 0.5}, {"delta", 0.3}};
    }
    return {};
}

void DynamicsSpec::fill_defaults() {
    for (const auto& [name, v] : defaults(kind)) {
        parameters.try_emplace(name, v);
    }
}

void DynamicsSpec::validate() const {
    if (n_samples < 2) throw std::invalid_argument("DynamicsSpec: need n_samples >= 2");
    if (noise_std < 0.0) throw std::invalid_argument("DynamicsSpec: negative noise_std");
    if (t_end <= 0.0) throw std::invalid_argument("DynamicsSpec: t_end must be positive");
    for (const auto& [name, v] : defaults(kind)) {
        if (!parameters.count(name)) {
            throw std::invalid_argument("DynamicsSpec: missing parameter " + name + " for " +
                                        to_string(kind));
        }
    }
}

double DynamicsSpec::param(const std::string& name) const {
    auto it = parameters.find(name);
    if (it == parameters.end()) throw std::out_of_range("DynamicsSpec: no parameter " + name);
    return it->second;
}

StaticGraph watts_strogatz(int n, int k, double p, std::uint64_t seed) {
    if (k < 1 || k % 2 != 0 || k >= n) {
        throw std::invalid_argument("watts_strogatz: k must be even and 0 < k < n");
    }
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("watts_strogatz: p must be in [0,1]");

    Rng rng(seed);
    std::set<std::pair<int, int>> edge_set;
    auto key = [](int a, int b) { return std::make_pair(std::min(a, b), std::max(a, b)); };

    // ring lattice: node i connects to its k/2 clockwise neighbors
    for (int i = 0; i < n; ++i)
        for (int j = 1; j <= k / 2; ++j) edge_set.insert(key(i, (i + j) % n));

    // rewire each lattice edge with probability p, keeping the source end
    std::vector<std::pair<int, int>> lattice(edge_set.begin(), edge_set.end());
    for (auto [a, b] : lattice) {
        if (rng.uniform(0.0, 1.0) >= p) continue;
        // pick a new endpoint avoiding self-loops and duplicates
        for (int attempt = 0; attempt < 100; ++attempt) {
            int c = static_cast<int>(rng.integer(0, static_cast<std::uint64_t>(n - 1)));
            if (c == a || edge_set.count(key(a, c))) continue;
            edge_set.erase(key(a, b));
            edge_set.insert(key(a, c));
            break;
        }
    }

    StaticGraph g;
    g.n_nodes = n;
    for (auto [a, b] : edge_set) g.edges.push_back({a, b, 1.0});
    g.validate();
    return g;
}

std::vector<double> dynamics_derivative(const StaticGraph& g, const DynamicsSpec& spec,
                                        const std::vector<double>& x) {
    auto adj = g.adjacency();
    std::vector<double> dx(x.size(), 0.0);
    switch (spec.kind) {
        case DynamicsKind::Heat: {
            double kappa = spec.param("kappa");
            for (int i = 0; i < g.n_nodes; ++i)
                for (const auto& [j, w] : adj[i]) dx[i] += kappa * w * (x[j] - x[i]);
            break;
        }
        case DynamicsKind::Mutualistic: {
            double b = spec.param("b"), a = spec.param("a"), c = spec.param("c");
            for (int i = 0; i < g.n_nodes; ++i) {
                dx[i] = b + x[i] * (1.0 - x[i] / c) * (x[i] / a - 1.0);
                for (const auto& [j, w] : adj[i]) {
                    dx[i] += w * x[i] * x[j] / (1.0 + x[i] + x[j]);
                }
            }
            break;
        }
        case DynamicsKind::Sis: {
            double beta = spec.param("beta"), delta = spec.param("delta");
            for (int i = 0; i < g.n_nodes; ++i) {
                dx[i] = -delta * x[i];
                for (const auto& [j, w] : adj[i]) dx[i] += beta * w * (1.0 - x[i]) * x[j];
            }
            break;
        }
    }
    return dx;
}

namespace {

std::vector<double> initial_state(const DynamicsSpec& spec, int n, Rng& rng) {
    std::vector<double> x(n);
    switch (spec.kind) {
        case DynamicsKind::Heat:
            for (auto& v : x) v = rng.uniform(0.0, 1.0);
            break;
        case DynamicsKind::Mutualistic:
            for (auto& v : x) v = rng.uniform(0.5, 5.0);
            break;
        case DynamicsKind::Sis:
            for (auto& v : x) v = rng.uniform(0.05, 0.5);
            break;
    }
    return x;
}

}  // namespace

StateSeries simulate(const StaticGraph& g, const DynamicsSpec& spec) {
    DynamicsSpec s = spec;
    s.fill_defaults();
    s.validate();
    g.validate();

    const int ground_truth_substeps = 20;  // finer than the model's solver
    double dt = s.t_end / static_cast<double>(s.n_samples - 1);
    double h = dt / ground_truth_substeps;

    Rng rng(s.seed);
    std::vector<double> x = initial_state(s, g.n_nodes, rng);

    auto deriv = [&](const std::vector<double>& state) {
        return dynamics_derivative(g, s, state);
    };
    auto axpy = [](const std::vector<double>& a, const std::vector<double>& b, double c) {
        std::vector<double> r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + c * b[i];
        return r;
    };

    StateSeries series;
    series.dt = dt;
    auto record = [&](const std::vector<double>& state) {
        Tensor t = Tensor::zeros({static_cast<std::size_t>(g.n_nodes), 1});
        for (int i = 0; i < g.n_nodes; ++i) t(i, 0) = state[i];
        series.states.push_back(std::move(t));
    };
    record(x);

    for (int sample = 1; sample < s.n_samples; ++sample) {
        for (int sub = 0; sub < ground_truth_substeps; ++sub) {
            auto k1 = deriv(x);
            auto k2 = deriv(axpy(x, k1, h / 2.0));
            auto k3 = deriv(axpy(x, k2, h / 2.0));
            auto k4 = deriv(axpy(x, k3, h));
            for (std::size_t i = 0; i < x.size(); ++i) {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                if (std::abs(x[i]) > 1e6) {
                    throw std::runtime_error("simulate: " + to_string(s.kind) +
                                             " state blow-up near t=" +
                                             std::to_string(sample * dt));
                }
            }
        }
        record(x);
    }

    if (s.noise_std > 0.0) {
        for (Tensor& t : series.states)
            for (auto& v : t.data()) v += rng.normal(0.0, s.noise_std);
    }
    return series;
}

void export_dataset(const StateSeries& series, const StaticGraph& g, const DynamicsSpec& spec,
                    const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    g.save_csv((fs::path(dir) / "edges.csv").string());

    std::size_t d_in = series.states.at(0).cols();
    std::ofstream st((fs::path(dir) / "states.csv").string());
    if (!st) throw std::runtime_error("cannot write states.csv in " + dir);
    st.precision(17);
    st << "node,t";
    for (std::size_t c = 0; c < d_in; ++c) st << ",v" << c;
    st << "\n";
    for (int t = 0; t < series.n_steps(); ++t) {
        for (int i = 0; i < g.n_nodes; ++i) {
            st << i << "," << t;
            for (std::size_t c = 0; c < d_in; ++c) st << "," << series.states[t](i, c);
            st << "\n";
        }
    }

    nlohmann::json meta;
    meta["kind"] = to_string(spec.kind);
    meta["parameters"] = spec.parameters;
    meta["t_end"] = spec.t_end;
    meta["n_samples"] = spec.n_samples;
    meta["noise_std"] = spec.noise_std;
    meta["seed"] = spec.seed;
    meta["n_nodes"] = g.n_nodes;
    meta["n_edges"] = g.edges.size();
    meta["d_in"] = d_in;
    meta["dt"] = series.dt;
    std::ofstream mj((fs::path(dir) / "meta.json").string());
    if (!mj) throw std::runtime_error("cannot write meta.json in " + dir);
    mj << meta.dump(2) << "\n";
}

Dataset import_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream mj((fs::path(dir) / "meta.json").string());
    if (!mj) throw std::runtime_error("cannot open meta.json in " + dir);
    nlohmann::json meta;
    mj >> meta;
    int n_nodes = meta.at("n_nodes").get<int>();
    int n_samples = meta.at("n_samples").get<int>();
    std::size_t d_in = meta.at("d_in").get<std::size_t>();

    Dataset ds;
    ds.graph = StaticGraph::load_csv((fs::path(dir) / "edges.csv").string(), n_nodes);
    ds.series.dt = meta.value("dt", 0.0);
    ds.series.states.assign(n_samples,
                            Tensor::zeros({static_cast<std::size_t>(n_nodes), d_in}));

    std::ifstream st((fs::path(dir) / "states.csv").string());
    if (!st) throw std::runtime_error("cannot open states.csv in " + dir);
    std::string line;
    std::getline(st, line);  // header
    while (std::getline(st, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok;
        std::getline(ss, tok, ',');
        int node = std::stoi(tok);
        std::getline(ss, tok, ',');
        int t = std::stoi(tok);
        for (std::size_t c = 0; c < d_in; ++c) {
            std::getline(ss, tok, ',');
            ds.series.states.at(t)(node, c) = std::stod(tok);
        }
    }
    return ds;
}

}  // namespace phyhsl
