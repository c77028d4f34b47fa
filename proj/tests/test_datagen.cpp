#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <vector>

#include "common.hpp"
#include "phyhsl/datagen.hpp"

using namespace phyhsl;

namespace {

std::vector<int> degrees(const StaticGraph& g) {
    std::vector<int> deg(g.n_nodes, 0);
    for (const auto& e : g.edges) {
        ++deg[e.src];
        ++deg[e.dst];
    }
    return deg;
}

}  // namespace

TEST_CASE("watts-strogatz edge count is exactly n*k/2") {
    StaticGraph g = watts_strogatz(5000, 4, 0.1, 7);
    CHECK(g.n_nodes == 5000);
    CHECK(g.edges.size() == 10000u);
    g.validate();

    // no duplicate edges in either orientation
    std::set<std::pair<int, int>> seen;
    for (const auto& e : g.edges) {
        auto key = std::make_pair(std::min(e.src, e.dst), std::max(e.src, e.dst));
        CHECK(seen.insert(key).second);
    }
}

TEST_CASE("watts-strogatz p=0 is the plain ring lattice") {
    StaticGraph g = watts_strogatz(20, 4, 0.0, 3);
    CHECK(g.edges.size() == 40u);
    for (int d : degrees(g)) CHECK(d == 4);
    // every edge spans ring distance 1 or 2
    for (const auto& e : g.edges) {
        int dist = std::abs(e.src - e.dst);
        dist = std::min(dist, 20 - dist);
        CHECK(dist <= 2);
    }
}

TEST_CASE("watts-strogatz p=1 keeps the edge budget while rewiring") {
    StaticGraph g = watts_strogatz(50, 4, 1.0, 11);
    CHECK(g.edges.size() == 100u);
    g.validate();
    // rewiring happened: not a pure lattice anymore
    int long_range = 0;
    for (const auto& e : g.edges) {
        int dist = std::abs(e.src - e.dst);
        dist = std::min(dist, 50 - dist);
        if (dist > 2) ++long_range;
    }
    CHECK(long_range > 0);
}

TEST_CASE("watts-strogatz rejects invalid parameters") {
    CHECK_THROWS(watts_strogatz(10, 3, 0.1, 1));   // odd k
    CHECK_THROWS(watts_strogatz(10, 10, 0.1, 1));  // k >= n
    CHECK_THROWS(watts_strogatz(10, 4, 1.5, 1));   // p out of range
}

TEST_CASE("heat derivative on a two-node graph") {
    StaticGraph g;
    g.n_nodes = 2;
    g.edges = {{0, 1, 1.0}};
    DynamicsSpec spec;
    spec.kind = DynamicsKind::Heat;
    spec.parameters["kappa"] = 0.5;
    auto dx = dynamics_derivative(g, spec, {1.0, 0.0});
    CHECK(dx[0] == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(dx[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("heat dynamics conserve the total state") {
    StaticGraph g = watts_strogatz(20, 4, 0.2, 5);
    DynamicsSpec spec;
    spec.kind = DynamicsKind::Heat;
    spec.noise_std = 0.0;
    spec.n_samples = 10;
    spec.t_end = 2.25;
    spec.seed = 9;
    StateSeries series = simulate(g, spec);
    REQUIRE(series.n_steps() == 10);
    double total0 = 0.0;
    for (std::size_t i = 0; i < series.states[0].size(); ++i) total0 += series.states[0][i];
    for (const Tensor& s : series.states) {
        double total = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) total += s[i];
        CHECK(std::abs(total - total0) < 1e-8);
    }
}

TEST_CASE("two-node heat decay matches the closed form") {
    StaticGraph g;
    g.n_nodes = 2;
    g.edges = {{0, 1, 1.0}};
    DynamicsSpec spec;
    spec.kind = DynamicsKind::Heat;
    spec.parameters["kappa"] = 0.5;
    spec.noise_std = 0.0;
    spec.n_samples = 5;
    spec.t_end = 1.0;
    spec.seed = 31;
    StateSeries series = simulate(g, spec);

    double x0 = series.states[0](0, 0), x1 = series.states[0](1, 0);
    double mean = 0.5 * (x0 + x1), half_gap = 0.5 * (x0 - x1);
    double kappa = 0.5;
    for (int t = 0; t < 5; ++t) {
        double tt = series.dt * t;
        double gap = half_gap * std::exp(-2.0 * kappa * tt);
        CHECK(std::abs(series.states[t](0, 0) - (mean + gap)) < 1e-8);
        CHECK(std::abs(series.states[t](1, 0) - (mean - gap)) < 1e-8);
    }
}

TEST_CASE("sis dynamics: zero state is a fixed point and orbits stay in [0,1]") {
    StaticGraph g = watts_strogatz(16, 4, 0.1, 13);
    DynamicsSpec spec;
    spec.kind = DynamicsKind::Sis;
    spec.fill_defaults();
    auto dx = dynamics_derivative(g, spec, std::vector<double>(16, 0.0));
    for (double v : dx) CHECK(v == 0.0);

    spec.noise_std = 0.0;
    spec.n_samples = 30;
    spec.t_end = 10.0;
    spec.seed = 17;
    StateSeries series = simulate(g, spec);
    for (const Tensor& s : series.states)
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(s[i] >= 0.0);
            CHECK(s[i] <= 1.0);
        }
}

TEST_CASE("mutualistic derivative matches a direct transcription") {
    StaticGraph g;
    g.n_nodes = 3;
    g.edges = {{0, 1, 1.0}, {1, 2, 0.5}};
    DynamicsSpec spec;
    spec.kind = DynamicsKind::Mutualistic;
    spec.fill_defaults();
    double b = 0.1, a = 0.2, c = 3.0;
    std::vector<double> x = {1.0, 2.0, 0.5};
    auto dx = dynamics_derivative(g, spec, x);
    auto self = [&](double xi) { return b + xi * (1.0 - xi / c) * (xi / a - 1.0); };
    auto pair = [&](double xi, double xj, double w) { return w * xi * xj / (1.0 + xi + xj); };
    CHECK(dx[0] == doctest::Approx(self(x[0]) + pair(x[0], x[1], 1.0)).epsilon(1e-14));
    CHECK(dx[1] ==
          doctest::Approx(self(x[1]) + pair(x[1], x[0], 1.0) + pair(x[1], x[2], 0.5))
              .epsilon(1e-14));
    CHECK(dx[2] == doctest::Approx(self(x[2]) + pair(x[2], x[1], 0.5)).epsilon(1e-14));
}

TEST_CASE("simulation is deterministic in the seed and shaped N x 1 by T") {
    StaticGraph g = watts_strogatz(12, 4, 0.3, 19);
    DynamicsSpec spec;
    spec.kind = DynamicsKind::Heat;
    spec.n_samples = 7;
    spec.t_end = 1.5;
    spec.seed = 23;
    StateSeries s1 = simulate(g, spec);
    StateSeries s2 = simulate(g, spec);
    REQUIRE(s1.n_steps() == 7);
    for (int t = 0; t < 7; ++t) {
        CHECK(s1.states[t].rows() == 12);
        CHECK(s1.states[t].cols() == 1);
        CHECK(max_abs_diff(s1.states[t], s2.states[t]) == 0.0);
    }

    spec.seed = 24;
    StateSeries s3 = simulate(g, spec);
    CHECK(max_abs_diff(s1.states[0], s3.states[0]) > 0.0);
}

TEST_CASE("dataset export/import roundtrip is bit-exact") {
    StaticGraph g = watts_strogatz(10, 4, 0.2, 29);
    DynamicsSpec spec;
    spec.kind = DynamicsKind::Sis;
    spec.n_samples = 6;
    spec.t_end = 1.25;
    spec.seed = 31;
    spec.fill_defaults();
    StateSeries series = simulate(g, spec);

    std::string dir = "datagen_roundtrip_test";
    export_dataset(series, g, spec, dir);
    Dataset back = import_dataset(dir);
    std::filesystem::remove_all(dir);

    REQUIRE(back.graph.n_nodes == g.n_nodes);
    REQUIRE(back.graph.edges.size() == g.edges.size());
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        CHECK(back.graph.edges[e].src == g.edges[e].src);
        CHECK(back.graph.edges[e].dst == g.edges[e].dst);
        CHECK(back.graph.edges[e].weight == g.edges[e].weight);
    }
    REQUIRE(back.series.n_steps() == series.n_steps());
    CHECK(back.series.dt == series.dt);
    for (int t = 0; t < series.n_steps(); ++t)
        CHECK(max_abs_diff(back.series.states[t], series.states[t]) == 0.0);
}

TEST_CASE("spec validation and kind parsing") {
    CHECK(dynamics_kind_from_string("heat") == DynamicsKind::Heat);
    CHECK(dynamics_kind_from_string("mutualistic") == DynamicsKind::Mutualistic);
    CHECK(dynamics_kind_from_string("sis") == DynamicsKind::Sis);
    CHECK_THROWS(dynamics_kind_from_string("wave"));
    CHECK(to_string(DynamicsKind::Sis) == "sis");

    DynamicsSpec spec;
    spec.n_samples = 1;
    CHECK_THROWS(spec.validate());
    spec = DynamicsSpec{};
    spec.noise_std = -0.1;
    CHECK_THROWS(spec.validate());
    spec = DynamicsSpec{};
    spec.kind = DynamicsKind::Sis;
    CHECK_THROWS(spec.validate());  // parameters not filled in
    spec.fill_defaults();
    spec.validate();
    CHECK(spec.param("beta") == 0.5);
    CHECK_THROWS(spec.param("kappa"));
}
