#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "common.hpp"
#include "phyhsl/encoder.hpp"
#include "phyhsl/model.hpp"

using namespace phyhsl;
using phyhsl::testing::permute_rows;

namespace {

StaticGraph line_graph(int n, double w = 1.0) {
    StaticGraph g;
    g.n_nodes = n;
    for (int i = 0; i + 1 < n; ++i) g.edges.push_back({i, i + 1, w});
    return g;
}

Sequence to_sequence(Tape& tape, const std::vector<Tensor>& xs) {
    Sequence s;
    for (const Tensor& x : xs) s.push_back(tape.constant(x));
    return s;
}

Tensor dense_matmul(const Tensor& a, const Tensor& b) {
    Tensor c = Tensor::zeros({a.rows(), b.cols()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k)
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
    return c;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (std::sqrt(na) < 1e-12 || std::sqrt(nb) < 1e-12) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> row_of(const Tensor& m, std::size_t i) {
    std::vector<double> r(m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j) r[j] = m(i, j);
    return r;
}

}  // namespace

TEST_CASE("temporal encoding basics") {
    Tensor te = temporal_encoding(1, 2);
    CHECK(te(0, 0) == 0.0);  // sin 0
    CHECK(te(0, 1) == 1.0);  // cos 0

    Tensor big = temporal_encoding(50, 12);
    for (double v : big.data()) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
    // deterministic
    CHECK(max_abs_diff(big, temporal_encoding(50, 12)) == 0.0);
}

TEST_CASE("temporal encoding matches a direct sin/cos table") {
    int n_steps = 9, d = 6;
    Tensor te = temporal_encoding(n_steps, d);
    for (int t = 0; t < n_steps; ++t) {
        for (int i = 0; 2 * i < d; ++i) {
            double freq = std::pow(10000.0, 2.0 * i / d);
            CHECK(te(t, 2 * i) == doctest::Approx(std::sin(t / freq)).epsilon(1e-14));
            if (2 * i + 1 < d)
                CHECK(te(t, 2 * i + 1) == doctest::Approx(std::cos(t / freq)).epsilon(1e-14));
        }
    }
}

TEST_CASE("isolated node passes through the spatial attention layer") {
    StaticGraph g;
    g.n_nodes = 2;  // no edges, single timestamp: no neighbors at all
    TemporalGraph tg = build_temporal_adjacency(g, 1);
    Rng rng(5);
    Tape tape;
    Tensor h0 = rng.gaussian({2, 3});
    SpatialAttentionParams p{tape.constant(rng.gaussian({3, 3})),
                             tape.constant(rng.gaussian({3, 3})),
                             tape.constant(rng.gaussian({3, 3}))};
    Sequence out = spatial_attention_layer(tape, tg, to_sequence(tape, {h0}), p);
    Tensor o = out[0].value();
    CHECK(max_abs_diff(o, h0) < 1e-15);
}

TEST_CASE("identical projected embeddings score exactly the edge weight") {
    StaticGraph g;
    g.n_nodes = 2;
    g.edges = {{0, 1, 0.37}};
    TemporalGraph tg = build_temporal_adjacency(g, 1);
    Rng rng(7);
    Tape tape;
    Tensor h0 = Tensor::zeros({2, 3});
    for (std::size_t j = 0; j < 3; ++j) h0(0, j) = h0(1, j) = rng.normal();
    Tensor wq = rng.gaussian({3, 3});
    Tensor wv = Tensor::identity(3);
    SpatialAttentionParams p{tape.constant(wq), tape.constant(wq), tape.constant(wv)};
    Sequence out = spatial_attention_layer(tape, tg, to_sequence(tape, {h0}), p);
    // cos(v, v) = 1, so the update is h + tanh(w * neighbor embedding)
    Tensor o = out[0].value();
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(o(0, j) == doctest::Approx(h0(0, j) + std::tanh(0.37 * h0(1, j))).epsilon(1e-12));
}

TEST_CASE("spatial attention matches a term-by-term transcription on a line graph") {
    StaticGraph g = line_graph(4, 0.8);
    int n_steps = 3;
    TemporalGraph tg = build_temporal_adjacency(g, n_steps);
    Rng rng(11);
    std::size_t d = 5;
    std::vector<Tensor> h(n_steps);
    for (auto& x : h) x = rng.gaussian({4, d});
    Tensor wq = rng.gaussian({d, d}), wk = rng.gaussian({d, d}), wv = rng.gaussian({d, d});

    Tape tape;
    SpatialAttentionParams p{tape.constant(wq), tape.constant(wk), tape.constant(wv)};
    Sequence got = spatial_attention_layer(tape, tg, to_sequence(tape, h), p);

    // independent transcription: per (i,t), sum scores over the temporal
    // neighborhood, then residual tanh update
    for (int t = 0; t < n_steps; ++t) {
        Tensor q = dense_matmul(h[t], wq);
        Tensor want = h[t];
        for (int i = 0; i < 4; ++i) {
            std::vector<double> agg(d, 0.0);
            for (const auto& nb : tg.neighbors(i, t)) {
                Tensor k = dense_matmul(h[nb.t], wk);
                Tensor v = dense_matmul(h[nb.t], wv);
                double s = nb.weight * cosine(row_of(q, i), row_of(k, nb.node));
                for (std::size_t c = 0; c < d; ++c) agg[c] += s * v(nb.node, c);
            }
            for (std::size_t c = 0; c < d; ++c) want(i, c) += std::tanh(agg[c]);
        }
        CHECK(max_abs_diff(got[t].value(), want) < 1e-12);
    }
}

TEST_CASE("spatial attention with zero value weights is the identity") {
    StaticGraph g = line_graph(5);
    TemporalGraph tg = build_temporal_adjacency(g, 2);
    Rng rng(13);
    Tape tape;
    std::vector<Tensor> h = {rng.gaussian({5, 4}), rng.gaussian({5, 4})};
    SpatialAttentionParams p{tape.constant(rng.gaussian({4, 4})),
                             tape.constant(rng.gaussian({4, 4})),
                             tape.constant(Tensor::zeros({4, 4}))};
    Sequence out = spatial_attention_layer(tape, tg, to_sequence(tape, h), p);
    for (int t = 0; t < 2; ++t) CHECK(max_abs_diff(out[t].value(), h[t]) < 1e-15);
}

TEST_CASE("chebyshev layer trivial weight choices") {
    StaticGraph g;
    g.n_nodes = 3;  // edgeless: scaled Laplacian is -I
    LaplacianBundle lb = normalized_laplacian(g);
    SparseMatrix ls = SparseMatrix::from_dense(lb.scaled, 1e-15);
    Rng rng(17);
    Tensor c0 = rng.gaussian({3, 4});

    Tape tape;
    Var eye = tape.constant(Tensor::identity(4));
    Var zero = tape.constant(Tensor::zeros({4, 4}));
    // T_0(-I)=I, T_1(-I)=-I, T_2(-I)=I: with all weights I the sum is C
    Sequence out = chebyshev_layer(tape, ls, to_sequence(tape, {c0}), {eye, eye, eye});
    CHECK(max_abs_diff(out[0].value(), c0) < 1e-12);
    // W0=I, W1=W2=0 is the identity for any graph
    Sequence out2 = chebyshev_layer(tape, ls, to_sequence(tape, {c0}), {eye, zero, zero});
    CHECK(max_abs_diff(out2[0].value(), c0) < 1e-12);
}

TEST_CASE("chebyshev layer equals the dense polynomial oracle") {
    Rng rng(19);
    StaticGraph g;
    g.n_nodes = 6;
    for (int i = 0; i < 6; ++i) g.edges.push_back({i, (i + 1) % 6, rng.uniform(0.3, 1.0)});
    g.edges.push_back({0, 3, 0.9});
    LaplacianBundle lb = normalized_laplacian(g);
    SparseMatrix ls = SparseMatrix::from_dense(lb.scaled, 1e-15);

    std::size_t d = 4;
    Tensor c0 = rng.gaussian({6, d});
    Tensor w0 = rng.gaussian({d, d}), w1 = rng.gaussian({d, d}), w2 = rng.gaussian({d, d});

    Tape tape;
    Sequence got = chebyshev_layer(tape, ls, to_sequence(tape, {c0}),
                                   {tape.constant(w0), tape.constant(w1), tape.constant(w2)});

    // dense oracle: C W0 + (L C) W1 + ((2 L^2 - I) C) W2
    const Tensor& l = lb.scaled;
    Tensor lc = dense_matmul(l, c0);
    Tensor l2 = dense_matmul(l, l);
    Tensor t2 = Tensor::zeros({6, 6});
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) t2(i, j) = 2.0 * l2(i, j) - (i == j ? 1.0 : 0.0);
    Tensor t2c = dense_matmul(t2, c0);
    Tensor want = dense_matmul(c0, w0);
    Tensor p1 = dense_matmul(lc, w1);
    Tensor p2 = dense_matmul(t2c, w2);
    for (std::size_t i = 0; i < want.size(); ++i) want[i] += p1[i] + p2[i];

    CHECK(max_abs_diff(got[0].value(), want) < 1e-10);
}

TEST_CASE("chebyshev layer is linear in its input") {
    Rng rng(23);
    StaticGraph g = line_graph(5, 0.6);
    LaplacianBundle lb = normalized_laplacian(g);
    SparseMatrix ls = SparseMatrix::from_dense(lb.scaled, 1e-15);
    std::size_t d = 3;
    Tensor c1 = rng.gaussian({5, d}), c2 = rng.gaussian({5, d});
    Tensor combo = Tensor::zeros({5, d});
    double a = 1.7, b = -0.4;
    for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = a * c1[i] + b * c2[i];

    Tape tape;
    ChebyshevParams p{tape.constant(rng.gaussian({d, d})), tape.constant(rng.gaussian({d, d})),
                      tape.constant(rng.gaussian({d, d}))};
    Tensor y1 = chebyshev_layer(tape, ls, to_sequence(tape, {c1}), p)[0].value();
    Tensor y2 = chebyshev_layer(tape, ls, to_sequence(tape, {c2}), p)[0].value();
    Tensor yc = chebyshev_layer(tape, ls, to_sequence(tape, {combo}), p)[0].value();
    Tensor want = Tensor::zeros({5, d});
    for (std::size_t i = 0; i < want.size(); ++i) want[i] = a * y1[i] + b * y2[i];
    CHECK(max_abs_diff(yc, want) < 1e-10);
}

TEST_CASE("fuse with zero MLP weights leaves only the temporal encoding") {
    Rng rng(29);
    int n_steps = 4;
    std::size_t d = 6;
    Tape tape;
    std::vector<Tensor> h(n_steps), c(n_steps);
    for (int t = 0; t < n_steps; ++t) {
        h[t] = rng.gaussian({3, d});
        c[t] = rng.gaussian({3, d});
    }
    Tensor te = temporal_encoding(n_steps, static_cast<int>(d));
    FuseParams p{tape.constant(Tensor::zeros({2 * d, d})), tape.constant(Tensor::zeros({1, d})),
                 tape.constant(Tensor::zeros({d, d})), tape.constant(Tensor::zeros({1, d}))};
    Sequence q = fuse_and_embed(tape, to_sequence(tape, h), to_sequence(tape, c), te, p);
    for (int t = 0; t < n_steps; ++t) {
        Tensor qt = q[t].value();
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < d; ++j) CHECK(qt(i, j) == te(t, j));
    }
}

TEST_CASE("attention pool: singleton softmax and row normalization") {
    Rng rng(31);
    std::size_t d = 4;
    Tape tape;
    PoolParams p{tape.constant(rng.gaussian({1, d})), tape.constant(rng.gaussian({d, 1}))};

    // T=1: alpha = 1, so u = tanh(v_q1 .* q)
    Tensor q0 = rng.gaussian({3, d});
    Sequence u1 = attention_pool(tape, to_sequence(tape, {q0}), p);
    Tensor vq1 = p.v_q1.value();
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < d; ++j)
            CHECK(u1[0].value()(i, j) ==
                  doctest::Approx(std::tanh(vq1(0, j) * q0(i, j))).epsilon(1e-12));

    CHECK_THROWS(attention_pool(tape, {}, p));
}

TEST_CASE("attention pool: constant q gives alpha = 1/T") {
    Rng rng(37);
    std::size_t d = 5;
    int n_steps = 6;
    Tensor q0 = rng.gaussian({4, d});
    std::vector<Tensor> qs(n_steps, q0);
    Tape tape;
    PoolParams p{tape.constant(rng.gaussian({1, d})), tape.constant(rng.gaussian({d, 1}))};
    Sequence u = attention_pool(tape, to_sequence(tape, qs), p);
    // all timesteps identical and alpha uniform: u_t = tanh((1/T) vq1 .* q)
    Tensor vq1 = p.v_q1.value();
    for (int t = 0; t < n_steps; ++t)
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < d; ++j)
                CHECK(u[t].value()(i, j) ==
                      doctest::Approx(std::tanh(vq1(0, j) * q0(i, j) / n_steps)).epsilon(1e-10));
}

TEST_CASE("full encoder is node-permutation equivariant") {
    Rng rng(41);
    StaticGraph g;
    g.n_nodes = 7;
    for (int i = 0; i < 7; ++i) g.edges.push_back({i, (i + 1) % 7, rng.uniform(0.2, 1.0)});
    g.edges.push_back({1, 4, 0.5});
    int n_steps = 4;

    ModelConfig mcfg;
    mcfg.d_in = 2;
    mcfg.hidden = 6;
    ParamStore store;
    init_params(store, mcfg, 77);

    std::vector<Tensor> x(n_steps);
    for (auto& m : x) m = rng.gaussian({7, 2});

    std::vector<int> perm = {2, 5, 0, 6, 3, 1, 4};
    StaticGraph pg;
    pg.n_nodes = 7;
    for (const auto& e : g.edges) pg.edges.push_back({perm[e.src], perm[e.dst], e.weight});
    std::vector<Tensor> px(n_steps);
    for (int t = 0; t < n_steps; ++t) px[t] = permute_rows(x[t], perm);

    EncoderConfig ecfg{2, 6};
    auto run = [&](const StaticGraph& graph, const std::vector<Tensor>& input) {
        GraphContext ctx = GraphContext::build(graph, n_steps);
        Tape tape;
        ParamBinding binding(tape, store);
        Sequence u = encode(tape, ctx.temporal, ctx.l_scaled, to_sequence(tape, input), binding,
                            ecfg);
        std::vector<Tensor> out;
        for (const Var& v : u) out.push_back(v.value());
        return out;
    };

    auto base = run(g, x);
    auto permuted = run(pg, px);
    for (int t = 0; t < n_steps; ++t)
        CHECK(max_abs_diff(permute_rows(base[t], perm), permuted[t]) < 1e-10);
}

TEST_CASE("encoder gradients pass the finite-difference check") {
    Rng rng(43);
    StaticGraph g = line_graph(5, 0.7);
    g.edges.push_back({0, 3, 0.4});
    int n_steps = 4;
    GraphContext ctx = GraphContext::build(g, n_steps);

    ModelConfig mcfg;
    mcfg.d_in = 1;
    mcfg.hidden = 4;
    ParamStore store;
    init_params(store, mcfg, 91);

    std::vector<Tensor> x(n_steps);
    for (auto& m : x) m = rng.gaussian({5, 1}, 0.5);

    EncoderConfig ecfg{2, 4};
    LossFn fn = [&](ParamStore& s, bool with_grad) {
        Tape tape;
        ParamBinding binding(tape, s);
        Sequence u = encode(tape, ctx.temporal, ctx.l_scaled, to_sequence(tape, x), binding, ecfg);
        Var loss = sum_all(mul(mean_of(u), mean_of(u)));
        if (with_grad) {
            tape.backward(loss);
            binding.accumulate_grads();
        }
        return loss.value()[0];
    };
    CHECK(finite_diff_check(fn, store, 60, 1e-5, 3) < 1e-4);
}
