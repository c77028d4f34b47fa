#include "phyhsl/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace phyhsl {

PosteriorParams posterior_params(Tape& tape, const Sequence& f, const PosteriorMlpParams& p) {
    Var fbar = mean_of(f);
    Var mu = linear(tanh_op(linear(fbar, p.mu_w1, p.mu_b1)), p.mu_w2, p.mu_b2);
    Var log_var = linear(tanh_op(linear(fbar, p.var_w1, p.var_b1)), p.var_w2, p.var_b2);
    return {mu, log_var};
}

Var reparameterize(Tape& tape, const PosteriorParams& p, const Tensor& noise) {
    Var std_dev = exp_op(scale(p.log_var, 0.5));
    return add(p.mu, mul(std_dev, tape.constant(noise)));
}

Var ode_derivative_g(Tape& tape, Var z, const SparseMatrix& a_hat, const OdeFuncParams& p) {
    Var agg = spmm(a_hat, z);
    Var cat = concat_cols(z, agg);
    return linear(tanh_op(linear(cat, p.w1, p.b1)), p.w2, p.b2);
}

std::vector<Var> ode_solve(Tape& tape, Var z0, const std::function<Var(Var)>& g, int n_steps,
                           int substeps) {
    if (substeps < 1) throw std::invalid_argument("ode_solve: need substeps >= 1");
    double h = 1.0 / static_cast<double>(substeps);
    std::vector<Var> states;
    states.reserve(n_steps + 1);
    states.push_back(z0);
    Var z = z0;
    for (int step = 0; step < n_steps; ++step) {
        for (int s = 0; s < substeps; ++s) {
            Var k1 = g(z);
            Var k2 = g(add(z, scale(k1, h / 2.0)));
            Var k3 = g(add(z, scale(k2, h / 2.0)));
            Var k4 = g(add(z, scale(k3, h)));
            Var incr = add(add(k1, scale(k2, 2.0)), add(scale(k3, 2.0), k4));
            z = add(z, scale(incr, h / 6.0));
            z.value().check_finite("ode_solve step " + std::to_string(step) + "." +
                                   std::to_string(s));
        }
        states.push_back(z);
    }
    return states;
}

std::vector<Var> koopman_propagate(Tape& tape, const Sequence& f, Var k, int horizon) {
    if (f.empty()) throw std::invalid_argument("koopman_propagate: empty window");
    int n_obs = static_cast<int>(f.size());
    std::vector<Var> out;
    out.reserve(n_obs + horizon);
    out.push_back(f[0]);
    for (int t = 1; t < n_obs; ++t) out.push_back(matmul(f[t - 1], k));
    Var last = f[n_obs - 1];
    for (int step = 0; step < horizon; ++step) {
        last = matmul(last, k);
        out.push_back(last);
    }
    return out;
}

std::vector<Var> fuse_decode(Tape& tape, const std::vector<Var>& z_phys,
                             const std::vector<Var>& z_koop, const DecoderParams& p) {
    if (z_phys.size() != z_koop.size()) throw std::invalid_argument("fuse_decode: length mismatch");
    std::vector<Var> out(z_phys.size());
    for (std::size_t t = 0; t < z_phys.size(); ++t) {
        Var cat = tanh_op(concat_cols(z_phys[t], z_koop[t]));
        out[t] = linear(tanh_op(linear(cat, p.w1, p.b1)), p.w2, p.b2);
    }
    return out;
}

namespace {

// Solves A x = b in place, Gaussian elimination with partial pivoting.
std::vector<double> solve_dense(Tensor a, std::vector<double> b) {
    std::size_t n = a.rows();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (std::abs(a(piv, col)) < 1e-14) throw std::runtime_error("dmd_fit: singular system");
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            double factor = a(r, col) / a(col, col);
            for (std::size_t j = col; j < n; ++j) a(r, j) -= factor * a(col, j);
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t ri = n; ri-- > 0;) {
        double s = b[ri];
        for (std::size_t j = ri + 1; j < n; ++j) s -= a(ri, j) * x[j];
        x[ri] = s / a(ri, ri);
    }
    return x;
}

}  // namespace

Tensor dmd_fit(const std::vector<Tensor>& snapshots) {
    if (snapshots.size() < 2) throw std::invalid_argument("dmd_fit: need at least two snapshots");
    std::size_t d = snapshots[0].cols();
    // normal equations: (X^T X) K = X^T Y with X rows = f^t, Y rows = f^{t+1}
    Tensor xtx = Tensor::zeros({d, d});
    Tensor xty = Tensor::zeros({d, d});
    for (std::size_t s = 0; s + 1 < snapshots.size(); ++s) {
        const Tensor& x = snapshots[s];
        const Tensor& y = snapshots[s + 1];
        for (std::size_t r = 0; r < x.rows(); ++r)
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) {
                    xtx(i, j) += x(r, i) * x(r, j);
                    xty(i, j) += x(r, i) * y(r, j);
                }
    }
    // ridge floor keeps the solve stable on rank-deficient snapshot sets
    for (std::size_t i = 0; i < d; ++i) xtx(i, i) += 1e-12;
    Tensor k = Tensor::zeros({d, d});
    for (std::size_t col = 0; col < d; ++col) {
        std::vector<double> rhs(d);
        for (std::size_t i = 0; i < d; ++i) rhs[i] = xty(i, col);
        std::vector<double> sol = solve_dense(xtx, rhs);
        for (std::size_t i = 0; i < d; ++i) k(i, col) = sol[i];
    }
    return k;
}

}  // namespace phyhsl
