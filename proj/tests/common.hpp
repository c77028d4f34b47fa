#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "phyhsl/rng.hpp"
#include "phyhsl/tape.hpp"
#include "phyhsl/tensor.hpp"

namespace phyhsl::testing {

/// Worst-case relative gradient error of an op graph built by `build`:
/// the output is contracted with fixed random weights to a scalar and every
/// input coordinate is probed with central differences.
inline double op_grad_error(std::vector<Tensor> inputs,
                            const std::function<Var(Tape&, const std::vector<Var>&)>& build,
                            std::uint64_t seed = 99, double h = 1e-6) {
    auto loss_value = [&](const std::vector<Tensor>& ins, std::vector<Tensor>* grads) {
        Tape tape;
        std::vector<Var> vars;
        vars.reserve(ins.size());
        for (const Tensor& t : ins) vars.push_back(tape.leaf(t));
        Var out = build(tape, vars);
        Rng wr(seed);
        Var loss = sum_all(mul(out, tape.constant(wr.gaussian(out.value().shape()))));
        if (grads) {
            tape.backward(loss);
            grads->clear();
            for (const Var& v : vars) grads->push_back(v.grad());
        }
        return loss.value()[0];
    };

    std::vector<Tensor> analytic;
    loss_value(inputs, &analytic);

    double worst = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            double orig = inputs[k][i];
            inputs[k][i] = orig + h;
            double up = loss_value(inputs, nullptr);
            inputs[k][i] = orig - h;
            double down = loss_value(inputs, nullptr);
            inputs[k][i] = orig;
            double fd = (up - down) / (2.0 * h);
            double an = analytic[k][i];
            double denom = std::max(std::abs(fd), std::abs(an));
            double err = denom > 1e-6 ? std::abs(fd - an) / denom : std::abs(fd - an);
            worst = std::max(worst, err);
        }
    }
    return worst;
}

/// All eigenvalues of a symmetric matrix via cyclic Jacobi rotations.
inline std::vector<double> symmetric_eigenvalues(Tensor m, int sweeps = 100) {
    std::size_t n = m.rows();
    for (int s = 0; s < sweeps; ++s) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(m(p, q)) < 1e-18) continue;
                double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = m(k, p), akq = m(k, q);
                    m(k, p) = c * akp - sn * akq;
                    m(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = m(p, k), aqk = m(q, k);
                    m(p, k) = c * apk - sn * aqk;
                    m(q, k) = sn * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = m(i, i);
    return ev;
}

/// Numerical rank by Gaussian elimination with partial pivoting.
inline int matrix_rank(Tensor m, double tol = 1e-9) {
    std::size_t rows = m.rows(), cols = m.cols();
    int rank = 0;
    std::size_t row = 0;
    for (std::size_t col = 0; col < cols && row < rows; ++col) {
        std::size_t piv = row;
        for (std::size_t r = row + 1; r < rows; ++r)
            if (std::abs(m(r, col)) > std::abs(m(piv, col))) piv = r;
        if (std::abs(m(piv, col)) < tol) continue;
        for (std::size_t c = 0; c < cols; ++c) std::swap(m(row, c), m(piv, c));
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == row) continue;
            double f = m(r, col) / m(row, col);
            for (std::size_t c = 0; c < cols; ++c) m(r, c) -= f * m(row, c);
        }
        ++row;
        ++rank;
    }
    return rank;
}

inline Tensor permute_rows(const Tensor& m, const std::vector<int>& perm) {
    Tensor out = Tensor::zeros_like(m);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(perm[i], j) = m(i, j);
    return out;
}

}  // namespace phyhsl::testing
