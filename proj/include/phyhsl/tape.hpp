#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "phyhsl/tensor.hpp"

namespace phyhsl {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid for the tape's lifetime.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    const Tensor& value() const;
    const Tensor& grad() const;
};

/// Sparse row-major matrix with constant entries, used for graph operators
/// (row-normalized adjacency, scaled Laplacian) inside the tape.
struct SparseMatrix {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    // rows[i] = list of (col, value)
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;

    static SparseMatrix from_dense(const Tensor& m, double drop_below = 0.0) {
        SparseMatrix s;
        s.n_rows = m.rows();
        s.n_cols = m.cols();
        s.rows.resize(s.n_rows);
        for (std::size_t i = 0; i < s.n_rows; ++i) {
            for (std::size_t j = 0; j < s.n_cols; ++j) {
                double v = m(i, j);
                if (std::abs(v) > drop_below) s.rows[i].emplace_back(j, v);
            }
        }
        return s;
    }

    SparseMatrix transposed() const {
        SparseMatrix t;
        t.n_rows = n_cols;
        t.n_cols = n_rows;
        t.rows.resize(t.n_rows);
        for (std::size_t i = 0; i < n_rows; ++i) {
            for (const auto& [j, v] : rows[i]) t.rows[j].emplace_back(i, v);
        }
        return t;
    }

    // out += this * x
    void multiply_add(const Tensor& x, Tensor& out) const {
        std::size_t d = x.cols();
        for (std::size_t i = 0; i < n_rows; ++i) {
            for (const auto& [j, v] : rows[i]) {
                const double* src = &x.data()[j * d];
                double* dst = &out.data()[i * d];
                for (std::size_t c = 0; c < d; ++c) dst[c] += v * src[c];
            }
        }
    }
};

/// Reverse-mode tape. Nodes are appended in evaluation order; backward()
/// walks them in reverse. One tape per forward/backward pass.
class Tape {
public:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&)> backward;  // empty for leaves/constants
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value) { return push(std::move(value)); }

    /// Leaf whose gradient will be read back after backward() (parameters).
    Var leaf(Tensor value) { return push(std::move(value)); }

    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    const Tensor& grad(Var v) const { return nodes_[v.id].grad; }

    const Tensor& value(int id) const { return nodes_[id].value; }
    Tensor& grad(int id) { return nodes_[id].grad; }

    std::size_t size() const { return nodes_.size(); }

    /// Seeds d(loss)/d(loss) = 1 and propagates to every node.
    void backward(Var loss) {
        if (loss.tape != this) throw std::logic_error("backward: var from another tape");
        if (value(loss).size() != 1) throw std::logic_error("backward: loss must be scalar");
        for (auto& n : nodes_) n.grad = Tensor::zeros_like(n.value);
        nodes_[loss.id].grad[0] = 1.0;
        for (int i = loss.id; i >= 0; --i) {
            if (nodes_[i].backward) nodes_[i].backward(*this);
        }
    }

    Var push(Tensor value) {
#ifndef NDEBUG
        value.check_finite("tape op");
#endif
        nodes_.push_back(Node{std::move(value), Tensor(), {}});
        return Var{this, static_cast<int>(nodes_.size() - 1)};
    }

    void set_backward(Var v, std::function<void(Tape&)> fn) {
        nodes_[v.id].backward = std::move(fn);
    }

private:
    std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->value(*this); }
inline const Tensor& Var::grad() const { return tape->grad(*this); }

namespace detail {

inline Tape& same_tape(Var a, Var b) {
    if (a.tape == nullptr || a.tape != b.tape) {
        throw std::logic_error("op: operands belong to different tapes");
    }
    return *a.tape;
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

inline Var add(Var a, Var b) {
    Tape& t = detail::same_tape(a, b);
    detail::require_same_shape(a.value(), b.value(), "add");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
    Var r = t.push(std::move(out));
    t.set_backward(r, [ia = a.id, ib = b.id, ir = r.id](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        Tensor& ga = tp.grad(ia);
        Tensor& gb = tp.grad(ib);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] += g[i];
        }
    });
    return r;
}

inline Var sub(Var a, Var b) {
    Tape& t = detail::same_tape(a, b);
    detail::require_same_shape(a.value(), b.value(), "sub");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
    Var r = t.push(std::move(out));
    t.set_backward(r, [ia = a.id, ib = b.id, ir = r.id](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        Tensor& ga = tp.grad(ia);
        Tensor& gb = tp.grad(ib);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] -= g[i];
        }
    });
    return r;
}

inline Var mul(Var a, Var b) {
    Tape& t = detail::same_tape(a, b);
    detail::require_same_shape(a.value(), b.value(), "mul");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
    Var r = t.push(std::move(out));
    t.set_backward(r, [ia = a.id, ib = b.id, ir = r.id](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        const Tensor& va = tp.value(ia);
        const Tensor& vb = tp.value(ib);
        Tensor& ga = tp.grad(ia);
        Tensor& gb = tp.grad(ib);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * vb[i];
            gb[i] += g[i] * va[i];
        }
    });
    return r;
}

inline Var scale(Var a, double c) {
    Tape& t = *a.tape;
    Tensor out = a.value();
    for (auto& v : out.data()) v *= c;
    Var r = t.push(std::move(out));
    t.set_backward(r, [ia = a.id, ir = r.id, c](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        Tensor& ga = tp.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
    });
    return r;
}

inline Var add_scalar(Var a, double c) {
    Tape& t = *a.tape;
    Tensor out = a.value();
    for (auto& v : out.data()) v += c;
    Var r = t.push(std::move(out));
    t.set_backward(r, [ia = a.id, ir = r.id](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        Tensor& ga = tp.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
    return r;
}

/// Elementwise product with a constant tensor (e.g. an adjacency mask).
inline Var mask_mul(Var a, const Tensor& mask) {
    Tape& t = *a.tape;
    detail::require_same_shape(a.value(), mask, "mask_mul");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
    Var r = t.push(std::move(out));
    t.set_backward(r, [ia = a.id, ir = r.id, mask](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        Tensor& ga = tp.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
    });
    return r;
}

inline Var tanh_op(Var a) {
    Tape& t = *a.tape;
    Tensor out = a.value();
    for (auto& v : out.data()) v = std::tanh(v);
    Var r = t.push(std::move(out));
    t.set_backward(r, [ia = a.id, ir = r.id](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        const Tensor& y = tp.value(ir);
        Tensor& ga = tp.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    });
    return r;
}

inline Var relu_op(Var a) {
    Tape& t = *a.tape;
    Tensor out = a.value();
    for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
    Var r = t.push(std::move(out));
    t.set_backward(r, [ia = a.id, ir = r.id](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        const Tensor& x = tp.value(ia);
        Tensor& ga = tp.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += x[i] > 0.0 ? g[i] : 0.0;
    });
    return r;
}

inline Var exp_op(Var a) {
    Tape& t = *a.tape;
    Tensor out = a.value();
    for (auto& v : out.data()) v = std::exp(v);
    Var r = t.push(std::move(out));
    t.set_backward(r, [ia = a.id, ir = r.id](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        const Tensor& y = tp.value(ir);
        Tensor& ga = tp.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    });
    return r;
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

namespace detail {

// C (m x n) += A (m x k) * B (k x n), plain ikj loop
inline void gemm_acc(const Tensor& a, const Tensor& b, Tensor& c, bool at = false,
                     bool bt = false) {
    std::size_t m = at ? a.cols() : a.rows();
    std::size_t k = at ? a.rows() : a.cols();
    std::size_t n = bt ? b.rows() : b.cols();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            double av = at ? a(p, i) : a(i, p);
            if (av == 0.0) continue;
            if (!bt) {
                const double* brow = &b.data()[p * n];
                double* crow = &c.data()[i * n];
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            } else {
                double* crow = &c.data()[i * n];
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * b(j, p);
            }
        }
    }
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
    Tape& t = detail::same_tape(a, b);
    const Tensor& va = a.value();
    const Tensor& vb = b.value();
    if (va.cols() != vb.rows()) {
        throw std::invalid_argument("matmul: inner dimensions disagree " + va.shape_str() +
                                    " vs " + vb.shape_str());
    }
    Tensor out = Tensor::zeros({va.rows(), vb.cols()});
    detail::gemm_acc(va, vb, out);
    Var r = t.push(std::move(out));
    t.set_backward(r, [ia = a.id, ib = b.id, ir = r.id](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        // dA += g * B^T ; dB += A^T * g
        detail::gemm_acc(g, tp.value(ib), tp.grad(ia), false, true);
        detail::gemm_acc(tp.value(ia), g, tp.grad(ib), true, false);
    });
    return r;
}

inline Var transpose(Var a) {
    Tape& t = *a.tape;
    const Tensor& va = a.value();
    Tensor out = Tensor::zeros({va.cols(), va.rows()});
    for (std::size_t i = 0; i < va.rows(); ++i)
        for (std::size_t j = 0; j < va.cols(); ++j) out(j, i) = va(i, j);
    Var r = t.push(std::move(out));
    t.set_backward(r, [ia = a.id, ir = r.id](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        Tensor& ga = tp.grad(ia);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) ga(j, i) += g(i, j);
    });
    return r;
}

/// out = S * x with S a constant sparse matrix.
inline Var spmm(const SparseMatrix& s, Var x) {
    Tape& t = *x.tape;
    const Tensor& vx = x.value();
    if (s.n_cols != vx.rows()) {
        throw std::invalid_argument("spmm: dimension mismatch");
    }
    Tensor out = Tensor::zeros({s.n_rows, vx.cols()});
    s.multiply_add(vx, out);
    Var r = t.push(std::move(out));
    // dX += S^T * g
    t.set_backward(r, [ix = x.id, ir = r.id, st = s.transposed()](Tape& tp) {
        st.multiply_add(tp.grad(ir), tp.grad(ix));
    });
    return r;
}

// ---------------------------------------------------------------------------
// reductions / reshaping
// ---------------------------------------------------------------------------

inline Var sum_all(Var a) {
    Tape& t = *a.tape;
    double s = 0.0;
    for (double v : a.value().data()) s += v;
    Var r = t.push(Tensor::scalar(s));
    t.set_backward(r, [ia = a.id, ir = r.id](Tape& tp) {
        double g = tp.grad(ir)[0];
        Tensor& ga = tp.grad(ia);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
    return r;
}

inline Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: empty list");
    Tape& t = *parts[0].tape;
    std::size_t rows = parts[0].value().rows();
    std::size_t cols = 0;
    for (const Var& p : parts) {
        if (p.value().rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
        cols += p.value().cols();
    }
    Tensor out = Tensor::zeros({rows, cols});
    std::size_t off = 0;
    std::vector<int> ids;
    std::vector<std::size_t> widths;
    for (const Var& p : parts) {
        const Tensor& v = p.value();
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < v.cols(); ++j) out(i, off + j) = v(i, j);
        ids.push_back(p.id);
        widths.push_back(v.cols());
        off += v.cols();
    }
    Var r = t.push(std::move(out));
    t.set_backward(r, [ids, widths, ir = r.id, rows](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        std::size_t off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            Tensor& gp = tp.grad(ids[k]);
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < widths[k]; ++j) gp(i, j) += g(i, off + j);
            off += widths[k];
        }
    });
    return r;
}

inline Var concat_cols(Var a, Var b) { return concat_cols(std::vector<Var>{a, b}); }

inline Var slice_cols(Var a, std::size_t start, std::size_t len) {
    Tape& t = *a.tape;
    const Tensor& va = a.value();
    if (start + len > va.cols()) throw std::invalid_argument("slice_cols: out of range");
    Tensor out = Tensor::zeros({va.rows(), len});
    for (std::size_t i = 0; i < va.rows(); ++i)
        for (std::size_t j = 0; j < len; ++j) out(i, j) = va(i, start + j);
    Var r = t.push(std::move(out));
    t.set_backward(r, [ia = a.id, ir = r.id, start, len](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        Tensor& ga = tp.grad(ia);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < len; ++j) ga(i, start + j) += g(i, j);
    });
    return r;
}

// ---------------------------------------------------------------------------
// broadcasts
// ---------------------------------------------------------------------------

/// M (r x c) + v (1 x c), v broadcast over rows (bias add).
inline Var add_rowvec(Var m, Var v) {
    Tape& t = detail::same_tape(m, v);
    const Tensor& vm = m.value();
    const Tensor& vv = v.value();
    if (vv.rows() != 1 || vv.cols() != vm.cols()) {
        throw std::invalid_argument("add_rowvec: expected 1x" + std::to_string(vm.cols()));
    }
    Tensor out = vm;
    for (std::size_t i = 0; i < vm.rows(); ++i)
        for (std::size_t j = 0; j < vm.cols(); ++j) out(i, j) += vv(0, j);
    Var r = t.push(std::move(out));
    t.set_backward(r, [im = m.id, iv = v.id, ir = r.id](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        Tensor& gm = tp.grad(im);
        Tensor& gv = tp.grad(iv);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) {
                gm(i, j) += g(i, j);
                gv(0, j) += g(i, j);
            }
    });
    return r;
}

/// M (r x c) ⊙ v (1 x c), v broadcast over rows.
inline Var mul_rowvec(Var m, Var v) {
    Tape& t = detail::same_tape(m, v);
    const Tensor& vm = m.value();
    const Tensor& vv = v.value();
    if (vv.rows() != 1 || vv.cols() != vm.cols()) {
        throw std::invalid_argument("mul_rowvec: expected 1x" + std::to_string(vm.cols()));
    }
    Tensor out = vm;
    for (std::size_t i = 0; i < vm.rows(); ++i)
        for (std::size_t j = 0; j < vm.cols(); ++j) out(i, j) *= vv(0, j);
    Var r = t.push(std::move(out));
    t.set_backward(r, [im = m.id, iv = v.id, ir = r.id](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        const Tensor& vm = tp.value(im);
        const Tensor& vv = tp.value(iv);
        Tensor& gm = tp.grad(im);
        Tensor& gv = tp.grad(iv);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) {
                gm(i, j) += g(i, j) * vv(0, j);
                gv(0, j) += g(i, j) * vm(i, j);
            }
    });
    return r;
}

/// diag(v) * M with v an (r x 1) column: row i of M scaled by v_i.
inline Var row_scale(Var v, Var m) {
    Tape& t = detail::same_tape(v, m);
    const Tensor& vv = v.value();
    const Tensor& vm = m.value();
    if (vv.cols() != 1 || vv.rows() != vm.rows()) {
        throw std::invalid_argument("row_scale: expected " + std::to_string(vm.rows()) + "x1");
    }
    Tensor out = vm;
    for (std::size_t i = 0; i < vm.rows(); ++i)
        for (std::size_t j = 0; j < vm.cols(); ++j) out(i, j) *= vv(i, 0);
    Var r = t.push(std::move(out));
    t.set_backward(r, [iv = v.id, im = m.id, ir = r.id](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        const Tensor& vv = tp.value(iv);
        const Tensor& vm = tp.value(im);
        Tensor& gv = tp.grad(iv);
        Tensor& gm = tp.grad(im);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) {
                gm(i, j) += g(i, j) * vv(i, 0);
                gv(i, 0) += g(i, j) * vm(i, j);
            }
    });
    return r;
}

// ---------------------------------------------------------------------------
// softmax and cosine similarity
// ---------------------------------------------------------------------------

/// Row-wise softmax; rows sum to 1 and all outputs are strictly positive.
inline Var softmax_rows(Var a) {
    Tape& t = *a.tape;
    const Tensor& va = a.value();
    Tensor out = Tensor::zeros_like(va);
    for (std::size_t i = 0; i < va.rows(); ++i) {
        double mx = va(i, 0);
        for (std::size_t j = 1; j < va.cols(); ++j) mx = std::max(mx, va(i, j));
        double denom = 0.0;
        for (std::size_t j = 0; j < va.cols(); ++j) denom += std::exp(va(i, j) - mx);
        for (std::size_t j = 0; j < va.cols(); ++j) out(i, j) = std::exp(va(i, j) - mx) / denom;
    }
    Var r = t.push(std::move(out));
    t.set_backward(r, [ia = a.id, ir = r.id](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        const Tensor& y = tp.value(ir);
        Tensor& ga = tp.grad(ia);
        for (std::size_t i = 0; i < g.rows(); ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * y(i, j);
            for (std::size_t j = 0; j < g.cols(); ++j)
                ga(i, j) += y(i, j) * (g(i, j) - dot);
        }
    });
    return r;
}

namespace detail {

constexpr double kCosineEps = 1e-12;

inline double row_norm(const Tensor& m, std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
    return std::sqrt(s);
}

}  // namespace detail

/// C_ij = cos(q_i, k_j) for all row pairs; 0 when either row norm < 1e-12
/// (gradient also 0 there).
inline Var cosine_matrix(Var q, Var k) {
    Tape& t = detail::same_tape(q, k);
    const Tensor& vq = q.value();
    const Tensor& vk = k.value();
    if (vq.cols() != vk.cols()) throw std::invalid_argument("cosine_matrix: dim mismatch");
    std::size_t nq = vq.rows(), nk = vk.rows(), d = vq.cols();
    Tensor out = Tensor::zeros({nq, nk});
    for (std::size_t i = 0; i < nq; ++i) {
        double qn = detail::row_norm(vq, i);
        if (qn < detail::kCosineEps) continue;
        for (std::size_t j = 0; j < nk; ++j) {
            double kn = detail::row_norm(vk, j);
            if (kn < detail::kCosineEps) continue;
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c) dot += vq(i, c) * vk(j, c);
            out(i, j) = dot / (qn * kn);
        }
    }
    Var r = t.push(std::move(out));
    t.set_backward(r, [iq = q.id, ik = k.id, ir = r.id](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        const Tensor& vq = tp.value(iq);
        const Tensor& vk = tp.value(ik);
        const Tensor& y = tp.value(ir);
        Tensor& gq = tp.grad(iq);
        Tensor& gk = tp.grad(ik);
        std::size_t d = vq.cols();
        for (std::size_t i = 0; i < vq.rows(); ++i) {
            double qn = detail::row_norm(vq, i);
            if (qn < detail::kCosineEps) continue;
            for (std::size_t j = 0; j < vk.rows(); ++j) {
                double gij = g(i, j);
                if (gij == 0.0) continue;
                double kn = detail::row_norm(vk, j);
                if (kn < detail::kCosineEps) continue;
                double c = y(i, j);
                for (std::size_t cc = 0; cc < d; ++cc) {
                    gq(i, cc) += gij * (vk(j, cc) / (qn * kn) - c * vq(i, cc) / (qn * qn));
                    gk(j, cc) += gij * (vq(i, cc) / (qn * kn) - c * vk(j, cc) / (kn * kn));
                }
            }
        }
    });
    return r;
}

/// c_i = cos(q_i, k_i) as an (r x 1) column; same guard as cosine_matrix.
inline Var cosine_rows(Var q, Var k) {
    Tape& t = detail::same_tape(q, k);
    const Tensor& vq = q.value();
    const Tensor& vk = k.value();
    detail::require_same_shape(vq, vk, "cosine_rows");
    std::size_t n = vq.rows(), d = vq.cols();
    Tensor out = Tensor::zeros({n, 1});
    for (std::size_t i = 0; i < n; ++i) {
        double qn = detail::row_norm(vq, i);
        double kn = detail::row_norm(vk, i);
        if (qn < detail::kCosineEps || kn < detail::kCosineEps) continue;
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) dot += vq(i, c) * vk(i, c);
        out(i, 0) = dot / (qn * kn);
    }
    Var r = t.push(std::move(out));
    t.set_backward(r, [iq = q.id, ik = k.id, ir = r.id](Tape& tp) {
        const Tensor& g = tp.grad(ir);
        const Tensor& vq = tp.value(iq);
        const Tensor& vk = tp.value(ik);
        const Tensor& y = tp.value(ir);
        Tensor& gq = tp.grad(iq);
        Tensor& gk = tp.grad(ik);
        std::size_t d = vq.cols();
        for (std::size_t i = 0; i < vq.rows(); ++i) {
            double gi = g(i, 0);
            if (gi == 0.0) continue;
            double qn = detail::row_norm(vq, i);
            double kn = detail::row_norm(vk, i);
            if (qn < detail::kCosineEps || kn < detail::kCosineEps) continue;
            double c = y(i, 0);
            for (std::size_t cc = 0; cc < d; ++cc) {
                gq(i, cc) += gi * (vk(i, cc) / (qn * kn) - c * vq(i, cc) / (qn * qn));
                gk(i, cc) += gi * (vq(i, cc) / (qn * kn) - c * vk(i, cc) / (kn * kn));
            }
        }
    });
    return r;
}

// ---------------------------------------------------------------------------
// composite helpers
// ---------------------------------------------------------------------------

/// Mean of a list of same-shaped Vars.
inline Var mean_of(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean_of: empty list");
    Var acc = xs[0];
    for (std::size_t i = 1; i < xs.size(); ++i) acc = add(acc, xs[i]);
    return scale(acc, 1.0 / static_cast<double>(xs.size()));
}

/// Sum of squared entries of (a - b), as a scalar Var.
inline Var squared_error(Var a, Var b) {
    Var d = sub(a, b);
    return sum_all(mul(d, d));
}

}  // namespace phyhsl
