#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "phyhsl/tape.hpp"
#include "phyhsl/tensor.hpp"

namespace phyhsl {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Every learnable tensor of the model, keyed by a stable name, with its
/// gradient slot and Adam moment buffers.
class ParamStore {
public:
    struct Entry {
        Tensor value;
        Tensor grad;
        Tensor adam_m;
        Tensor adam_v;
    };

    void add(const std::string& name, Tensor value) {
        if (entries_.count(name)) throw std::invalid_argument("ParamStore: duplicate name " + name);
        Entry e;
        e.grad = Tensor::zeros_like(value);
        e.adam_m = Tensor::zeros_like(value);
        e.adam_v = Tensor::zeros_like(value);
        e.value = std::move(value);
        entries_.emplace(name, std::move(e));
    }

    bool has(const std::string& name) const { return entries_.count(name) > 0; }

    Entry& at(const std::string& name) {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw std::out_of_range("ParamStore: unknown name " + name);
        return it->second;
    }
    const Entry& at(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw std::out_of_range("ParamStore: unknown name " + name);
        return it->second;
    }

    std::map<std::string, Entry>& entries() { return entries_; }
    const std::map<std::string, Entry>& entries() const { return entries_; }

    long step_count() const { return step_count_; }
    void set_step_count(long s) { step_count_ = s; }

    void zero_grads() {
        for (auto& [name, e] : entries_)
            for (auto& g : e.grad.data()) g = 0.0;
    }

    /// Global-norm gradient clipping across all entries.
    void clip_grad_norm(double max_norm) {
        double sq = 0.0;
        for (const auto& [name, e] : entries_)
            for (double g : e.grad.data()) sq += g * g;
        double norm = std::sqrt(sq);
        if (norm <= max_norm || norm == 0.0) return;
        double s = max_norm / norm;
        for (auto& [name, e] : entries_)
            for (auto& g : e.grad.data()) g *= s;
    }

    /// Bias-corrected Adam step; increments step_count and zeros gradients.
    void adam_update(const AdamConfig& cfg) {
        ++step_count_;
        double t = static_cast<double>(step_count_);
        double bc1 = 1.0 - std::pow(cfg.beta1, t);
        double bc2 = 1.0 - std::pow(cfg.beta2, t);
        for (auto& [name, e] : entries_) {
            for (std::size_t i = 0; i < e.value.size(); ++i) {
                double g = e.grad[i];
                if (!std::isfinite(g)) {
                    throw std::runtime_error("adam_update: non-finite gradient for " + name);
                }
                e.adam_m[i] = cfg.beta1 * e.adam_m[i] + (1.0 - cfg.beta1) * g;
                e.adam_v[i] = cfg.beta2 * e.adam_v[i] + (1.0 - cfg.beta2) * g * g;
                double mhat = e.adam_m[i] / bc1;
                double vhat = e.adam_v[i] / bc2;
                e.value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
            }
        }
        zero_grads();
    }

private:
    std::map<std::string, Entry> entries_;
    long step_count_ = 0;
};

/// Maps every ParamStore entry onto leaves of one tape for a single
/// forward/backward pass, then accumulates leaf gradients back.
class ParamBinding {
public:
    ParamBinding(Tape& tape, ParamStore& store) : store_(&store) {
        for (const auto& [name, e] : store.entries()) {
            vars_.emplace(name, tape.leaf(e.value));
        }
    }

    Var operator[](const std::string& name) const {
        auto it = vars_.find(name);
        if (it == vars_.end()) throw std::out_of_range("ParamBinding: unknown name " + name);
        return it->second;
    }

    /// Call after tape.backward(): adds each leaf gradient into the store.
    void accumulate_grads() {
        for (auto& [name, v] : vars_) {
            Tensor& dst = store_->at(name).grad;
            const Tensor& src = v.grad();
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        }
    }

private:
    ParamStore* store_;
    std::map<std::string, Var> vars_;
};

// ---------------------------------------------------------------------------
// MLP helpers
// ---------------------------------------------------------------------------

enum class Activation { Tanh, Relu, Identity };

inline Var apply_activation(Var x, Activation a) {
    switch (a) {
        case Activation::Tanh: return tanh_op(x);
        case Activation::Relu: return relu_op(x);
        case Activation::Identity: return x;
    }
    throw std::logic_error("apply_activation: bad enum");
}

inline Var linear(Var x, Var w, Var b) { return add_rowvec(matmul(x, w), b); }

/// Affine + activation per layer; activation omitted on the final layer.
inline Var mlp_forward(Var x, const std::vector<std::pair<Var, Var>>& layers, Activation act) {
    if (layers.empty()) throw std::invalid_argument("mlp_forward: empty layer list");
    Var h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        h = linear(h, layers[i].first, layers[i].second);
        if (i + 1 < layers.size()) h = apply_activation(h, act);
    }
    return h;
}

// ---------------------------------------------------------------------------
// gradient checking
// ---------------------------------------------------------------------------

/// loss_fn(store, with_grad): returns the scalar loss; when with_grad is
/// true it must also accumulate analytic gradients into the store.
using LossFn = std::function<double(ParamStore&, bool)>;

/// Compares analytic gradients to central finite differences on n_probes
/// randomly sampled coordinates. Returns the worst relative error (absolute
/// error where both gradients are tiny).
double finite_diff_check(const LossFn& loss_fn, ParamStore& store, int n_probes, double h,
                         std::uint64_t seed = 0);

}  // namespace phyhsl
