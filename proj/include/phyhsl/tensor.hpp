#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace phyhsl {

/// Dense row-major tensor of doubles. Most of the model works with rank-2
/// tensors (matrices); rank-1 and scalars are represented as r x 1 / 1 x 1.
class Tensor {
public:
    Tensor() = default;

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != element_count(shape_)) {
            throw std::invalid_argument("Tensor: data length " + std::to_string(data_.size()) +
                                        " does not match shape product " +
                                        std::to_string(element_count(shape_)));
        }
        check_finite("construction");
    }

    static Tensor zeros(std::vector<std::size_t> shape) {
        std::size_t n = element_count(shape);
        return Tensor(std::move(shape), std::vector<double>(n, 0.0));
    }

    static Tensor zeros_like(const Tensor& other) { return zeros(other.shape_); }

    static Tensor full(std::vector<std::size_t> shape, double v) {
        std::size_t n = element_count(shape);
        return Tensor(std::move(shape), std::vector<double>(n, v));
    }

    static Tensor identity(std::size_t n) {
        Tensor t = zeros({n, n});
        for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
        return t;
    }

    static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::size_t rank() const { return shape_.size(); }

    std::size_t rows() const {
        require_rank2();
        return shape_[0];
    }
    std::size_t cols() const {
        require_rank2();
        return shape_[1];
    }

    double& operator()(std::size_t i, std::size_t j) {
        require_rank2();
        return data_[i * shape_[1] + j];
    }
    double operator()(std::size_t i, std::size_t j) const {
        require_rank2();
        return data_[i * shape_[1] + j];
    }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape_[i]);
        }
        return s + "]";
    }

    void check_finite(const std::string& context) const {
        for (double v : data_) {
            if (!std::isfinite(v)) {
                throw std::runtime_error("Tensor: non-finite entry during " + context);
            }
        }
    }

    static std::size_t element_count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return n;
    }

private:
    void require_rank2() const {
        if (shape_.size() != 2) {
            throw std::logic_error("Tensor: rank-2 access on tensor of shape " + shape_str());
        }
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

inline double frobenius_norm(const Tensor& t) {
    double s = 0.0;
    for (double v : t.data()) s += v * v;
    return std::sqrt(s);
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("max_abs_diff: shape mismatch " + a.shape_str() + " vs " +
                                    b.shape_str());
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace phyhsl
