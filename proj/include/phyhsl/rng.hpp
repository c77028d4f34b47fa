#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "phyhsl/tensor.hpp"

namespace phyhsl {

/// Seeded PRNG wrapper used everywhere randomness is needed, so that runs
/// are reproducible from a single seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> d(lo, hi);
        return d(gen_);
    }

    double normal(double mean = 0.0, double std = 1.0) {
        std::normal_distribution<double> d(mean, std);
        return d(gen_);
    }

    std::uint64_t integer(std::uint64_t lo, std::uint64_t hi) {
        std::uniform_int_distribution<std::uint64_t> d(lo, hi);
        return d(gen_);
    }

    /// Xavier-uniform init: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
    Tensor xavier(std::size_t fan_in, std::size_t fan_out) {
        double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Tensor t = Tensor::zeros({fan_in, fan_out});
        for (auto& v : t.data()) v = uniform(-a, a);
        return t;
    }

    Tensor gaussian(std::vector<std::size_t> shape, double std = 1.0) {
        Tensor t = Tensor::zeros(std::move(shape));
        for (auto& v : t.data()) v = normal(0.0, std);
        return t;
    }

    Tensor uniform_tensor(std::vector<std::size_t> shape, double lo, double hi) {
        Tensor t = Tensor::zeros(std::move(shape));
        for (auto& v : t.data()) v = uniform(lo, hi);
        return t;
    }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

}  // namespace phyhsl
