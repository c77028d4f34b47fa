#include "phyhsl/param_store.hpp"

#include <algorithm>
#include <random>

namespace phyhsl {

double finite_diff_check(const LossFn& loss_fn, ParamStore& store, int n_probes, double h,
                         std::uint64_t seed) {
    store.zero_grads();
    double base = loss_fn(store, true);
    if (!std::isfinite(base)) throw std::runtime_error("finite_diff_check: loss non-finite");

    // flat index over (name, coordinate)
    std::vector<std::pair<std::string, std::size_t>> coords;
    for (const auto& [name, e] : store.entries())
        for (std::size_t i = 0; i < e.value.size(); ++i) coords.emplace_back(name, i);
    if (coords.empty()) return 0.0;

    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<std::size_t> pick(0, coords.size() - 1);

    double worst = 0.0;
    for (int p = 0; p < n_probes; ++p) {
        auto [name, i] = coords[pick(gen)];
        auto& entry = store.at(name);
        double saved = entry.value[i];
        entry.value[i] = saved + h;
        double lp = loss_fn(store, false);
        entry.value[i] = saved - h;
        double lm = loss_fn(store, false);
        entry.value[i] = saved;
        if (!std::isfinite(lp) || !std::isfinite(lm)) {
            throw std::runtime_error("finite_diff_check: loss non-finite at probe " + name +
                                     "[" + std::to_string(i) + "]");
        }
        double fd = (lp - lm) / (2.0 * h);
        double an = entry.grad[i];
        double denom = std::max(std::abs(fd), std::abs(an));
        double err = denom > 1e-6 ? std::abs(fd - an) / denom : std::abs(fd - an);
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace phyhsl
