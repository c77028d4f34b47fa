#include "phyhsl/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace phyhsl {

void save_checkpoint(const ParamStore& store, const std::string& path) {
    nlohmann::json j;
    j["step_count"] = store.step_count();
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [name, e] : store.entries()) {
        params[name] = {{"shape", e.value.shape()}, {"data", e.value.data()}};
    }
    j["params"] = params;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    out << j.dump(2) << "\n";
}

void load_checkpoint(ParamStore& store, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    nlohmann::json j;
    in >> j;
    store.set_step_count(j.value("step_count", 0L));
    for (auto& [name, entry] : j.at("params").items()) {
        std::vector<std::size_t> shape = entry.at("shape").get<std::vector<std::size_t>>();
        std::vector<double> data = entry.at("data").get<std::vector<double>>();
        Tensor t(shape, data);
        if (store.has(name)) {
            auto& e = store.at(name);
            if (!e.value.same_shape(t)) {
                throw std::runtime_error("checkpoint shape mismatch for " + name);
            }
            e.value = std::move(t);
        } else {
            store.add(name, std::move(t));
        }
    }
}

}  // namespace phyhsl
