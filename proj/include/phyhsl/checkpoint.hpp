#pragma once

#include <string>

#include "phyhsl/param_store.hpp"

namespace phyhsl {

/// JSON checkpoint: name -> shape + row-major values, plus the optimizer
/// step count. Byte-stable given identical values (sorted keys, shortest
/// round-trip doubles).
void save_checkpoint(const ParamStore& store, const std::string& path);
void load_checkpoint(ParamStore& store, const std::string& path);

}  // namespace phyhsl
