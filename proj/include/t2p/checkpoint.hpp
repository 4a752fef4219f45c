#pragma once

#include <filesystem>
#include <string>

#include "t2p/adam.hpp"
#include "t2p/tensor.hpp"

namespace t2p::nn {

// Versioned little-endian binary container of named parameter tensors, with
// an optional Adam-state section and a free-form JSON meta string (models
// stash their config there). Round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     const Adam* opt = nullptr, const std::string& meta_json = "");

// Reads the meta string without loading tensors.
std::string read_checkpoint_meta(const std::filesystem::path& path);

// Strict load into an existing store: every stored tensor must match a
// parameter by name and dims (LoadError otherwise). `opt`, when given, must
// have been constructed over `store`.
void load_checkpoint(const std::filesystem::path& path, ParameterStore& store, Adam* opt = nullptr);

}  // namespace t2p::nn
