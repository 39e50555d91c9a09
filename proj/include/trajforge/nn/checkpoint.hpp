#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "trajforge/nn/layers.hpp"

namespace trajforge::nn {

/// Writes parameters (float32) with a header describing names and shapes.
/// `meta` is stored under "meta" and is returned by load_params.
void save_params(const std::filesystem::path& path, const ParamList& params, const nlohmann::json& meta);

/// Loads parameters into an already-constructed network. Names and shapes must
/// match exactly; a mismatch raises LoadError(dimension_mismatch).
nlohmann::json load_params(const std::filesystem::path& path, const ParamList& params);

/// Reads just the "meta" object, to rebuild a network before load_params.
nlohmann::json read_checkpoint_meta(const std::filesystem::path& path);

/// Copies values between structurally identical parameter lists.
void copy_params(const ParamList& from, const ParamList& to);

}  // namespace trajforge::nn
