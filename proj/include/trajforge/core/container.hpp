#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace trajforge {

// On-disk layout shared by datasets and checkpoints:
//   8-byte magic | u64 LE header length | UTF-8 JSON header | f32 LE payload

inline constexpr std::string_view kDatasetMagic = "TFDSET01";
inline constexpr std::string_view kCheckpointMagic = "TFCKPT01";

enum class LoadErrorKind { io, bad_magic, malformed_header, truncated_payload, dimension_mismatch };

class LoadError : public std::runtime_error {
 public:
  LoadError(LoadErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  LoadErrorKind kind() const noexcept { return kind_; }

 private:
  LoadErrorKind kind_;
};

struct Container {
  nlohmann::json header;
  std::vector<float> payload;
};

void write_container(const std::filesystem::path& path, std::string_view magic, const nlohmann::json& header,
                     std::span<const float> payload);

/// Reads a container. The payload must be a whole number of floats; its
/// expected size is checked by the caller against the header.
Container read_container(const std::filesystem::path& path, std::string_view magic);

}  // namespace trajforge
