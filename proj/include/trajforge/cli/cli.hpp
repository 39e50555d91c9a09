#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace trajforge::cli {

/// Entry point of the `trajforge` tool. Returns the process exit code:
/// 0 success, 1 runtime failure or failed check, 2 invalid configuration or
/// usage, 3 missing or unreadable artifact.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lowercase hex SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace trajforge::cli
