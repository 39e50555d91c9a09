#include "trajforge/core/container.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace trajforge {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

void write_container(const std::filesystem::path& path, std::string_view magic, const nlohmann::json& header,
                     std::span<const float> payload) {
  if (magic.size() != 8) throw std::invalid_argument("container magic must be 8 bytes");
  const std::string head = header.dump();
  std::string bytes;
  bytes.reserve(16 + head.size() + payload.size() * 4);
  bytes.append(magic);
  put_u64(bytes, head.size());
  bytes.append(head);
  for (float f : payload) put_u32(bytes, std::bit_cast<std::uint32_t>(f));

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError(LoadErrorKind::io, "cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw LoadError(LoadErrorKind::io, "write failed: " + path.string());
}

Container read_container(const std::filesystem::path& path, std::string_view magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadErrorKind::io, "cannot open: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 8 || std::memcmp(bytes.data(), magic.data(), 8) != 0)
    throw LoadError(LoadErrorKind::bad_magic, path.string() + ": bad magic (expected " + std::string(magic) + ")");
  if (bytes.size() < 16) throw LoadError(LoadErrorKind::malformed_header, path.string() + ": missing header length");
  const std::uint64_t head_len = get_u64(bytes.data() + 8);
  if (head_len > bytes.size() - 16)
    throw LoadError(LoadErrorKind::malformed_header, path.string() + ": header length exceeds file size");

  Container c;
  try {
    c.header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(head_len));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(LoadErrorKind::malformed_header, path.string() + ": header is not valid JSON: " + e.what());
  }
  if (!c.header.is_object()) throw LoadError(LoadErrorKind::malformed_header, path.string() + ": header is not an object");

  const std::size_t body = bytes.size() - 16 - head_len;
  if (body % 4 != 0) throw LoadError(LoadErrorKind::truncated_payload, path.string() + ": payload ends mid-float");
  c.payload.resize(body / 4);
  const unsigned char* p = bytes.data() + 16 + head_len;
  for (std::size_t i = 0; i < c.payload.size(); ++i) c.payload[i] = std::bit_cast<float>(get_u32(p + 4 * i));
  return c;
}

}  // namespace trajforge
