#include "trajforge/nn/checkpoint.hpp"

#include "trajforge/core/container.hpp"
#include "trajforge/core/error.hpp"

namespace trajforge::nn {

using nlohmann::json;

void save_params(const std::filesystem::path& path, const ParamList& params, const json& meta) {
  json tensors = json::array();
  std::vector<float> payload;
  for (const Param* p : params) {
    tensors.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
    for (Index j = 0; j < p->value.cols(); ++j)
      for (Index i = 0; i < p->value.rows(); ++i) payload.push_back(static_cast<float>(p->value(i, j)));
  }
  write_container(path, kCheckpointMagic, json{{"version", 1}, {"tensors", tensors}, {"meta", meta}}, payload);
}

json read_checkpoint_meta(const std::filesystem::path& path) {
  Container c = read_container(path, kCheckpointMagic);
  if (!c.header.contains("meta")) throw LoadError(LoadErrorKind::malformed_header, "checkpoint header has no meta");
  return c.header["meta"];
}

json load_params(const std::filesystem::path& path, const ParamList& params) {
  Container c = read_container(path, kCheckpointMagic);
  const json& h = c.header;
  if (!h.contains("tensors") || !h["tensors"].is_array() || !h.contains("meta"))
    throw LoadError(LoadErrorKind::malformed_header, "checkpoint header lacks tensors/meta");
  const json& tensors = h["tensors"];
  if (tensors.size() != params.size())
    throw LoadError(LoadErrorKind::dimension_mismatch, "checkpoint has " + std::to_string(tensors.size()) +
                                                           " tensors, network has " + std::to_string(params.size()));
  std::size_t need = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const json& t = tensors[k];
    const Param& p = *params[k];
    if (t.value("name", "") != p.name || t.value("rows", Index{-1}) != p.value.rows() ||
        t.value("cols", Index{-1}) != p.value.cols())
      throw LoadError(LoadErrorKind::dimension_mismatch, "checkpoint tensor " + std::to_string(k) + " (" +
                                                             t.value("name", "?") + ") does not match " + p.name);
    need += static_cast<std::size_t>(p.value.size());
  }
  if (c.payload.size() < need) throw LoadError(LoadErrorKind::truncated_payload, "checkpoint payload truncated");
  if (c.payload.size() > need) throw LoadError(LoadErrorKind::dimension_mismatch, "checkpoint payload too long");
  std::size_t pos = 0;
  for (Param* p : params)
    for (Index j = 0; j < p->value.cols(); ++j)
      for (Index i = 0; i < p->value.rows(); ++i) p->value(i, j) = c.payload[pos++];
  return h["meta"];
}

void copy_params(const ParamList& from, const ParamList& to) {
  if (from.size() != to.size()) throw InvalidArgument("copy_params: parameter count mismatch");
  for (std::size_t k = 0; k < from.size(); ++k) {
    if (from[k]->value.rows() != to[k]->value.rows() || from[k]->value.cols() != to[k]->value.cols())
      throw InvalidArgument("copy_params: shape mismatch at " + from[k]->name);
    to[k]->value = from[k]->value;
  }
}

}  // namespace trajforge::nn
