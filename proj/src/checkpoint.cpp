#include "seq2bf/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "seq2bf/binary_io.hpp"
#include "seq2bf/error.hpp"

namespace seq2bf {

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

std::string format_metadata(const Metadata& metadata) {
  std::string out;
  for (const auto& [k, v] : metadata) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw FormatError("metadata key/value contains a separator: " + k);
    }
    out += k + "=" + v + "\n";
  }
  return out;
}

Metadata parse_metadata(std::string_view text) {
  Metadata m;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("metadata line without '=': " + line);
    m[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

void write_checkpoint(std::ostream& out, const Metadata& metadata, std::span<const NamedTensor> params) {
  out.write("S2BF", 4);
  binio::put_u32(out, kCheckpointVersion);
  binio::put_string(out, format_metadata(metadata));
  binio::put_u32(out, static_cast<uint32_t>(params.size()));
  for (const auto& p : params) {
    binio::put_string(out, p.name);
    binio::put_u32(out, static_cast<uint32_t>(p.tensor->shape.size()));
    for (size_t d : p.tensor->shape) binio::put_u32(out, static_cast<uint32_t>(d));
    for (float v : p.tensor->values) binio::put_f32(out, v);
  }
}

Checkpoint read_checkpoint(std::istream& in) {
  binio::expect_magic(in, "S2BF");
  const uint32_t version = binio::get_u32(in);
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.metadata = parse_metadata(binio::get_string(in));
  const uint32_t count = binio::get_u32(in);
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = binio::get_string(in, 4096);
    const uint32_t rank = binio::get_u32(in);
    if (rank > 8) throw FormatError("tensor rank out of range for " + name);
    std::vector<size_t> dims;
    for (uint32_t r = 0; r < rank; ++r) dims.push_back(binio::get_u32(in));
    Tensor t(dims);
    for (float& v : t.values) v = binio::get_f32(in);
    ck.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Metadata& metadata,
                     std::span<const NamedTensor> params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  write_checkpoint(out, metadata, params);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint: " + path.string());
  return read_checkpoint(in);
}

void assign_params(const Checkpoint& checkpoint, std::span<const NamedTensor> params) {
  for (const auto& p : params) {
    const Tensor* src = checkpoint.find(p.name);
    if (!src) throw FormatError("checkpoint is missing tensor " + p.name);
    if (src->shape != p.tensor->shape) throw FormatError("shape mismatch for tensor " + p.name);
    p.tensor->values = src->values;
  }
}

}  // namespace seq2bf
