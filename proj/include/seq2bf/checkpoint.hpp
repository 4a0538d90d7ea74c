#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seq2bf/tensor.hpp"

namespace seq2bf {

// Checkpoint container layout (all integers little-endian):
//   "S2BF"  u32 version
//   u32 metadata length, metadata bytes (UTF-8 `key=value` lines)
//   u32 tensor count, then per tensor:
//     u32 name length, name bytes, u32 rank, u32 dims[rank], f32 values[]
inline constexpr uint32_t kCheckpointVersion = 1;

using Metadata = std::map<std::string, std::string>;

struct Checkpoint {
  Metadata metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const;
};

void write_checkpoint(std::ostream& out, const Metadata& metadata, std::span<const NamedTensor> params);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Metadata& metadata,
                     std::span<const NamedTensor> params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies tensor values into params by name. Throws FormatError on a missing
/// tensor or a shape mismatch.
void assign_params(const Checkpoint& checkpoint, std::span<const NamedTensor> params);

std::string format_metadata(const Metadata& metadata);
Metadata parse_metadata(std::string_view text);

}  // namespace seq2bf
