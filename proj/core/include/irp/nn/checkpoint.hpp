#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "irp/nn/params.hpp"

namespace irp::nn {

inline constexpr char kCheckpointMagic[4] = {'I', 'R', 'P', 'W'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout, all little-endian: magic "IRPW", u32 version, u32 tensor count, then per tensor
// u32 name length, name bytes, u32 rank, rank x u32 dims, f64 payload.
std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace irp::nn
