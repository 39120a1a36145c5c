#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spikeline/ddpm/blocks.hpp"

namespace spikeline::ddpm {

// Checkpoint layout, little-endian:
//
//   magic "SLCK" | u32 version (1) | u64 init_seed | u32 record_count
//   record_count x { u32 name_len | name bytes | u32 rank | rank x u32 dims |
//                    prod(dims) x f64 values }
//
// The record "meta.config" (rank 1) holds the ModelConfig fields in
// declaration order; every other record is a named parameter.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const ConditionalModel& model);
ConditionalModel decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const ConditionalModel& model);
ConditionalModel load_checkpoint(const std::filesystem::path& path);

}  // namespace spikeline::ddpm
