#pragma once

#include "comad/detector.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace comad {

// Model file layout:
//   "CMAD", u32 version, u32 section count,
//   then per section: 4-byte tag, u64 payload length, payload.
// All integers little-endian, reals as IEEE-754 binary64.
std::vector<std::uint8_t> encode_model(const ComponentModel& model);
ComponentModel decode_model(std::span<const std::uint8_t> bytes);

void save_model(const ComponentModel& model, const std::filesystem::path& path);
ComponentModel load_model(const std::filesystem::path& path);

/// Whole-file helpers shared by the binary formats.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames over `path`.
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace comad
