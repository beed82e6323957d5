#pragma once

#include "comad/image.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace comad {

// On-disk layout ("CFM1"):
//   0..3   magic "CFM1"
//   4..7   format version, u32 LE (= 1)
//   8..19  rows I, cols J, dim D, u32 LE each
//   20..   I*J*D float32 LE, row-major, channel fastest
inline constexpr std::uint32_t kFeatureFileVersion = 1;

std::vector<std::uint8_t> encode_feature_map(const FeatureMap& fmap);
FeatureMap decode_feature_map(std::span<const std::uint8_t> bytes);

void write_feature_file(const FeatureMap& fmap, const std::filesystem::path& path);
FeatureMap read_feature_file(const std::filesystem::path& path);

} // namespace comad
