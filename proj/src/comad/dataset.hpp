#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace comad {

struct Sample {
    std::filesystem::path path;
    /// Path relative to the dataset root, '/'-separated.
    std::string key;
    bool anomalous = false;
    /// "good" or the defect directory name.
    std::string kind;
};

/// MVTec-style layout:
///   <root>/train/good/*.png
///   <root>/test/good/*.png, <root>/test/<kind>/*.png
///   optional <root>/kinds.json mapping kind -> "logical" | "structural"
struct Dataset {
    std::filesystem::path root;
    std::vector<Sample> train;
    std::vector<Sample> test;
    std::map<std::string, std::string> kind_category;

    std::string category(const std::string& kind) const;
};

/// Sorted list of *.png files directly inside `dir` (empty if absent).
std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir);

std::string relative_key(const std::filesystem::path& root, const std::filesystem::path& file);

/// Throws IoError when the root does not exist.
Dataset load_dataset(const std::filesystem::path& root);

} // namespace comad
