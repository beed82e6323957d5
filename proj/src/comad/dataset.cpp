#include "comad/dataset.hpp"

#include "comad/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace comad {

namespace fs = std::filesystem;

std::string Dataset::category(const std::string& kind) const {
    auto it = kind_category.find(kind);
    return it == kind_category.end() ? std::string("unspecified") : it->second;
}

std::vector<fs::path> list_pngs(const fs::path& dir) {
    std::vector<fs::path> out;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        return out;
    }
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) {
            continue;
        }
        std::string ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".png") {
            out.push_back(e.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string relative_key(const fs::path& root, const fs::path& file) {
    return file.lexically_relative(root).generic_string();
}

Dataset load_dataset(const fs::path& root) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw IoError("dataset root '" + root.string() + "' is not a directory");
    }
    Dataset ds;
    ds.root = root;
    for (const auto& p : list_pngs(root / "train" / "good")) {
        ds.train.push_back({p, relative_key(root, p), false, "good"});
    }
    const fs::path test = root / "test";
    if (fs::is_directory(test, ec)) {
        std::vector<fs::path> kinds;
        for (const auto& e : fs::directory_iterator(test)) {
            if (e.is_directory()) {
                kinds.push_back(e.path());
            }
        }
        std::sort(kinds.begin(), kinds.end());
        for (const auto& dir : kinds) {
            const std::string kind = dir.filename().string();
            for (const auto& p : list_pngs(dir)) {
                ds.test.push_back({p, relative_key(root, p), kind != "good", kind});
            }
        }
    }
    const fs::path kinds_file = root / "kinds.json";
    if (fs::exists(kinds_file, ec)) {
        std::ifstream in(kinds_file);
        std::stringstream ss;
        ss << in.rdbuf();
        try {
            const auto j = nlohmann::json::parse(ss.str());
            for (const auto& [k, v] : j.items()) {
                ds.kind_category[k] = v.get<std::string>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw DataError("kinds.json: " + std::string(e.what()));
        }
    }
    return ds;
}

} // namespace comad
