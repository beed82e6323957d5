#include "comad/feature_file.hpp"

#include "comad/bytes.hpp"
#include "comad/error.hpp"

#include <fstream>
#include <iterator>
#include <limits>

namespace comad {

std::vector<std::uint8_t> encode_feature_map(const FeatureMap& fmap) {
    ByteWriter w;
    w.raw("CFM1");
    w.u32(kFeatureFileVersion);
    w.u32(static_cast<std::uint32_t>(fmap.rows()));
    w.u32(static_cast<std::uint32_t>(fmap.cols()));
    w.u32(static_cast<std::uint32_t>(fmap.dim()));
    for (float v : fmap.values()) {
        w.f32(v);
    }
    return w.take();
}

FeatureMap decode_feature_map(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (bytes.size() < 4) {
        throw DecodeError(DecodeReason::Truncated, "feature file: missing header");
    }
    if (r.raw(4) != "CFM1") {
        throw DecodeError(DecodeReason::BadMagic, "feature file: bad magic");
    }
    const std::uint32_t version = r.u32();
    if (version != kFeatureFileVersion) {
        throw UnsupportedVersion("feature file: unsupported version " + std::to_string(version));
    }
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    const std::uint32_t dim = r.u32();
    constexpr auto kMax = static_cast<std::uint64_t>(std::numeric_limits<int>::max());
    if (rows == 0 || cols == 0 || dim == 0 || rows > kMax || cols > kMax || dim > kMax) {
        throw DecodeError(DecodeReason::DimensionMismatch, "feature file: invalid dimensions in header");
    }
    const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols * dim;
    const std::uint64_t payload = r.remaining();
    if (payload < count * 4) {
        throw DecodeError(DecodeReason::Truncated,
                          "feature file: header declares " + std::to_string(count) + " floats, payload holds " +
                              std::to_string(payload / 4));
    }
    if (payload > count * 4) {
        throw DecodeError(DecodeReason::DimensionMismatch, "feature file: payload longer than header dimensions");
    }
    std::vector<float> values(count);
    for (auto& v : values) {
        v = r.f32();
    }
    try {
        return FeatureMap(static_cast<int>(rows), static_cast<int>(cols), static_cast<int>(dim), std::move(values));
    } catch (const InvalidArgument& e) {
        throw DecodeError(DecodeReason::Corrupt, std::string("feature file: ") + e.what());
    }
}

void write_feature_file(const FeatureMap& fmap, const std::filesystem::path& path) {
    const auto bytes = encode_feature_map(fmap);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("short write to " + path.string());
    }
}

FeatureMap read_feature_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return decode_feature_map(bytes);
}

} // namespace comad
