#include "comad/model_io.hpp"

#include "comad/bytes.hpp"
#include "comad/error.hpp"

#include <cstdio>
#include <fstream>
#include <map>

namespace comad {

namespace {

constexpr char kMagic[4] = {'C', 'M', 'A', 'D'};

void put_ints(ByteWriter& w, const std::vector<int>& v) {
    w.u64(v.size());
    for (int x : v) {
        w.i32(x);
    }
}

std::vector<int> get_ints(ByteReader& r) {
    const std::uint64_t n = r.u64();
    if (n > r.remaining() / 4) {
        throw DecodeError(DecodeReason::Truncated, "model: truncated integer array");
    }
    std::vector<int> v(n);
    for (auto& x : v) {
        x = r.i32();
    }
    return v;
}

void put_bank(ByteWriter& w, const VectorBank& b) {
    w.i32(b.dim);
    w.f64s(b.rows);
}

VectorBank get_bank(ByteReader& r) {
    VectorBank b;
    b.dim = r.i32();
    b.rows = r.f64s();
    if (b.dim < 0 || (b.dim == 0 && !b.rows.empty()) || (b.dim > 0 && b.rows.size() % b.dim != 0)) {
        throw DecodeError(DecodeReason::Corrupt, "model: vector bank shape is inconsistent");
    }
    return b;
}

using Sections = std::map<std::string, std::vector<std::uint8_t>>;

void section(ByteWriter& out, const char* tag, ByteWriter& payload) {
    out.raw(std::string_view(tag, 4));
    out.u64(payload.bytes().size());
    out.raw(payload.bytes());
}

ByteReader open_section(const Sections& s, const char* tag) {
    auto it = s.find(tag);
    if (it == s.end()) {
        throw DecodeError(DecodeReason::Corrupt, std::string("model: missing section ") + tag);
    }
    return ByteReader(it->second);
}

void finish(const ByteReader& r, const char* tag) {
    if (r.remaining() != 0) {
        throw DecodeError(DecodeReason::Corrupt, std::string("model: trailing bytes in section ") + tag);
    }
}

void check_consistency(const ComponentModel& m) {
    const std::size_t kept = m.reserved.kept.size();
    const int k = m.prototypes.k;
    auto bad = [](const std::string& what) { throw DecodeError(DecodeReason::Corrupt, "model: " + what); };
    if (k < 1 || m.prototypes.dim < 1 || m.prototypes.centers.size() != static_cast<std::size_t>(k) * m.prototypes.dim) {
        bad("prototype table has the wrong size");
    }
    if (kept == 0) {
        bad("no kept components");
    }
    for (const auto* ids : {&m.reserved.kept, &m.reserved.noise, &m.reserved.background}) {
        for (int id : *ids) {
            if (id < 0 || id >= k) {
                bad("component id out of range");
            }
        }
    }
    if (m.scales.size() != kept || m.scale_scores.size() != kept || m.groups.size() != kept || m.hist_banks.size() != kept ||
        m.normalizers.mean_area.size() != kept || m.normalizers.mean_color.size() != kept ||
        m.stats.area_spread.size() != kept) {
        bad("per-component tables do not match the kept components");
    }
    const std::size_t n = m.train_keys.size();
    const int stride = features_per_component(m.config.metrology.features);
    if (m.global_bank.size() != n || static_cast<std::size_t>(m.global_bank.dim) != kept * stride) {
        bad("global vector bank does not match the training set");
    }
    for (std::size_t s = 0; s < kept; ++s) {
        if (m.hist_banks[s].dim != m.groups[s].count() || (m.hist_banks[s].dim > 0 && m.hist_banks[s].size() != n)) {
            bad("histogram bank does not match its groups");
        }
    }
    if (m.stats.d.size() != n || m.stats.d_g.size() != n || m.stats.d_h.size() != n) {
        bad("training statistics do not match the training set");
    }
}

} // namespace

std::vector<std::uint8_t> encode_model(const ComponentModel& m) {
    ByteWriter out;
    out.raw(std::string_view(kMagic, 4));
    out.u32(kModelVersion);
    out.u32(10);

    ByteWriter conf;
    conf.str(config_to_json(m.config));
    section(out, "CONF", conf);

    ByteWriter prot;
    prot.i32(m.prototypes.k);
    prot.i32(m.prototypes.dim);
    prot.f64s(m.prototypes.centers);
    section(out, "PROT", prot);

    ByteWriter resv;
    put_ints(resv, m.reserved.kept);
    put_ints(resv, m.reserved.noise);
    put_ints(resv, m.reserved.background);
    resv.str(m.reference_key);
    section(out, "RESV", resv);

    ByteWriter calb;
    calb.f64s(m.scales);
    calb.u64(m.scale_scores.size());
    for (const auto& s : m.scale_scores) {
        calb.f64s(s);
    }
    section(out, "CALB", calb);

    ByteWriter norm;
    norm.f64s(m.normalizers.mean_area);
    norm.f64s(m.normalizers.mean_color);
    norm.u64(m.normalizers.n_train);
    section(out, "NORM", norm);

    ByteWriter vbnk;
    put_bank(vbnk, m.global_bank);
    section(out, "VBNK", vbnk);

    ByteWriter grps;
    grps.u64(m.groups.size());
    for (const auto& g : m.groups) {
        grps.f64s(g.centroids);
    }
    section(out, "GRPS", grps);

    ByteWriter hbnk;
    hbnk.u64(m.hist_banks.size());
    for (const auto& b : m.hist_banks) {
        put_bank(hbnk, b);
    }
    section(out, "HBNK", hbnk);

    ByteWriter stat;
    stat.f64s(m.stats.d_g);
    stat.f64s(m.stats.d_h);
    stat.f64s(m.stats.d);
    stat.f64(m.stats.mean_d);
    stat.f64(m.stats.threshold);
    stat.f64s(m.stats.area_spread);
    section(out, "STAT", stat);

    ByteWriter tids;
    tids.u64(m.train_keys.size());
    for (const auto& k : m.train_keys) {
        tids.str(k);
    }
    section(out, "TIDS", tids);

    return out.take();
}

ComponentModel decode_model(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (bytes.size() < 4 || std::string(r.raw(4)) != std::string_view(kMagic, 4)) {
        throw DecodeError(DecodeReason::BadMagic, "model: bad magic (expected CMAD)");
    }
    const std::uint32_t version = r.u32();
    if (version != kModelVersion) {
        throw UnsupportedVersion("model: file version " + std::to_string(version) + " is not supported (expected " +
                                 std::to_string(kModelVersion) + ")");
    }
    const std::uint32_t count = r.u32();
    Sections sections;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string tag = r.raw(4);
        const std::uint64_t len = r.u64();
        if (len > r.remaining()) {
            throw DecodeError(DecodeReason::Truncated, "model: section " + tag + " length exceeds the file");
        }
        const auto payload = r.view(static_cast<std::size_t>(len));
        if (!sections.emplace(tag, std::vector<std::uint8_t>(payload.begin(), payload.end())).second) {
            throw DecodeError(DecodeReason::Corrupt, "model: duplicate section " + tag);
        }
    }
    if (r.remaining() != 0) {
        throw DecodeError(DecodeReason::Corrupt, "model: trailing bytes after the last section");
    }

    ComponentModel m;
    m.version = version;
    {
        auto s = open_section(sections, "CONF");
        try {
            m.config = config_from_json(s.str());
        } catch (const InvalidArgument& e) {
            throw DecodeError(DecodeReason::Corrupt, std::string("model: bad config: ") + e.what());
        }
        finish(s, "CONF");
    }
    {
        auto s = open_section(sections, "PROT");
        m.prototypes.k = s.i32();
        m.prototypes.dim = s.i32();
        m.prototypes.centers = s.f64s();
        finish(s, "PROT");
    }
    {
        auto s = open_section(sections, "RESV");
        m.reserved.kept = get_ints(s);
        m.reserved.noise = get_ints(s);
        m.reserved.background = get_ints(s);
        m.reference_key = s.str();
        finish(s, "RESV");
    }
    {
        auto s = open_section(sections, "CALB");
        m.scales = s.f64s();
        const std::uint64_t n = s.u64();
        if (n > s.remaining() / 8) {
            throw DecodeError(DecodeReason::Truncated, "model: truncated calibration table");
        }
        for (std::uint64_t i = 0; i < n; ++i) {
            m.scale_scores.push_back(s.f64s());
        }
        finish(s, "CALB");
    }
    {
        auto s = open_section(sections, "NORM");
        m.normalizers.mean_area = s.f64s();
        m.normalizers.mean_color = s.f64s();
        m.normalizers.n_train = s.u64();
        finish(s, "NORM");
    }
    {
        auto s = open_section(sections, "VBNK");
        m.global_bank = get_bank(s);
        finish(s, "VBNK");
    }
    {
        auto s = open_section(sections, "GRPS");
        const std::uint64_t n = s.u64();
        if (n > s.remaining() / 8) {
            throw DecodeError(DecodeReason::Truncated, "model: truncated group table");
        }
        for (std::uint64_t i = 0; i < n; ++i) {
            m.groups.push_back({s.f64s()});
        }
        finish(s, "GRPS");
    }
    {
        auto s = open_section(sections, "HBNK");
        const std::uint64_t n = s.u64();
        if (n > s.remaining() / 12) {
            throw DecodeError(DecodeReason::Truncated, "model: truncated histogram banks");
        }
        for (std::uint64_t i = 0; i < n; ++i) {
            m.hist_banks.push_back(get_bank(s));
        }
        finish(s, "HBNK");
    }
    {
        auto s = open_section(sections, "STAT");
        m.stats.d_g = s.f64s();
        m.stats.d_h = s.f64s();
        m.stats.d = s.f64s();
        m.stats.mean_d = s.f64();
        m.stats.threshold = s.f64();
        m.stats.area_spread = s.f64s();
        finish(s, "STAT");
    }
    {
        auto s = open_section(sections, "TIDS");
        const std::uint64_t n = s.u64();
        if (n > s.remaining() / 4) {
            throw DecodeError(DecodeReason::Truncated, "model: truncated key table");
        }
        for (std::uint64_t i = 0; i < n; ++i) {
            m.train_keys.push_back(s.str());
        }
        finish(s, "TIDS");
    }
    check_consistency(m);
    return m;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write " + tmp.string());
        }
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw IoError("short write to " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move model into place at " + path.string());
    }
}

void save_model(const ComponentModel& model, const std::filesystem::path& path) {
    write_file_bytes(path, encode_model(model));
}

ComponentModel load_model(const std::filesystem::path& path) {
    return decode_model(read_file_bytes(path));
}

} // namespace comad
