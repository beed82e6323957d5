#include "comad/synth.hpp"

#include "comad/error.hpp"
#include "comad/parallel.hpp"
#include "comad/png_io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace comad {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

struct Box {
    int y0, x0, y1, x1;
};

Box clip(double y0, double x0, double y1, double x1, int size) {
    return {std::max(0, static_cast<int>(std::floor(y0))), std::max(0, static_cast<int>(std::floor(x0))),
            std::min(size - 1, static_cast<int>(std::ceil(y1))), std::min(size - 1, static_cast<int>(std::ceil(x1)))};
}

Box shape_box(const Shape& s, int size) { return clip(s.cy - s.ry, s.cx - s.rx, s.cy + s.ry, s.cx + s.rx, size); }

void mark(RegionMask& m, const Box& b, int pad) {
    for (int y = std::max(0, b.y0 - pad); y <= std::min(m.height - 1, b.y1 + pad); ++y) {
        for (int x = std::max(0, b.x0 - pad); x <= std::min(m.width - 1, b.x1 + pad); ++x) {
            m.bits[static_cast<std::size_t>(y) * m.width + x] = 1;
        }
    }
}

double segment_distance(const Stroke& s, double y, double x) {
    const double dy = s.y1 - s.y0;
    const double dx = s.x1 - s.x0;
    const double len2 = dy * dy + dx * dx;
    double t = len2 > 0 ? ((y - s.y0) * dy + (x - s.x0) * dx) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(y - (s.y0 + t * dy), x - (s.x0 + t * dx));
}

std::vector<int> part_counts(const ProductSpec& spec, const std::vector<Shape>& shapes) {
    std::vector<int> c(spec.parts.size(), 0);
    for (const auto& s : shapes) {
        ++c.at(s.part);
    }
    return c;
}

} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream));
}

// ---------------------------------------------------------------------------
// Circles
// ---------------------------------------------------------------------------

CircleImage gen_circle_image(const CircleSpec& spec, int count, int index) {
    if (count < 0 || spec.radius <= 0 || spec.size < 2 * spec.radius + 1) {
        throw InvalidArgument("gen_circle_image: invalid spec");
    }
    const std::uint64_t base = derive_seed(spec.seed, static_cast<std::uint64_t>(count) * 100003ULL + static_cast<std::uint64_t>(index));
    const double lo = spec.radius;
    const double hi = spec.size - 1 - spec.radius;
    std::vector<std::pair<double, double>> centers;
    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
        std::mt19937_64 rng(derive_seed(base, static_cast<std::uint64_t>(attempt)));
        centers.clear();
        placed = true;
        for (int c = 0; c < count && placed; ++c) {
            bool ok = false;
            for (int tries = 0; tries < 2000 && !ok; ++tries) {
                const double cy = uniform(rng, lo, hi);
                const double cx = uniform(rng, lo, hi);
                ok = std::all_of(centers.begin(), centers.end(), [&](const auto& p) {
                    return std::hypot(p.first - cy, p.second - cx) >= spec.min_center_distance;
                });
                if (ok) {
                    centers.emplace_back(cy, cx);
                }
            }
            placed = ok;
        }
    }
    if (!placed) {
        throw DataError("gen_circle_image: cannot place " + std::to_string(count) + " circles");
    }
    CircleImage out;
    out.count = count;
    out.image = Image(spec.size, spec.size, spec.background);
    out.mask = RegionMask(spec.size, spec.size, 0);
    const double r2 = spec.radius * spec.radius;
    for (const auto& [cy, cx] : centers) {
        const Box b = clip(cy - spec.radius, cx - spec.radius, cy + spec.radius, cx + spec.radius, spec.size);
        for (int y = b.y0; y <= b.y1; ++y) {
            for (int x = b.x0; x <= b.x1; ++x) {
                if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r2) {
                    out.image.set(y, x, spec.color);
                    out.mask.bits[static_cast<std::size_t>(y) * spec.size + x] = 1;
                }
            }
        }
    }
    return out;
}

std::vector<CircleImage> gen_circle_dataset(const CircleSpec& spec) {
    const int counts = spec.max_count - spec.min_count + 1;
    if (counts < 1 || spec.per_count < 1) {
        throw InvalidArgument("gen_circle_dataset: empty count range");
    }
    std::vector<CircleImage> out(static_cast<std::size_t>(counts) * spec.per_count);
    parallel_for(out.size(), [&](std::size_t i) {
        const int count = spec.min_count + static_cast<int>(i / spec.per_count);
        out[i] = gen_circle_image(spec, count, static_cast<int>(i % spec.per_count));
    });
    return out;
}

// ---------------------------------------------------------------------------
// Product scenes
// ---------------------------------------------------------------------------

bool Shape::contains(int y, int x) const {
    const double dy = y - cy;
    const double dx = x - cx;
    if (kind == ShapeKind::Circle) {
        return dy * dy + dx * dx <= ry * ry;
    }
    return std::abs(dy) <= ry && std::abs(dx) <= rx;
}

ProductSpec ProductSpec::standard() {
    ProductSpec s;
    s.parts = {
        {"red_disc", ShapeKind::Circle, {190, 30, 30}, 1, 28, 28, 2.0, {{58, 58}}},
        {"blue_bar", ShapeKind::Rect, {40, 70, 200}, 2, 12, 28, 1.5, {{44, 166}, {104, 166}}},
        {"green_dot", ShapeKind::Circle, {40, 150, 50}, 3, 10, 10, 1.0, {{178, 48}, {178, 112}, {178, 176}}},
    };
    return s;
}

void ProductSpec::validate() const {
    if (size < 16 || parts.empty() || noise < 0 || position_jitter < 0) {
        throw InvalidArgument("product spec: invalid canvas, noise or part list");
    }
    for (const auto& p : parts) {
        if (static_cast<int>(p.centers.size()) != p.count || p.count < 1) {
            throw InvalidArgument("product spec: part '" + p.name + "' needs one centre per instance");
        }
        for (const auto& [cy, cx] : p.centers) {
            const double ey = p.ry + p.size_jitter + position_jitter;
            const double ex = (p.kind == ShapeKind::Circle ? p.ry : p.rx) + p.size_jitter + position_jitter;
            if (cy - ey < 0 || cx - ex < 0 || cy + ey > size - 1 || cx + ex > size - 1) {
                throw InvalidArgument("product spec: part '" + p.name + "' does not fit the canvas");
            }
        }
    }
    if (extra_part < 0 || extra_part >= static_cast<int>(parts.size())) {
        throw InvalidArgument("product spec: extra_part out of range");
    }
    for (const auto& [kind, n] : defects) {
        if (n < 0) {
            throw InvalidArgument("product spec: negative defect count");
        }
        if (defect_category(kind).empty()) {
            throw InvalidArgument("product spec: unknown defect kind '" + kind + "'");
        }
    }
    if (n_train < 1 || n_test_normal < 0) {
        throw InvalidArgument("product spec: need at least one training image");
    }
}

std::string defect_category(const std::string& kind) {
    if (kind == "missing" || kind == "extra" || kind == "color_swap" || kind == "size_change") {
        return "logical";
    }
    if (kind == "scratch") {
        return "structural";
    }
    return {};
}

namespace {

Shape instance(const ProductSpec& spec, int part, double cy, double cx, std::mt19937_64& rng) {
    const auto& p = spec.parts[part];
    Shape s;
    s.kind = p.kind;
    s.part = part;
    s.color = p.color;
    s.cy = cy + uniform(rng, -spec.position_jitter, spec.position_jitter);
    s.cx = cx + uniform(rng, -spec.position_jitter, spec.position_jitter);
    s.ry = p.ry + uniform(rng, -p.size_jitter, p.size_jitter);
    s.rx = p.kind == ShapeKind::Circle ? s.ry : p.rx + uniform(rng, -p.size_jitter, p.size_jitter);
    return s;
}

} // namespace

std::vector<Shape> sample_layout(const ProductSpec& spec, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Shape> shapes;
    for (std::size_t p = 0; p < spec.parts.size(); ++p) {
        for (const auto& [cy, cx] : spec.parts[p].centers) {
            shapes.push_back(instance(spec, static_cast<int>(p), cy, cx, rng));
        }
    }
    return shapes;
}

Image render_scene(const ProductSpec& spec, const std::vector<Shape>& shapes, const std::vector<Stroke>& strokes,
                   std::uint64_t noise_seed) {
    Image img(spec.size, spec.size, spec.background);
    for (const auto& s : shapes) {
        const Box b = shape_box(s, spec.size);
        for (int y = b.y0; y <= b.y1; ++y) {
            for (int x = b.x0; x <= b.x1; ++x) {
                if (s.contains(y, x)) {
                    img.set(y, x, s.color);
                }
            }
        }
    }
    for (const auto& st : strokes) {
        const double pad = st.width;
        const Box b = clip(std::min(st.y0, st.y1) - pad, std::min(st.x0, st.x1) - pad, std::max(st.y0, st.y1) + pad,
                           std::max(st.x0, st.x1) + pad, spec.size);
        for (int y = b.y0; y <= b.y1; ++y) {
            for (int x = b.x0; x <= b.x1; ++x) {
                if (segment_distance(st, y, x) <= st.width / 2) {
                    img.set(y, x, st.color);
                }
            }
        }
    }
    if (spec.noise > 0) {
        std::mt19937_64 rng(noise_seed);
        std::uniform_int_distribution<int> noise(-spec.noise, spec.noise);
        for (auto& v : img.data()) {
            v = static_cast<std::uint8_t>(std::clamp(static_cast<int>(v) + noise(rng), 0, 255));
        }
    }
    return img;
}

std::vector<RegionMask> part_masks(const ProductSpec& spec, const std::vector<Shape>& shapes) {
    std::vector<int> label(static_cast<std::size_t>(spec.size) * spec.size, -1);
    for (const auto& s : shapes) {
        const Box b = shape_box(s, spec.size);
        for (int y = b.y0; y <= b.y1; ++y) {
            for (int x = b.x0; x <= b.x1; ++x) {
                if (s.contains(y, x)) {
                    label[static_cast<std::size_t>(y) * spec.size + x] = s.part;
                }
            }
        }
    }
    std::vector<RegionMask> masks;
    for (std::size_t p = 0; p < spec.parts.size(); ++p) {
        masks.emplace_back(spec.size, spec.size, static_cast<int>(p));
    }
    for (std::size_t i = 0; i < label.size(); ++i) {
        if (label[i] >= 0) {
            masks[label[i]].bits[i] = 1;
        }
    }
    return masks;
}

ProductImage gen_product_normal(const ProductSpec& spec, std::uint64_t seed, std::string key) {
    ProductImage out;
    out.key = std::move(key);
    out.shapes = sample_layout(spec, derive_seed(seed, 2));
    out.image = render_scene(spec, out.shapes, {}, derive_seed(seed, 1));
    out.part_masks = part_masks(spec, out.shapes);
    out.counts = part_counts(spec, out.shapes);
    out.defect_region = RegionMask(spec.size, spec.size, -1);
    return out;
}

ProductImage gen_product_defect(const ProductSpec& spec, const std::string& kind, std::uint64_t seed, std::string key) {
    ProductImage out = gen_product_normal(spec, seed, std::move(key));
    out.base = out.image;
    out.kind = kind;
    std::mt19937_64 rng(derive_seed(seed, 3));
    auto& shapes = out.shapes;
    std::vector<Stroke> strokes;
    RegionMask& region = out.defect_region;
    const int pad = 2;
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

    if (kind == "missing") {
        const std::size_t i = pick(shapes.size());
        mark(region, shape_box(shapes[i], spec.size), pad);
        shapes.erase(shapes.begin() + static_cast<std::ptrdiff_t>(i));
    } else if (kind == "extra") {
        const Shape s = instance(spec, spec.extra_part, spec.extra_slot.first, spec.extra_slot.second, rng);
        mark(region, shape_box(s, spec.size), pad);
        shapes.push_back(s);
    } else if (kind == "color_swap") {
        if (spec.parts.size() < 2) {
            throw InvalidArgument("color_swap needs at least two parts");
        }
        const int a = static_cast<int>(pick(spec.parts.size()));
        int b = static_cast<int>(pick(spec.parts.size() - 1));
        if (b >= a) {
            ++b;
        }
        for (auto& s : shapes) {
            if (s.part == a || s.part == b) {
                mark(region, shape_box(s, spec.size), pad);
                s.color = s.part == a ? spec.parts[b].color : spec.parts[a].color;
            }
        }
    } else if (kind == "size_change") {
        const std::size_t i = pick(shapes.size());
        Shape& s = shapes[i];
        mark(region, shape_box(s, spec.size), pad);
        const double f = std::bernoulli_distribution(0.5)(rng) ? uniform(rng, 1.3, 1.4) : uniform(rng, 0.6, 0.7);
        s.ry *= f;
        s.rx *= f;
        mark(region, shape_box(s, spec.size), pad);
    } else if (kind == "scratch") {
        const Shape& s = shapes[pick(shapes.size())];
        const double angle = uniform(rng, 0.0, 3.14159265358979323846);
        const double half = 0.8 * std::max(s.ry, s.rx);
        Stroke st;
        st.y0 = s.cy - half * std::sin(angle);
        st.x0 = s.cx - half * std::cos(angle);
        st.y1 = s.cy + half * std::sin(angle);
        st.x1 = s.cx + half * std::cos(angle);
        mark(region, clip(std::min(st.y0, st.y1), std::min(st.x0, st.x1), std::max(st.y0, st.y1), std::max(st.x0, st.x1), spec.size),
             pad + static_cast<int>(std::ceil(st.width)));
        strokes.push_back(st);
    } else {
        throw InvalidArgument("unknown defect kind '" + kind + "'");
    }
    out.image = render_scene(spec, shapes, strokes, derive_seed(seed, 1));
    out.part_masks = part_masks(spec, shapes);
    out.counts = part_counts(spec, shapes);
    return out;
}

ProductDataset gen_product_dataset(const ProductSpec& spec) {
    spec.validate();
    ProductDataset ds;
    ds.spec = spec;
    ds.train.resize(spec.n_train);
    parallel_for(ds.train.size(), [&](std::size_t i) {
        char name[64];
        std::snprintf(name, sizeof name, "train/good/%03zu.png", i);
        ds.train[i] = gen_product_normal(spec, derive_seed(spec.seed, 1000000 + i), name);
    });
    struct Job {
        std::string kind;
        int index;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (int i = 0; i < spec.n_test_normal; ++i) {
        jobs.push_back({"good", i, derive_seed(spec.seed, 2000000 + static_cast<std::uint64_t>(i))});
    }
    std::uint64_t kind_index = 0;
    for (const auto& [kind, n] : spec.defects) {
        for (int i = 0; i < n; ++i) {
            jobs.push_back({kind, i, derive_seed(spec.seed, 3000000 + kind_index * 10000 + static_cast<std::uint64_t>(i))});
        }
        ++kind_index;
    }
    ds.test.resize(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t j) {
        const auto& job = jobs[j];
        char name[128];
        std::snprintf(name, sizeof name, "test/%s/%03d.png", job.kind.c_str(), job.index);
        ds.test[j] = job.kind == "good" ? gen_product_normal(spec, job.seed, name) : gen_product_defect(spec, job.kind, job.seed, name);
    });
    return ds;
}

namespace {

ScalarField mask_field(const RegionMask& m) {
    ScalarField f(m.height, m.width);
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
        f[i] = m.bits[i] ? 1.0 : 0.0;
    }
    return f;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << text;
}

} // namespace

void write_product_dataset(const ProductDataset& ds, const fs::path& root) {
    fs::create_directories(root / "train" / "good");
    fs::create_directories(root / "test" / "good");
    nlohmann::json kinds = nlohmann::json::object();
    for (const auto& [kind, n] : ds.spec.defects) {
        if (n > 0) {
            fs::create_directories(root / "test" / kind);
            fs::create_directories(root / "ground_truth" / kind);
            kinds[kind] = defect_category(kind);
        }
    }
    for (const auto& img : ds.train) {
        write_png(img.image, root / img.key);
    }
    for (const auto& img : ds.test) {
        write_png(img.image, root / img.key);
        if (img.kind != "good") {
            fs::path gt = root / "ground_truth" / img.kind / fs::path(img.key).filename();
            gt.replace_filename(gt.stem().string() + "_mask.png");
            write_png_gray(mask_field(img.defect_region), gt);
        }
    }
    write_text(root / "kinds.json", kinds.dump(2) + "\n");
}

void write_circle_dataset(const CircleSpec& spec, int normal_count, const std::vector<int>& anomalous_counts, int n_train,
                          int n_test, const fs::path& root) {
    if (n_train < 1 || n_test < 1) {
        throw InvalidArgument("write_circle_dataset: need training and test images");
    }
    auto emit = [&](int count, int index, const fs::path& dir, const fs::path& gt_dir, const std::string& name) {
        const auto img = gen_circle_image(spec, count, index);
        write_png(img.image, dir / name);
        if (!gt_dir.empty()) {
            write_png_gray(mask_field(img.mask), gt_dir / name);
        }
    };
    fs::create_directories(root / "train" / "good");
    fs::create_directories(root / "test" / "good");
    fs::create_directories(root / "ground_truth" / "good");
    nlohmann::json kinds = nlohmann::json::object();
    char name[32];
    for (int i = 0; i < n_train; ++i) {
        std::snprintf(name, sizeof name, "%03d.png", i);
        emit(normal_count, i, root / "train" / "good", {}, name);
    }
    for (int i = 0; i < n_test; ++i) {
        std::snprintf(name, sizeof name, "%03d.png", i);
        emit(normal_count, n_train + i, root / "test" / "good", root / "ground_truth" / "good", name);
    }
    for (int c : anomalous_counts) {
        const std::string kind = "count_" + std::to_string(c);
        fs::create_directories(root / "test" / kind);
        fs::create_directories(root / "ground_truth" / kind);
        kinds[kind] = "logical";
        for (int i = 0; i < n_test; ++i) {
            std::snprintf(name, sizeof name, "%03d.png", i);
            emit(c, i, root / "test" / kind, root / "ground_truth" / kind, name);
        }
    }
    write_text(root / "kinds.json", kinds.dump(2) + "\n");
}

} // namespace comad
