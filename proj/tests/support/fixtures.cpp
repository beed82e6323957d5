#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <unistd.h>

namespace fs = std::filesystem;

namespace fixture {

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

comad::ProductSpec product_spec(int n_train, int n_test_normal, int per_defect, std::uint64_t seed) {
    auto spec = comad::ProductSpec::standard();
    spec.n_train = n_train;
    spec.n_test_normal = n_test_normal;
    for (auto& [kind, n] : spec.defects) {
        n = per_defect;
    }
    spec.seed = seed;
    return spec;
}

std::vector<comad::TrainingImage> training_images(const comad::ProductDataset& ds) {
    std::vector<comad::TrainingImage> out;
    for (const auto& p : ds.train) {
        out.push_back({p.key, p.image});
    }
    return out;
}

std::vector<comad::EvalItem> eval_items(const comad::ProductDataset& ds) {
    std::vector<comad::EvalItem> out;
    for (const auto& p : ds.test) {
        const bool anomalous = p.kind != "good";
        out.push_back({p.key, p.image, anomalous, p.kind, anomalous ? comad::defect_category(p.kind) : std::string()});
    }
    return out;
}

const SmallSetup& small_setup() {
    static const SmallSetup setup = [] {
        SmallSetup s;
        s.dataset = comad::gen_product_dataset(product_spec(12, 6, 3, 1));
        comad::Config cfg;
        cfg.segmentation.crf_enabled = false;
        s.model = comad::train(training_images(s.dataset), cfg);
        return s;
    }();
    return setup;
}

comad::Image blob_image(std::mt19937_64& rng, int h, int w, int regions, int noise, std::vector<int>* labels) {
    std::vector<int> lab(static_cast<std::size_t>(h) * w, 0);
    std::uniform_int_distribution<int> ch(0, 255);
    std::vector<comad::Rgb> colors{{200, 200, 200}};
    for (int r = 0; r < regions; ++r) {
        colors.push_back({static_cast<std::uint8_t>(ch(rng)), static_cast<std::uint8_t>(ch(rng)), static_cast<std::uint8_t>(ch(rng))});
        std::uniform_int_distribution<int> sy(0, h - 1), sx(0, w - 1);
        int y0 = sy(rng), y1 = sy(rng), x0 = sx(rng), x1 = sx(rng);
        if (y0 > y1) std::swap(y0, y1);
        if (x0 > x1) std::swap(x0, x1);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                lab[static_cast<std::size_t>(y) * w + x] = r + 1;
            }
        }
    }
    comad::Image img(h, w);
    std::uniform_int_distribution<int> nz(-noise, noise);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto c = colors[lab[static_cast<std::size_t>(y) * w + x]];
            auto add = [&](std::uint8_t v) { return static_cast<std::uint8_t>(std::clamp(v + nz(rng), 0, 255)); };
            img.set(y, x, {add(c.r), add(c.g), add(c.b)});
        }
    }
    if (labels) {
        *labels = std::move(lab);
    }
    return img;
}

comad::SegmentationField noisy_field(std::mt19937_64& rng, const std::vector<int>& labels, int h, int w, int k) {
    comad::SegmentationField f(h, w, k);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t p = 0; p < f.pixel_count(); ++p) {
        double z = 0.0;
        for (int l = 0; l < k; ++l) {
            f.at(p, l) = u(rng) + (labels[p] % k == l ? 1.5 * u(rng) : 0.0);
            z += f.at(p, l);
        }
        for (int l = 0; l < k; ++l) {
            f.at(p, l) /= z;
        }
    }
    return f;
}

comad::SegmentationField random_field(std::mt19937_64& rng, int h, int w, int k) {
    comad::SegmentationField f(h, w, k);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (std::size_t p = 0; p < f.pixel_count(); ++p) {
        double z = 0.0;
        for (int l = 0; l < k; ++l) {
            f.at(p, l) = u(rng);
            z += f.at(p, l);
        }
        for (int l = 0; l < k; ++l) {
            f.at(p, l) /= z;
        }
    }
    return f;
}

} // namespace fixture
