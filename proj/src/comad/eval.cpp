#include "comad/eval.hpp"

#include "comad/error.hpp"
#include "comad/parallel.hpp"
#include "comad/png_io.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>

namespace comad {

using nlohmann::json;

double auroc(std::span<const double> scores, std::span<const char> anomalous) {
    if (scores.size() != anomalous.size()) {
        throw InvalidArgument("auroc: score and label counts differ");
    }
    const std::size_t n = scores.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) {
            ++j;
        }
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t) {
            rank[idx[t]] = avg;
        }
        i = j + 1;
    }
    double pos = 0.0;
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (anomalous[i]) {
            pos += 1.0;
            rank_sum += rank[i];
        }
    }
    const double neg = static_cast<double>(n) - pos;
    if (pos == 0.0 || neg == 0.0) {
        throw InvalidArgument("auroc: need both normal and anomalous samples");
    }
    return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

BenchmarkResult summarize(std::vector<ImageRecord> records) {
    BenchmarkResult r;
    r.records = std::move(records);
    std::vector<double> normal_scores;
    std::set<std::string> kinds;
    std::set<std::string> cats;
    for (const auto& rec : r.records) {
        if (rec.anomalous) {
            ++r.anomalies;
            kinds.insert(rec.kind);
            cats.insert(rec.category);
        } else {
            ++r.normals;
            normal_scores.push_back(rec.d);
        }
    }
    if (r.normals == 0 || r.anomalies == 0) {
        throw DataError("benchmark needs both normal and anomalous test images (normals: " + std::to_string(r.normals) +
                        ", anomalies: " + std::to_string(r.anomalies) + ")");
    }
    auto split = [&](auto&& pick) {
        std::vector<double> s = normal_scores;
        std::vector<char> l(s.size(), 0);
        std::size_t count = 0;
        for (const auto& rec : r.records) {
            if (rec.anomalous && pick(rec)) {
                s.push_back(rec.d);
                l.push_back(1);
                ++count;
            }
        }
        return std::pair{auroc(s, l), count};
    };
    r.overall = split([](const ImageRecord&) { return true; }).first;
    for (const auto& k : kinds) {
        KindResult kr;
        kr.kind = k;
        for (const auto& rec : r.records) {
            if (rec.anomalous && rec.kind == k) {
                kr.category = rec.category;
                break;
            }
        }
        std::tie(kr.auroc, kr.count) = split([&](const ImageRecord& rec) { return rec.kind == k; });
        r.kinds.push_back(kr);
    }
    for (const auto& c : cats) {
        r.categories[c] = split([&](const ImageRecord& rec) { return rec.category == c; }).first;
    }
    return r;
}

BenchmarkResult run_benchmark(const ComponentModel& model, const PolicyConfig& policy, std::span<const EvalItem> items,
                              SegmentationCache* cache, const EvalProgress& progress) {
    std::vector<ImageRecord> records(items.size());
    std::atomic<bool> cancelled{false};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    parallel_for(items.size(), [&](std::size_t i) {
        if (cancelled.load()) {
            return;
        }
        const auto& it = items[i];
        const auto rep = score(model, it.image, it.key, policy, cache);
        records[i] = {it.key, it.anomalous, it.kind, it.anomalous ? it.category : std::string(), rep.d_g, rep.d_h, rep.d, rep.anomalous};
        if (progress) {
            std::lock_guard lock(progress_mutex);
            if (!progress(++done, items.size())) {
                cancelled = true;
            }
        }
    });
    if (cancelled) {
        throw Cancelled("evaluation cancelled");
    }
    return summarize(std::move(records));
}

BenchmarkResult run_benchmark(const ComponentModel& model, const PolicyConfig& policy, const Dataset& dataset,
                              SegmentationCache* cache, const EvalProgress& progress) {
    if (dataset.test.empty()) {
        throw DataError("dataset '" + dataset.root.string() + "' has no test images");
    }
    std::vector<EvalItem> items(dataset.test.size());
    parallel_for(items.size(), [&](std::size_t i) {
        const auto& s = dataset.test[i];
        items[i] = {s.key, read_png(s.path), s.anomalous, s.kind, s.anomalous ? dataset.category(s.kind) : std::string()};
    });
    return run_benchmark(model, policy, items, cache, progress);
}

namespace {

json record_json(const ImageRecord& r) {
    return json{{"id", r.id},
                {"label", r.anomalous ? "anomalous" : "normal"},
                {"kind", r.kind},
                {"category", r.category},
                {"D_G", r.d_g},
                {"D_H", r.d_h},
                {"D", r.d},
                {"decision", r.predicted ? "anomalous" : "normal"}};
}

} // namespace

std::string records_to_jsonl(std::span<const ImageRecord> records) {
    std::string out;
    for (const auto& r : records) {
        out += record_json(r).dump();
        out += '\n';
    }
    return out;
}

std::string benchmark_to_json(const BenchmarkResult& r, bool include_records, int indent) {
    json kinds = json::array();
    for (const auto& k : r.kinds) {
        kinds.push_back({{"kind", k.kind}, {"category", k.category}, {"count", k.count}, {"auroc", k.auroc}});
    }
    json j{{"normals", r.normals}, {"anomalies", r.anomalies}, {"auroc", r.overall}, {"kinds", kinds}, {"categories", r.categories}};
    if (include_records) {
        json recs = json::array();
        for (const auto& rec : r.records) {
            recs.push_back(record_json(rec));
        }
        j["records"] = recs;
    }
    return j.dump(indent);
}

std::string format_table(const BenchmarkResult& r) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-24s %-12s %6s %8s\n", "kind", "category", "count", "AUROC");
    out << line;
    for (const auto& k : r.kinds) {
        std::snprintf(line, sizeof line, "%-24s %-12s %6zu %8.4f\n", k.kind.c_str(), k.category.c_str(), k.count, k.auroc);
        out << line;
    }
    for (const auto& [c, a] : r.categories) {
        std::snprintf(line, sizeof line, "%-24s %-12s %6s %8.4f\n", ("[" + c + "]").c_str(), "", "", a);
        out << line;
    }
    std::snprintf(line, sizeof line, "%-24s %-12s %6zu %8.4f\n", "overall", "", r.anomalies, r.overall);
    out << line;
    std::snprintf(line, sizeof line, "normal test images: %zu\n", r.normals);
    out << line;
    return out.str();
}

} // namespace comad
