// comad: command-line front end and HTTP service over the C API.

#include "comad/comad.h"

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

int exit_code(comad_status s) {
    switch (s) {
        case COMAD_OK:                      return kOk;
        case COMAD_ERR_INVALID_ARGUMENT:    return kUsage;
        case COMAD_ERR_IO:
        case COMAD_ERR_DECODE:
        case COMAD_ERR_UNSUPPORTED_VERSION:
        case COMAD_ERR_TRAINING:
        case COMAD_ERR_DATA:                return kData;
        case COMAD_ERR_CANCELLED:
        case COMAD_ERR_INTERNAL:            return kInternal;
    }
    return kInternal;
}

struct Failure {
    comad_status status;
    std::string message;
};

void check(comad_status s, const std::string& what) {
    if (s != COMAD_OK) {
        throw Failure{s, what + ": " + comad_last_error()};
    }
}

struct ModelDel {
    void operator()(comad_model* m) const { comad_model_free(m); }
};
struct PolicyDel {
    void operator()(comad_policy* p) const { comad_policy_free(p); }
};
struct ImageDel {
    void operator()(comad_image* i) const { comad_image_free(i); }
};
using ModelPtr = std::unique_ptr<comad_model, ModelDel>;
using PolicyPtr = std::unique_ptr<comad_policy, PolicyDel>;
using ImagePtr = std::unique_ptr<comad_image, ImageDel>;

// Takes ownership of a C string from the library.
std::string take(char* s) {
    std::string out = s ? s : "";
    comad_string_free(s);
    return out;
}

std::vector<std::uint8_t> take_bytes(std::uint8_t* data, std::size_t size) {
    std::vector<std::uint8_t> out(data, data + size);
    comad_buffer_free(data);
    return out;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Failure{COMAD_ERR_IO, "cannot open '" + path + "'"};
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    const fs::path p(path);
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path());
    }
    std::ofstream out(p, std::ios::binary);
    if (!out) {
        throw Failure{COMAD_ERR_IO, "cannot write '" + path + "'"};
    }
    out << text;
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    const fs::path p(path);
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path());
    }
    std::ofstream out(p, std::ios::binary);
    if (!out) {
        throw Failure{COMAD_ERR_IO, "cannot write '" + path + "'"};
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ModelPtr load_model(const std::string& path) {
    comad_model* m = nullptr;
    check(comad_model_load(path.c_str(), &m), "load model");
    return ModelPtr(m);
}

PolicyPtr load_policy(const std::string& path) {
    comad_policy* p = nullptr;
    if (path.empty()) {
        check(comad_policy_create(&p), "policy");
    } else {
        check(comad_policy_load(path.c_str(), &p), "load policy");
    }
    return PolicyPtr(p);
}

ImagePtr read_image(const std::string& path) {
    comad_image* img = nullptr;
    check(comad_image_read(path.c_str(), &img), "read image");
    return ImagePtr(img);
}

// Options shared by the subcommands that build a configuration.
struct ConfigFlags {
    std::string config_file;
    std::optional<std::uint64_t> seed;
    std::string features;
    std::string features_dir;
    bool no_crf = false;
    std::optional<int> k;
    std::vector<std::string> sets;

    void add_to(CLI::App* app) {
        app->add_option("--config", config_file, "JSON configuration file")->check(CLI::ExistingFile);
        app->add_option("--seed", seed, "random seed");
        app->add_option("--features", features, "feature source")->check(CLI::IsMember({"mock", "file"}));
        app->add_option("--features-dir", features_dir, "directory of CFM1 feature files (--features file)");
        app->add_flag("--no-crf", no_crf, "skip CRF refinement");
        app->add_option("--k", k, "number of k-means components");
        app->add_option("--set", sets, "override as dotted.key=value (repeatable)");
    }

    // defaults -> config file -> flags
    std::string resolve() const {
        std::string cfg = take_config(nullptr, config_file.empty() ? nullptr : read_text(config_file).c_str());
        auto set = [&](const std::string& key, const std::string& value) {
            char* out = nullptr;
            check(comad_config_set(cfg.c_str(), key.c_str(), value.c_str(), &out), "config " + key);
            cfg = take(out);
        };
        if (seed) {
            set("seed", std::to_string(*seed));
        }
        if (!features.empty()) {
            set("features.extractor", json(features).dump());
        }
        if (!features_dir.empty()) {
            set("features.dir", json(features_dir).dump());
        }
        if (no_crf) {
            set("segmentation.crf.enabled", "false");
        }
        if (k) {
            set("segmentation.k", std::to_string(*k));
        }
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw Failure{COMAD_ERR_INVALID_ARGUMENT, "--set expects key=value, got '" + s + "'"};
            }
            std::string value = s.substr(eq + 1);
            if (!json::accept(value)) {
                value = json(value).dump();
            }
            set(s.substr(0, eq), value);
        }
        return cfg;
    }

private:
    static std::string take_config(const char* base, const char* overlay) {
        char* out = nullptr;
        check(comad_config_merge(base, overlay, &out), "config");
        return take(out);
    }
};

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string data;
    std::string out;
    ConfigFlags cfg;
};

int cmd_train(const TrainArgs& a) {
    const std::string cfg = a.cfg.resolve();
    comad_model* m = nullptr;
    check(comad_train(a.data.c_str(), cfg.c_str(), &m), "train");
    ModelPtr model(m);
    check(comad_model_save(model.get(), a.out.c_str()), "save model");
    char* summary = nullptr;
    check(comad_model_summary(model.get(), &summary), "summary");
    const auto j = json::parse(take(summary));
    std::cerr << "trained " << a.out << ": K'=" << j["k_kept"] << " kept=" << j["kept"].dump()
              << " threshold=" << j["training"]["threshold"] << "\n";
    return kOk;
}

struct ScoreArgs {
    std::string model;
    std::string policy;
    std::vector<std::string> images;
    std::string out;
    std::optional<double> external;
    std::string ensemble = "add";
    double external_mean = 1.0;
};

int cmd_score(const ScoreArgs& a) {
    const auto model = load_model(a.model);
    const auto policy = load_policy(a.policy);
    comad_score_options opts;
    comad_score_options_init(&opts);
    if (a.external) {
        opts.has_external_score = 1;
        opts.external_score = *a.external;
        opts.ensemble_mode = a.ensemble == "normalized_add" ? COMAD_ENSEMBLE_NORMALIZED_ADD : COMAD_ENSEMBLE_ADD;
        opts.external_mean = a.external_mean;
    }
    std::string lines;
    for (const auto& path : a.images) {
        const auto img = read_image(path);
        char* rep = nullptr;
        check(comad_score_ex(model.get(), img.get(), path.c_str(), policy.get(), &opts, &rep), "score " + path);
        lines += take(rep) + "\n";
    }
    write_text(a.out, lines);
    return kOk;
}

struct SegmentArgs {
    std::string model;
    std::string image;
    std::string overlay;
    std::string masks;
};

int cmd_segment(const SegmentArgs& a) {
    const auto model = load_model(a.model);
    const auto img = read_image(a.image);
    char* masks = nullptr;
    std::uint8_t* png = nullptr;
    std::size_t size = 0;
    check(comad_segment(model.get(), img.get(), a.image.c_str(), &masks, &png, &size), "segment");
    const std::string masks_json = take(masks);
    write_bytes(a.overlay, take_bytes(png, size));
    write_text(a.masks, masks_json + "\n");
    return kOk;
}

struct EvalArgs {
    std::string model;
    std::string policy;
    std::string data;
    std::string out;
    std::string table;
    std::string records;
};

int cmd_eval(const EvalArgs& a) {
    const auto model = load_model(a.model);
    const auto policy = load_policy(a.policy);
    char* result = nullptr;
    char* table = nullptr;
    char* records = nullptr;
    check(comad_evaluate(model.get(), policy.get(), a.data.c_str(), nullptr, nullptr, &result, &table, &records), "eval");
    const std::string result_json = take(result);
    const std::string table_text = take(table);
    const std::string records_text = take(records);
    if (!a.out.empty()) {
        write_text(a.out, result_json + "\n");
    }
    if (!a.records.empty()) {
        write_text(a.records, records_text);
    }
    write_text(a.table, table_text);
    return kOk;
}

struct GenArgs {
    std::string kind;
    std::string out;
    std::uint64_t seed = 0;
    std::string spec;
};

int cmd_gen(const GenArgs& a) {
    const std::string options = a.spec.empty() ? std::string() : read_text(a.spec);
    check(comad_generate(a.kind.c_str(), a.out.c_str(), a.seed, options.empty() ? nullptr : options.c_str()), "gen");
    std::cerr << "wrote " << a.kind << " dataset to " << a.out << "\n";
    return kOk;
}

struct AblateArgs {
    std::string data;
    std::string out;
    ConfigFlags cfg;
};

int cmd_ablate(const AblateArgs& a) {
    const std::string cfg = a.cfg.resolve();
    char* result = nullptr;
    char* table = nullptr;
    check(comad_ablate(a.data.c_str(), cfg.c_str(), &result, &table), "ablate");
    const std::string result_json = take(result);
    const std::string table_text = take(table);
    if (!a.out.empty()) {
        write_text(a.out, result_json + "\n");
    }
    std::cout << table_text;
    return kOk;
}

// ---------------------------------------------------------------------------
// HTTP service
// ---------------------------------------------------------------------------

struct ServeArgs {
    std::string model;
    std::string policy;
    std::string host = "127.0.0.1";
    int port = 8080;
    bool persist_policy = false;
    std::vector<std::string> data_roots;
};

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h = (h ^ c) * 1099511628211ull;
    }
    return h;
}

int http_status(comad_status s) {
    switch (s) {
        case COMAD_ERR_INVALID_ARGUMENT:
        case COMAD_ERR_DECODE:              return 400;
        case COMAD_ERR_IO:                  return 404;
        case COMAD_ERR_DATA:
        case COMAD_ERR_TRAINING:
        case COMAD_ERR_UNSUPPORTED_VERSION: return 422;
        case COMAD_ERR_CANCELLED:           return 409;
        default:                            return 500;
    }
}

class Service {
public:
    Service(ModelPtr model, PolicyPtr policy, ServeArgs args)
        : model_(std::move(model)), policy_(std::move(policy)), args_(std::move(args)) {}

    void install(httplib::Server& srv) {
        srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                 {"Access-Control-Allow-Methods", "GET, PUT, POST, OPTIONS"},
                                 {"Access-Control-Allow-Headers", "Content-Type"}});
        srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
        srv.Get("/api/model/summary", wrap([this](const httplib::Request&, httplib::Response& res) { summary(res); }));
        srv.Get("/api/policy", wrap([this](const httplib::Request&, httplib::Response& res) { get_policy(res); }));
        srv.Put("/api/policy", wrap([this](const httplib::Request& req, httplib::Response& res) { put_policy(req, res); }));
        srv.Post("/api/score", wrap([this](const httplib::Request& req, httplib::Response& res) { score(req, res); }));
        srv.Post("/api/segment", wrap([this](const httplib::Request& req, httplib::Response& res) { segment(req, res); }));
        srv.Post("/api/eval", wrap([this](const httplib::Request& req, httplib::Response& res) { eval(req, res); }));
        srv.Post("/api/eval/cancel", wrap([this](const httplib::Request&, httplib::Response& res) {
                     ++eval_generation_;
                     res.set_content(R"({"cancelled":true})", "application/json");
                 }));
        srv.Get(R"(/api/images/(.+)/overlay)",
                wrap([this](const httplib::Request& req, httplib::Response& res) { overlay(req.matches[1].str(), res); }));
    }

private:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    static void error(httplib::Response& res, int code, comad_status s, const std::string& msg) {
        res.status = code;
        res.set_content(json{{"error", msg}, {"status", comad_status_name(s)}}.dump(), "application/json");
    }

    static Handler wrap(Handler h) {
        return [h](const httplib::Request& req, httplib::Response& res) {
            try {
                h(req, res);
            } catch (const Failure& f) {
                error(res, http_status(f.status), f.status, f.message);
            } catch (const json::exception& e) {
                error(res, 400, COMAD_ERR_INVALID_ARGUMENT, std::string("json: ") + e.what());
            } catch (const std::exception& e) {
                error(res, 500, COMAD_ERR_INTERNAL, e.what());
            }
        };
    }

    PolicyPtr policy_snapshot() const {
        std::shared_lock lock(policy_mutex_);
        comad_policy* p = nullptr;
        check(comad_policy_copy(policy_.get(), &p), "policy");
        return PolicyPtr(p);
    }

    void summary(httplib::Response& res) {
        char* s = nullptr;
        check(comad_model_summary(model_.get(), &s), "summary");
        res.set_content(take(s), "application/json");
    }

    void get_policy(httplib::Response& res) {
        const auto p = policy_snapshot();
        char* s = nullptr;
        check(comad_policy_to_json(p.get(), &s), "policy");
        res.set_content(take(s), "application/json");
    }

    // Last write wins. Only decisions change; the model is never touched.
    void put_policy(const httplib::Request& req, httplib::Response& res) {
        comad_policy* p = nullptr;
        check(comad_policy_from_json(req.body.c_str(), &p), "policy");
        PolicyPtr fresh(p);
        char* s = nullptr;
        check(comad_policy_to_json(fresh.get(), &s), "policy");
        const std::string text = take(s);
        {
            std::unique_lock lock(policy_mutex_);
            policy_ = std::move(fresh);
            if (args_.persist_policy && !args_.policy.empty()) {
                write_text(args_.policy, json::parse(text).dump(2) + "\n");
            }
        }
        res.set_content(text, "application/json");
    }

    // Image from a raw PNG body, a multipart "image" field, or JSON {"path"}.
    struct Upload {
        std::string id;
        std::string png;
    };

    Upload upload(const httplib::Request& req) const {
        Upload u;
        if (req.is_multipart_form_data()) {
            if (!req.has_file("image")) {
                throw Failure{COMAD_ERR_INVALID_ARGUMENT, "multipart body lacks an 'image' field"};
            }
            const auto f = req.get_file_value("image");
            u.png = f.content;
            u.id = req.has_file("id") ? req.get_file_value("id").content : f.filename;
        } else if (req.get_header_value("Content-Type").starts_with("application/json")) {
            const auto j = json::parse(req.body);
            const std::string path = j.at("path").get<std::string>();
            u.png = read_text(path);
            u.id = j.value("id", path);
        } else {
            u.png = req.body;
        }
        if (req.has_param("id")) {
            u.id = req.get_param_value("id");
        }
        if (u.png.empty()) {
            throw Failure{COMAD_ERR_INVALID_ARGUMENT, "empty image upload"};
        }
        if (u.id.empty()) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "upload-%016llx", static_cast<unsigned long long>(fnv1a(u.png)));
            u.id = buf;
        }
        return u;
    }

    ImagePtr decode(const std::string& png) const {
        comad_image* img = nullptr;
        check(comad_image_decode_png(reinterpret_cast<const std::uint8_t*>(png.data()), png.size(), &img), "decode image");
        return ImagePtr(img);
    }

    void remember(const Upload& u) {
        std::lock_guard lock(store_mutex_);
        if (!store_.count(u.id)) {
            order_.push_back(u.id);
            if (order_.size() > kStoreLimit) {
                store_.erase(order_.front());
                order_.pop_front();
            }
        }
        store_[u.id] = u.png;
    }

    void score(const httplib::Request& req, httplib::Response& res) {
        const auto u = upload(req);
        const auto img = decode(u.png);
        remember(u);
        comad_score_options opts;
        comad_score_options_init(&opts);
        if (req.has_param("external_score")) {
            opts.has_external_score = 1;
            opts.external_score = std::stod(req.get_param_value("external_score"));
            const auto mode = req.has_param("ensemble") ? req.get_param_value("ensemble") : std::string("add");
            if (mode != "add" && mode != "normalized_add") {
                throw Failure{COMAD_ERR_INVALID_ARGUMENT, "ensemble must be add or normalized_add"};
            }
            opts.ensemble_mode = mode == "normalized_add" ? COMAD_ENSEMBLE_NORMALIZED_ADD : COMAD_ENSEMBLE_ADD;
            if (req.has_param("external_mean")) {
                opts.external_mean = std::stod(req.get_param_value("external_mean"));
            }
        }
        const auto policy = policy_snapshot();
        char* rep = nullptr;
        check(comad_score_ex(model_.get(), img.get(), u.id.c_str(), policy.get(), &opts, &rep), "score");
        res.set_content(take(rep), "application/json");
    }

    void segment(const httplib::Request& req, httplib::Response& res) {
        const auto u = upload(req);
        const auto img = decode(u.png);
        remember(u);
        char* masks = nullptr;
        check(comad_segment(model_.get(), img.get(), u.id.c_str(), &masks, nullptr, nullptr), "segment");
        auto j = json::parse(take(masks));
        j["overlay"] = "/api/images/" + httplib::detail::encode_url(u.id) + "/overlay";
        res.set_content(j.dump(), "application/json");
    }

    void eval(const httplib::Request& req, httplib::Response& res) {
        const auto body = json::parse(req.body.empty() ? std::string("{}") : req.body);
        const std::string dataset = body.at("dataset").get<std::string>();
        {
            std::lock_guard lock(store_mutex_);
            if (std::find(roots_.begin(), roots_.end(), dataset) == roots_.end()) {
                roots_.push_back(dataset);
            }
        }
        const auto policy = policy_snapshot();
        struct Ctx {
            const std::atomic<std::uint64_t>* generation;
            std::uint64_t start;
        } ctx{&eval_generation_, eval_generation_.load()};
        auto progress = [](std::size_t, std::size_t, void* user) -> int {
            const auto* c = static_cast<const Ctx*>(user);
            return c->generation->load() != c->start ? 1 : 0;
        };
        char* result = nullptr;
        char* table = nullptr;
        check(comad_evaluate(model_.get(), policy.get(), dataset.c_str(), progress, &ctx, &result, &table, nullptr), "eval");
        auto j = json::parse(take(result));
        j["table"] = take(table);
        res.set_content(j.dump(), "application/json");
    }

    void overlay(const std::string& id, httplib::Response& res) {
        std::string png;
        {
            std::lock_guard lock(store_mutex_);
            if (const auto it = store_.find(id); it != store_.end()) {
                png = it->second;
            } else {
                std::vector<std::string> roots = roots_;
                roots.insert(roots.end(), args_.data_roots.begin(), args_.data_roots.end());
                for (const auto& r : roots) {
                    const fs::path p = fs::path(r) / id;
                    if (fs::is_regular_file(p)) {
                        png = read_text(p.string());
                        break;
                    }
                }
            }
        }
        if (png.empty()) {
            error(res, 404, COMAD_ERR_IO, "unknown image id '" + id + "'");
            return;
        }
        const auto img = decode(png);
        std::uint8_t* data = nullptr;
        std::size_t size = 0;
        check(comad_segment(model_.get(), img.get(), id.c_str(), nullptr, &data, &size), "overlay");
        const auto bytes = take_bytes(data, size);
        res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
    }

    static constexpr std::size_t kStoreLimit = 1024;

    ModelPtr model_;
    mutable std::shared_mutex policy_mutex_;
    PolicyPtr policy_;
    ServeArgs args_;
    std::mutex store_mutex_;
    std::map<std::string, std::string> store_;
    std::deque<std::string> order_;
    std::vector<std::string> roots_;
    std::atomic<std::uint64_t> eval_generation_{0};
};

int cmd_serve(const ServeArgs& a) {
    auto model = load_model(a.model);
    auto policy = load_policy(a.policy);
    Service service(std::move(model), std::move(policy), a);
    httplib::Server srv;
    service.install(srv);
    int port = a.port;
    if (port == 0) {
        port = srv.bind_to_any_port(a.host);
    } else if (!srv.bind_to_port(a.host, port)) {
        port = -1;
    }
    if (port <= 0) {
        throw Failure{COMAD_ERR_IO, "cannot bind " + a.host + ":" + std::to_string(a.port)};
    }
    std::cerr << "serving on http://" << a.host << ":" << port << std::endl;
    srv.listen_after_bind();
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Component-aware logical anomaly detection"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(comad_version()));

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "train a model on <data>/train/good");
    c_train->add_option("--data", train.data, "dataset root")->required();
    c_train->add_option("--model,--out", train.out, "output model file")->required();
    train.cfg.add_to(c_train);

    ScoreArgs score;
    auto* c_score = app.add_subcommand("score", "score images; one JSON report per line");
    c_score->add_option("--model", score.model, "model file")->required();
    c_score->add_option("--policy", score.policy, "policy JSON file");
    c_score->add_option("--out", score.out, "output JSONL file (default stdout)");
    c_score->add_option("--external-score", score.external, "external detector score to fuse");
    c_score->add_option("--ensemble", score.ensemble, "fusion mode")->check(CLI::IsMember({"add", "normalized_add"}));
    c_score->add_option("--external-mean", score.external_mean, "training mean of the external score");
    c_score->add_option("images", score.images, "PNG images")->required();

    SegmentArgs seg;
    auto* c_seg = app.add_subcommand("segment", "write a component overlay PNG and per-component masks");
    c_seg->add_option("--model", seg.model, "model file")->required();
    c_seg->add_option("--image", seg.image, "input PNG")->required();
    c_seg->add_option("--overlay", seg.overlay, "output overlay PNG")->required();
    c_seg->add_option("--masks", seg.masks, "output masks JSON (default stdout)");

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "per-kind AUROC on <data>/test");
    c_eval->add_option("--model", ev.model, "model file")->required();
    c_eval->add_option("--data", ev.data, "dataset root")->required();
    c_eval->add_option("--policy", ev.policy, "policy JSON file");
    c_eval->add_option("--out", ev.out, "benchmark JSON file");
    c_eval->add_option("--records", ev.records, "per-image JSONL records");
    c_eval->add_option("--table", ev.table, "AUROC table file (default stdout)");

    GenArgs gen;
    auto* c_gen = app.add_subcommand("gen", "generate a synthetic dataset");
    c_gen->add_option("kind", gen.kind, "product or circles")->required()->check(CLI::IsMember({"product", "circles"}));
    c_gen->add_option("--out", gen.out, "output directory")->required();
    c_gen->add_option("--seed", gen.seed, "generator seed");
    c_gen->add_option("--spec", gen.spec, "JSON file with generator options")->check(CLI::ExistingFile);

    AblateArgs abl;
    auto* c_abl = app.add_subcommand("ablate", "train and evaluate the standard ablation variants");
    c_abl->add_option("--data", abl.data, "dataset root")->required();
    c_abl->add_option("--out", abl.out, "ablation JSON file");
    abl.cfg.add_to(c_abl);

    ServeArgs serve;
    auto* c_serve = app.add_subcommand("serve", "serve the HTTP API");
    c_serve->add_option("--model", serve.model, "model file")->required();
    c_serve->add_option("--policy", serve.policy, "policy JSON file");
    c_serve->add_flag("--persist-policy", serve.persist_policy, "write PUT /api/policy back to --policy");
    c_serve->add_option("--host", serve.host, "bind address");
    c_serve->add_option("--port", serve.port, "port (0 picks a free port)");
    c_serve->add_option("--data", serve.data_roots, "dataset roots for overlay lookups by key");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (c_train->parsed()) return cmd_train(train);
        if (c_score->parsed()) return cmd_score(score);
        if (c_seg->parsed()) return cmd_segment(seg);
        if (c_eval->parsed()) return cmd_eval(ev);
        if (c_gen->parsed()) return cmd_gen(gen);
        if (c_abl->parsed()) return cmd_ablate(abl);
        if (c_serve->parsed()) return cmd_serve(serve);
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << "\n";
        return exit_code(f.status);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInternal;
    }
    return kUsage;
}
