#include "comad/comad.h"

#include "comad/ablation.hpp"
#include "comad/config.hpp"
#include "comad/dataset.hpp"
#include "comad/detector.hpp"
#include "comad/error.hpp"
#include "comad/eval.hpp"
#include "comad/feature_file.hpp"
#include "comad/json_io.hpp"
#include "comad/log.hpp"
#include "comad/model_io.hpp"
#include "comad/png_io.hpp"
#include "comad/render.hpp"
#include "comad/synth.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

using nlohmann::json;

struct comad_model {
    comad::ComponentModel model;
    // Segmentation memo shared by score / segment / classify on this handle.
    mutable comad::SegmentationCache cache{256};
};

struct comad_policy {
    comad::PolicyConfig policy;
};

struct comad_image {
    comad::Image image;
};

namespace {

thread_local std::string g_last_error;

comad_status status_of(comad::ErrorKind kind) {
    switch (kind) {
        case comad::ErrorKind::InvalidArgument:    return COMAD_ERR_INVALID_ARGUMENT;
        case comad::ErrorKind::Io:                 return COMAD_ERR_IO;
        case comad::ErrorKind::Decode:             return COMAD_ERR_DECODE;
        case comad::ErrorKind::UnsupportedVersion: return COMAD_ERR_UNSUPPORTED_VERSION;
        case comad::ErrorKind::Training:           return COMAD_ERR_TRAINING;
        case comad::ErrorKind::Data:               return COMAD_ERR_DATA;
        case comad::ErrorKind::Cancelled:          return COMAD_ERR_CANCELLED;
        case comad::ErrorKind::Internal:           return COMAD_ERR_INTERNAL;
    }
    return COMAD_ERR_INTERNAL;
}

comad_status fail(comad_status s, std::string msg) {
    g_last_error = std::move(msg);
    return s;
}

// Runs fn, mapping exceptions onto status codes.
template <class Fn>
comad_status guarded(Fn&& fn) noexcept {
    try {
        g_last_error.clear();
        fn();
        return COMAD_OK;
    } catch (const comad::Error& e) {
        return fail(status_of(e.kind()), e.what());
    } catch (const json::exception& e) {
        return fail(COMAD_ERR_INVALID_ARGUMENT, std::string("json: ") + e.what());
    } catch (const std::bad_alloc&) {
        return fail(COMAD_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(COMAD_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(COMAD_ERR_INTERNAL, "unknown error");
    }
}

void require(bool ok, const char* what) {
    if (!ok) {
        throw comad::InvalidArgument(what);
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.data(), s.size());
    out[s.size()] = '\0';
    return out;
}

void emit(char** out, const std::string& s) {
    if (out) {
        *out = dup_string(s);
    }
}

void emit_bytes(std::span<const std::uint8_t> bytes, uint8_t** out_data, size_t* out_size) {
    auto* buf = static_cast<uint8_t*>(std::malloc(bytes.empty() ? 1 : bytes.size()));
    if (!buf) {
        throw std::bad_alloc();
    }
    if (!bytes.empty()) {
        std::memcpy(buf, bytes.data(), bytes.size());
    }
    *out_data = buf;
    *out_size = bytes.size();
}

std::string id_or_default(const char* id) { return id && *id ? std::string(id) : std::string("image"); }

const comad::PolicyConfig& policy_or_default(const comad_policy* p) {
    static const comad::PolicyConfig defaults;
    return p ? p->policy : defaults;
}

comad::Config config_or_default(const char* json_text) {
    comad::Config cfg = json_text && *json_text ? comad::config_from_json(json_text) : comad::Config{};
    cfg.validate();
    return cfg;
}

comad::ScalarField map_field(const float* data, int h, int w) {
    require(data != nullptr && h > 0 && w > 0, "anomaly map must be non-empty");
    std::vector<double> v(static_cast<std::size_t>(h) * w);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = data[i];
    }
    return comad::ScalarField(h, w, std::move(v));
}

} // namespace

extern "C" {

const char* comad_version(void) { return "1.0.0"; }

const char* comad_status_name(comad_status status) {
    switch (status) {
        case COMAD_OK:                      return "ok";
        case COMAD_ERR_INVALID_ARGUMENT:    return "invalid_argument";
        case COMAD_ERR_IO:                  return "io";
        case COMAD_ERR_DECODE:              return "decode";
        case COMAD_ERR_UNSUPPORTED_VERSION: return "unsupported_version";
        case COMAD_ERR_TRAINING:            return "training";
        case COMAD_ERR_DATA:                return "data";
        case COMAD_ERR_CANCELLED:           return "cancelled";
        case COMAD_ERR_INTERNAL:            return "internal";
    }
    return "unknown";
}

const char* comad_last_error(void) { return g_last_error.c_str(); }

void comad_string_free(char* s) { std::free(s); }
void comad_buffer_free(uint8_t* data) { std::free(data); }

void comad_set_log_callback(comad_log_fn fn, void* user) {
    if (!fn) {
        comad::reset_log_sink();
        return;
    }
    comad::set_log_sink([fn, user](comad::LogLevel level, const std::string& msg) {
        fn(level == comad::LogLevel::Warning ? 1 : 0, msg.c_str(), user);
    });
}

// ---- configuration --------------------------------------------------------

comad_status comad_config_default(char** out_json) {
    return guarded([&] {
        require(out_json, "out_json is null");
        emit(out_json, comad::config_to_json(comad::Config{}));
    });
}

comad_status comad_config_merge(const char* base_json, const char* overlay_json, char** out_json) {
    return guarded([&] {
        require(out_json, "out_json is null");
        comad::Config cfg = config_or_default(base_json);
        if (overlay_json && *overlay_json) {
            cfg = comad::config_from_json(overlay_json, cfg);
        }
        cfg.validate();
        emit(out_json, comad::config_to_json(cfg));
    });
}

comad_status comad_config_set(const char* config_json, const char* dotted_key, const char* value_json, char** out_json) {
    return guarded([&] {
        require(dotted_key && value_json && out_json, "null argument");
        comad::Config cfg = config_or_default(config_json);
        comad::apply_override(cfg, dotted_key, value_json);
        cfg.validate();
        emit(out_json, comad::config_to_json(cfg));
    });
}

// ---- images -----------------------------------------------------------------

comad_status comad_image_read(const char* path, comad_image** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = new comad_image{comad::read_png(path)};
    });
}

comad_status comad_image_decode_png(const uint8_t* data, size_t size, comad_image** out) {
    return guarded([&] {
        require(data && out, "null argument");
        *out = new comad_image{comad::decode_png({data, size})};
    });
}

comad_status comad_image_create(int height, int width, const uint8_t* rgb, comad_image** out) {
    return guarded([&] {
        require(rgb && out, "null argument");
        require(height > 0 && width > 0, "image dimensions must be positive");
        const std::size_t n = static_cast<std::size_t>(height) * width * 3;
        *out = new comad_image{comad::Image(height, width, std::vector<std::uint8_t>(rgb, rgb + n))};
    });
}

comad_status comad_image_size(const comad_image* image, int* height, int* width) {
    return guarded([&] {
        require(image && height && width, "null argument");
        *height = image->image.height();
        *width = image->image.width();
    });
}

const uint8_t* comad_image_data(const comad_image* image) { return image ? image->image.data().data() : nullptr; }

comad_status comad_image_encode_png(const comad_image* image, uint8_t** out_data, size_t* out_size) {
    return guarded([&] {
        require(image && out_data && out_size, "null argument");
        emit_bytes(comad::encode_png(image->image), out_data, out_size);
    });
}

void comad_image_free(comad_image* image) { delete image; }

// ---- feature files --------------------------------------------------------

comad_status comad_features_read(const char* path, int* rows, int* cols, int* dim, float** out_data) {
    return guarded([&] {
        require(path && rows && cols && dim && out_data, "null argument");
        const auto fmap = comad::read_feature_file(path);
        const auto vals = fmap.values();
        auto* buf = static_cast<float*>(std::malloc(std::max<std::size_t>(vals.size(), 1) * sizeof(float)));
        if (!buf) {
            throw std::bad_alloc();
        }
        std::copy(vals.begin(), vals.end(), buf);
        *rows = fmap.rows();
        *cols = fmap.cols();
        *dim = fmap.dim();
        *out_data = buf;
    });
}

comad_status comad_features_write(const char* path, int rows, int cols, int dim, const float* data) {
    return guarded([&] {
        require(path && data, "null argument");
        require(rows > 0 && cols > 0 && dim > 0, "feature map dimensions must be positive");
        const std::size_t n = static_cast<std::size_t>(rows) * cols * dim;
        comad::write_feature_file(comad::FeatureMap(rows, cols, dim, std::vector<float>(data, data + n)), path);
    });
}

// ---- models -------------------------------------------------------------------

comad_status comad_train(const char* dataset_dir, const char* config_json, comad_model** out) {
    return guarded([&] {
        require(dataset_dir && out, "null argument");
        auto m = std::make_unique<comad_model>();
        m->model = comad::train_from_directory(dataset_dir, config_or_default(config_json), &m->cache);
        *out = m.release();
    });
}

comad_status comad_model_load(const char* path, comad_model** out) {
    return guarded([&] {
        require(path && out, "null argument");
        auto m = std::make_unique<comad_model>();
        m->model = comad::load_model(path);
        *out = m.release();
    });
}

comad_status comad_model_save(const comad_model* model, const char* path) {
    return guarded([&] {
        require(model && path, "null argument");
        comad::save_model(model->model, path);
    });
}

comad_status comad_model_encode(const comad_model* model, uint8_t** out_data, size_t* out_size) {
    return guarded([&] {
        require(model && out_data && out_size, "null argument");
        emit_bytes(comad::encode_model(model->model), out_data, out_size);
    });
}

comad_status comad_model_decode(const uint8_t* data, size_t size, comad_model** out) {
    return guarded([&] {
        require(data && out, "null argument");
        auto m = std::make_unique<comad_model>();
        m->model = comad::decode_model({data, size});
        *out = m.release();
    });
}

comad_status comad_model_summary(const comad_model* model, char** out_json) {
    return guarded([&] {
        require(model && out_json, "null argument");
        emit(out_json, comad::model_summary_json(model->model));
    });
}

comad_status comad_model_config(const comad_model* model, char** out_json) {
    return guarded([&] {
        require(model && out_json, "null argument");
        emit(out_json, comad::config_to_json(model->model.config));
    });
}

void comad_model_free(comad_model* model) { delete model; }

// ---- policy -------------------------------------------------------------------

comad_status comad_policy_create(comad_policy** out) {
    return guarded([&] {
        require(out, "null argument");
        *out = new comad_policy{};
    });
}

comad_status comad_policy_from_json(const char* json_text, comad_policy** out) {
    return guarded([&] {
        require(json_text && out, "null argument");
        *out = new comad_policy{comad::policy_from_json(json_text)};
    });
}

comad_status comad_policy_load(const char* path, comad_policy** out) {
    return guarded([&] {
        require(path && out, "null argument");
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw comad::IoError(std::string("cannot open policy file '") + path + "'");
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        *out = new comad_policy{comad::policy_from_json(ss.str())};
    });
}

comad_status comad_policy_to_json(const comad_policy* policy, char** out_json) {
    return guarded([&] {
        require(policy && out_json, "null argument");
        emit(out_json, comad::policy_to_json(policy->policy));
    });
}

comad_status comad_policy_set_weight(comad_policy* policy, int component, double weight) {
    return guarded([&] {
        require(policy, "null argument");
        require(std::isfinite(weight) && weight >= 0, "weight must be finite and non-negative");
        policy->policy.weights[component] = weight;
    });
}

comad_status comad_policy_set_threshold(comad_policy* policy, int component, double threshold) {
    return guarded([&] {
        require(policy, "null argument");
        require(std::isfinite(threshold), "threshold must be finite");
        policy->policy.thresholds[component] = threshold;
    });
}

comad_status comad_policy_set_global_threshold(comad_policy* policy, int has_value, double threshold) {
    return guarded([&] {
        require(policy, "null argument");
        if (!has_value) {
            policy->policy.global_threshold.reset();
            return;
        }
        require(std::isfinite(threshold), "threshold must be finite");
        policy->policy.global_threshold = threshold;
    });
}

comad_status comad_policy_set_ignore_background(comad_policy* policy, int ignore) {
    return guarded([&] {
        require(policy, "null argument");
        policy->policy.ignore_background = ignore != 0;
    });
}

comad_status comad_policy_copy(const comad_policy* policy, comad_policy** out) {
    return guarded([&] {
        require(policy && out, "null argument");
        *out = new comad_policy{policy->policy};
    });
}

void comad_policy_free(comad_policy* policy) { delete policy; }

// ---- scoring --------------------------------------------------------------------

void comad_score_options_init(comad_score_options* options) {
    if (!options) {
        return;
    }
    *options = comad_score_options{};
    options->ensemble_mode = COMAD_ENSEMBLE_ADD;
    options->external_mean = 1.0;
}

comad_status comad_score(const comad_model* model, const comad_image* image, const char* image_id, const comad_policy* policy,
                         char** out_report_json) {
    return comad_score_ex(model, image, image_id, policy, nullptr, out_report_json);
}

comad_status comad_score_ex(const comad_model* model, const comad_image* image, const char* image_id, const comad_policy* policy,
                            const comad_score_options* options, char** out_report_json) {
    return guarded([&] {
        require(model && image && out_report_json, "null argument");
        const auto& pol = policy_or_default(policy);
        pol.validate();
        const auto a = comad::analyze(model->model, image->image, id_or_default(image_id), &model->cache);
        auto rep = comad::score_analysis(model->model, a, pol);
        if (options && options->has_external_score) {
            const auto mode = options->ensemble_mode == COMAD_ENSEMBLE_NORMALIZED_ADD ? comad::EnsembleMode::NormalizedAdd
                                                                                      : comad::EnsembleMode::Add;
            rep.external_score = options->external_score;
            rep.combined_score =
                comad::ensemble(rep.d, options->external_score, mode, model->model.stats.mean_d, options->external_mean);
        }
        if (options && options->anomaly_map) {
            rep.classified =
                comad::classify_anomaly(map_field(options->anomaly_map, options->map_height, options->map_width), *a.seg,
                                        model->model, pol);
        }
        emit(out_report_json, comad::report_to_json(rep));
    });
}

comad_status comad_segment(const comad_model* model, const comad_image* image, const char* image_id, char** out_masks_json,
                           uint8_t** out_overlay_png, size_t* out_overlay_size) {
    return guarded([&] {
        require(model && image, "null argument");
        require(!out_overlay_png || out_overlay_size, "overlay size pointer is null");
        const auto a = comad::analyze(model->model, image->image, id_or_default(image_id), &model->cache);
        emit(out_masks_json, comad::masks_to_json(a));
        if (out_overlay_png) {
            const auto overlay = comad::render_overlay(a.image, *a.seg, model->model.reserved.kept);
            emit_bytes(comad::encode_png(overlay), out_overlay_png, out_overlay_size);
        }
    });
}

comad_status comad_classify(const comad_model* model, const comad_image* image, const char* image_id, const comad_policy* policy,
                            const float* anomaly_map, int map_height, int map_width, char** out_json) {
    return guarded([&] {
        require(model && image && out_json, "null argument");
        const auto field = map_field(anomaly_map, map_height, map_width);
        const auto& m = model->model;
        const auto resized = comad::to_pipeline_size(image->image, m.config.image_size);
        const auto seg = comad::segment_with_model(m, resized, id_or_default(image_id), &model->cache);
        const auto c = comad::classify_anomaly(field, *seg, m, policy_or_default(policy));
        json j{{"component", c.component < 0 ? json("background") : json(c.component)},
               {"peak", c.peak},
               {"score", c.score},
               {"y", c.y},
               {"x", c.x}};
        emit(out_json, j.dump());
    });
}

comad_status comad_ensemble(double d, double external_score, comad_ensemble_mode mode, double d_mean, double external_mean,
                            double* out) {
    return guarded([&] {
        require(out, "null argument");
        *out = comad::ensemble(d, external_score,
                               mode == COMAD_ENSEMBLE_NORMALIZED_ADD ? comad::EnsembleMode::NormalizedAdd : comad::EnsembleMode::Add,
                               d_mean, external_mean);
    });
}

// ---- evaluation -----------------------------------------------------------------

comad_status comad_evaluate(const comad_model* model, const comad_policy* policy, const char* dataset_dir,
                            comad_progress_fn progress, void* user, char** out_json, char** out_table,
                            char** out_records_jsonl) {
    return guarded([&] {
        require(model && dataset_dir, "null argument");
        const auto& pol = policy_or_default(policy);
        pol.validate();
        const auto ds = comad::load_dataset(dataset_dir);
        comad::EvalProgress cb;
        if (progress) {
            cb = [progress, user](std::size_t done, std::size_t total) { return progress(done, total, user) == 0; };
        }
        const auto r = comad::run_benchmark(model->model, pol, ds, &model->cache, cb);
        emit(out_json, comad::benchmark_to_json(r, true));
        emit(out_table, comad::format_table(r));
        emit(out_records_jsonl, comad::records_to_jsonl(r.records));
    });
}

comad_status comad_ablate(const char* dataset_dir, const char* config_json, char** out_json, char** out_table) {
    return guarded([&] {
        require(dataset_dir, "null argument");
        const auto cfg = config_or_default(config_json);
        const auto ds = comad::load_dataset(dataset_dir);
        if (ds.train.empty()) {
            throw comad::TrainingError(comad::TrainingReason::EmptyDataset, "no training images under " + ds.root.string());
        }
        std::vector<comad::TrainingImage> train;
        for (const auto& s : ds.train) {
            train.push_back({s.key, comad::read_png(s.path)});
        }
        std::vector<comad::EvalItem> test;
        for (const auto& s : ds.test) {
            test.push_back({s.key, comad::read_png(s.path), s.anomalous, s.kind, s.anomalous ? ds.category(s.kind) : std::string()});
        }
        const auto variants = comad::standard_ablations();
        comad::SegmentationCache cache;
        const auto rows = comad::run_ablation(train, test, cfg, variants, &cache);
        emit(out_json, comad::ablation_to_json(rows));
        emit(out_table, comad::ablation_table(rows));
    });
}

comad_status comad_auroc(const double* scores, const uint8_t* anomalous, size_t n, double* out) {
    return guarded([&] {
        require(scores && anomalous && out, "null argument");
        std::vector<char> labels(anomalous, anomalous + n);
        *out = comad::auroc({scores, n}, labels);
    });
}

// ---- synthetic data ---------------------------------------------------------------

comad_status comad_generate(const char* kind, const char* out_dir, uint64_t seed, const char* options_json) {
    return guarded([&] {
        require(kind && out_dir, "null argument");
        const json opts = options_json && *options_json ? json::parse(options_json) : json::object();
        require(opts.is_object(), "generator options must be a JSON object");
        const std::string k = kind;
        if (k == "product") {
            auto spec = comad::ProductSpec::standard();
            spec.seed = seed;
            for (const auto& [key, value] : opts.items()) {
                if (key == "n_train") {
                    spec.n_train = value.get<int>();
                } else if (key == "n_test_normal") {
                    spec.n_test_normal = value.get<int>();
                } else if (key == "noise") {
                    spec.noise = value.get<int>();
                } else if (key == "defects") {
                    spec.defects.clear();
                    for (const auto& [dk, dv] : value.items()) {
                        spec.defects[dk] = dv.get<int>();
                    }
                } else {
                    throw comad::InvalidArgument("unknown product option '" + key + "'");
                }
            }
            spec.validate();
            comad::write_product_dataset(comad::gen_product_dataset(spec), out_dir);
        } else if (k == "circles") {
            comad::CircleSpec spec;
            spec.seed = seed;
            int normal = 5;
            std::vector<int> anomalous{7};
            int n_train = 20;
            int n_test = 20;
            for (const auto& [key, value] : opts.items()) {
                if (key == "normal_count") {
                    normal = value.get<int>();
                } else if (key == "anomalous_counts") {
                    anomalous = value.get<std::vector<int>>();
                } else if (key == "n_train") {
                    n_train = value.get<int>();
                } else if (key == "n_test") {
                    n_test = value.get<int>();
                } else if (key == "min_center_distance") {
                    spec.min_center_distance = value.get<double>();
                } else {
                    throw comad::InvalidArgument("unknown circles option '" + key + "'");
                }
            }
            comad::write_circle_dataset(spec, normal, anomalous, n_train, n_test, out_dir);
        } else {
            throw comad::InvalidArgument("unknown generator '" + k + "' (expected product or circles)");
        }
    });
}

} // extern "C"
