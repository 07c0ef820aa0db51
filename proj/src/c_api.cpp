/*
 * Copyright 2026 The Lesionkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "lesion/lesion.h"

#include "lesion/config.hpp"
#include "lesion/pipeline.hpp"
#include "lesion/training.hpp"

#include <cstdio>
#include <cstring>
#include <memory>
#include <mutex>
#include <new>

namespace {

using namespace lesion;

template <typename T, std::uint32_t Magic>
struct Handle {
    explicit Handle(T value) : obj(std::move(value)) {}
    ~Handle() { magic = 0; }

    std::uint32_t magic = Magic;
    T obj;
};

struct InvalidObject {};
struct NullPointer {};

thread_local std::string g_last_error;

std::mutex g_message_mutex;
lesion_message_fn g_message_fn = nullptr;
void* g_message_user = nullptr;

void emit(const std::string& message)
{
    std::lock_guard<std::mutex> lock(g_message_mutex);
    if (g_message_fn) g_message_fn(message.c_str(), g_message_user);
}

template <typename F>
int guard(F&& f)
{
    try {
        g_last_error.clear();
        f();
        return LESION_OK;
    } catch (const lesion::Error& e) {
        g_last_error = e.what();
        return -static_cast<int>(e.code());
    } catch (const InvalidObject&) {
        g_last_error = "invalid or destroyed object handle";
        return LESION_ERROR_INVALID_OBJECT;
    } catch (const NullPointer&) {
        g_last_error = "required pointer argument is NULL";
        return LESION_ERROR_NULL_POINTER;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return LESION_ERROR_OUT_OF_MEMORY;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return LESION_ERROR_UNKNOWN;
    } catch (...) {
        g_last_error = "unknown exception";
        return LESION_ERROR_UNKNOWN;
    }
}

template <typename P>
void require(P* p)
{
    if (!p) throw NullPointer{};
}

template <typename H>
auto& unwrap(H* h)
{
    if (!h) throw NullPointer{};
    using Decayed = std::remove_cv_t<H>;
    if (h->magic != Decayed::kMagic) throw InvalidObject{};
    return h->obj;
}

template <typename H>
int destroy(H* h)
{
    if (!h) return LESION_OK;
    return guard([&] {
        unwrap(h);
        delete h;
    });
}

int copy_out_status(const std::string& text, char* out, std::size_t* out_len)
{
    if (!out_len) {
        g_last_error = "required pointer argument is NULL";
        return LESION_ERROR_NULL_POINTER;
    }
    const std::size_t capacity = *out_len;
    *out_len = text.size() + 1;
    if (!out || capacity < text.size() + 1) {
        g_last_error = "buffer too small: need " + std::to_string(text.size() + 1) + " bytes";
        return LESION_ERROR_INSUFFICIENT_BUFFER;
    }
    std::memcpy(out, text.c_str(), text.size() + 1);
    return LESION_OK;
}

struct ReportData {
    ConfusionMatrix cm;
    ClassificationReport report;
};

} // namespace

struct lesion_config_struct : Handle<RunConfig, 0x4c43464eu> {
    using Handle::Handle;
    static constexpr std::uint32_t kMagic = 0x4c43464eu;
};
struct lesion_manifest_struct : Handle<Manifest, 0x4c4d414eu> {
    using Handle::Handle;
    static constexpr std::uint32_t kMagic = 0x4c4d414eu;
};
struct lesion_split_struct : Handle<SplitAssignment, 0x4c53504cu> {
    using Handle::Handle;
    static constexpr std::uint32_t kMagic = 0x4c53504cu;
};
struct lesion_checkpoint_struct : Handle<Checkpoint, 0x4c434b50u> {
    using Handle::Handle;
    static constexpr std::uint32_t kMagic = 0x4c434b50u;
};
struct lesion_predictions_struct : Handle<PredictionSet, 0x4c505244u> {
    using Handle::Handle;
    static constexpr std::uint32_t kMagic = 0x4c505244u;
};
struct lesion_report_struct : Handle<ReportData, 0x4c525054u> {
    using Handle::Handle;
    static constexpr std::uint32_t kMagic = 0x4c525054u;
};

extern "C" {

uint32_t lesion_api_version(void) { return LESION_API_VERSION; }

const char* lesion_error_name(int status)
{
    switch (status) {
    case LESION_OK: return "Ok";
    case LESION_ERROR_NULL_POINTER: return "NullPointer";
    case LESION_ERROR_INVALID_OBJECT: return "InvalidObject";
    case LESION_ERROR_INSUFFICIENT_BUFFER: return "InsufficientBuffer";
    case LESION_ERROR_OUT_OF_MEMORY: return "OutOfMemory";
    case LESION_ERROR_UNKNOWN: return "Unknown";
    default:
        if (status < 0 && status >= LESION_ERROR_IMAGE_DECODE) {
            return error_code_name(static_cast<ErrorCode>(-status));
        }
        return "Unknown";
    }
}

const char* lesion_last_error(void) { return g_last_error.c_str(); }

const char* lesion_class_name(int index)
{
    if (index < 0 || index >= kNumClasses) return nullptr;
    return kClassNames[static_cast<std::size_t>(index)].data();
}

void lesion_set_message_callback(lesion_message_fn fn, void* user)
{
    std::lock_guard<std::mutex> lock(g_message_mutex);
    g_message_fn = fn;
    g_message_user = user;
}

int lesion_config_create(lesion_config_t* out)
{
    return guard([&] {
        require(out);
        *out = new lesion_config_struct(RunConfig{});
    });
}

int lesion_config_destroy(lesion_config_t cfg) { return destroy(cfg); }

int lesion_config_merge_file(lesion_config_t cfg, const char* path)
{
    return guard([&] {
        auto& c = unwrap(cfg);
        require(path);
        c.merge_json(read_text_file(path));
    });
}

int lesion_config_set(lesion_config_t cfg, const char* key, const char* value)
{
    return guard([&] {
        auto& c = unwrap(cfg);
        require(key);
        require(value);
        c.set(key, value);
    });
}

int lesion_config_validate(lesion_config_t cfg)
{
    return guard([&] { unwrap(cfg).validate(); });
}

int lesion_config_to_json(lesion_config_t cfg, char* out, size_t* out_len)
{
    std::string text;
    const int rc = guard([&] { text = unwrap(cfg).to_json(); });
    return rc == LESION_OK ? copy_out_status(text, out, out_len) : rc;
}

int lesion_config_seed(lesion_config_t cfg, uint64_t* seed)
{
    return guard([&] {
        require(seed);
        *seed = unwrap(cfg).train.seed;
    });
}

int lesion_config_val_frac(lesion_config_t cfg, double* val_frac)
{
    return guard([&] {
        require(val_frac);
        *val_frac = unwrap(cfg).val_frac;
    });
}

int lesion_config_limit(lesion_config_t cfg, size_t* limit)
{
    return guard([&] {
        require(limit);
        *limit = unwrap(cfg).limit;
    });
}

int lesion_manifest_load(lesion_manifest_t* out, const char* csv_path, const char* image_dir)
{
    return guard([&] {
        require(out);
        require(csv_path);
        *out = new lesion_manifest_struct(read_manifest(csv_path, image_dir ? image_dir : ""));
    });
}

int lesion_manifest_destroy(lesion_manifest_t m) { return destroy(m); }

int lesion_manifest_size(lesion_manifest_t m, size_t* n)
{
    return guard([&] {
        require(n);
        *n = unwrap(m).size();
    });
}

int lesion_manifest_class_counts(lesion_manifest_t m, uint64_t counts[LESION_NUM_CLASSES])
{
    return guard([&] {
        require(counts);
        const auto d = class_distribution(unwrap(m));
        std::copy(d.counts.begin(), d.counts.end(), counts);
    });
}

int lesion_manifest_limit(lesion_manifest_t m, size_t limit, uint64_t seed, lesion_manifest_t* out)
{
    return guard([&] {
        require(out);
        *out = new lesion_manifest_struct(stratified_limit(unwrap(m), limit, seed));
    });
}

int lesion_class_weights(const uint64_t counts[LESION_NUM_CLASSES], const char* mode, double weights[LESION_NUM_CLASSES])
{
    return guard([&] {
        require(counts);
        require(mode);
        require(weights);
        const auto m = weight_mode_from_name(mode);
        if (!m || *m == WeightMode::Custom) {
            throw lesion::Error(ErrorCode::InvalidArgument, std::string("unsupported weight mode '") + mode + "'");
        }
        ClassCounts c{};
        std::copy(counts, counts + kNumClasses, c.begin());
        const auto w = class_weights(ClassDistribution::from_counts(c), *m);
        std::copy(w.weights.begin(), w.weights.end(), weights);
    });
}

int lesion_split_create(lesion_manifest_t m, double val_frac, uint64_t seed, lesion_split_t* out)
{
    return guard([&] {
        require(out);
        auto split = stratified_split(unwrap(m), val_frac, seed);
        for (const auto& w : split_warnings(split)) emit("warning: " + w);
        *out = new lesion_split_struct(std::move(split));
    });
}

int lesion_split_load(lesion_manifest_t m, const char* splits_csv_path, lesion_split_t* out)
{
    return guard([&] {
        require(out);
        require(splits_csv_path);
        *out = new lesion_split_struct(apply_split_csv(unwrap(m), read_text_file(splits_csv_path)));
    });
}

int lesion_split_destroy(lesion_split_t s) { return destroy(s); }

int lesion_split_write(lesion_split_t s, lesion_manifest_t source, const char* path)
{
    return guard([&] {
        require(path);
        write_text_file(path, format_split_csv(unwrap(s), unwrap(source)));
    });
}

int lesion_split_summary(lesion_split_t s, char* out, size_t* out_len)
{
    std::string text;
    const int rc = guard([&] { text = format_split_summary(unwrap(s)); });
    return rc == LESION_OK ? copy_out_status(text, out, out_len) : rc;
}

int lesion_split_subset(lesion_split_t s, int which, lesion_manifest_t* out)
{
    return guard([&] {
        require(out);
        const auto& split = unwrap(s);
        if (which != 0 && which != 1) throw lesion::Error(ErrorCode::InvalidArgument, "subset must be 0 or 1");
        *out = new lesion_manifest_struct(which == 0 ? split.train : split.val);
    });
}

int lesion_preprocess_image(lesion_config_t cfg, const char* in_path, const char* out_path)
{
    return guard([&] {
        const auto& c = unwrap(cfg);
        require(in_path);
        require(out_path);
        preprocess_file(in_path, out_path, c.augment);
    });
}

int lesion_train(lesion_config_t cfg, lesion_manifest_t train, lesion_manifest_t val, lesion_checkpoint_t* out,
                 const char* log_csv_path)
{
    return guard([&] {
        require(out);
        const auto& c = unwrap(cfg);
        const auto& tr = unwrap(train);
        const auto& va = unwrap(val);
        c.validate();
        DirectoryImageSource images(tr.source_dir);
        auto result = fit(c.model_spec(), tr, va, c.train, c.augment, images, [](const EpochLog& e) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "epoch %d: train_loss %.6f val_accuracy %.4f val_macro_recall %.4f lr %g",
                          e.epoch, e.train_loss, e.val_accuracy, e.val_macro_recall, e.lr);
            emit(buf);
        });
        if (log_csv_path) write_text_file(log_csv_path, format_epoch_log(result.log));
        *out = new lesion_checkpoint_struct(std::move(result.best));
    });
}

int lesion_checkpoint_save(lesion_checkpoint_t c, const char* path)
{
    return guard([&] {
        require(path);
        save_checkpoint(unwrap(c), path);
    });
}

int lesion_checkpoint_load(const char* path, lesion_checkpoint_t* out)
{
    return guard([&] {
        require(path);
        require(out);
        *out = new lesion_checkpoint_struct(load_checkpoint(path));
    });
}

int lesion_checkpoint_destroy(lesion_checkpoint_t c) { return destroy(c); }

int lesion_checkpoint_info(lesion_checkpoint_t c, int* epoch, double* metric)
{
    return guard([&] {
        const auto& ck = unwrap(c);
        if (epoch) *epoch = ck.epoch;
        if (metric) *metric = ck.metric;
    });
}

int lesion_evaluate(lesion_checkpoint_t c, lesion_manifest_t m, lesion_predictions_t* out)
{
    return guard([&] {
        require(out);
        const auto& ck = unwrap(c);
        const auto& man = unwrap(m);
        DirectoryImageSource images(man.source_dir);
        *out = new lesion_predictions_struct(evaluate(ck.spec, ck.params, man, ck.augment, images));
    });
}

int lesion_predictions_read(const char* path, lesion_predictions_t* out)
{
    return guard([&] {
        require(path);
        require(out);
        std::vector<std::string> warnings;
        auto set = read_predictions(path, &warnings);
        for (const auto& w : warnings) emit(std::string("warning: ") + path + ": " + w);
        *out = new lesion_predictions_struct(std::move(set));
    });
}

int lesion_predictions_write(lesion_predictions_t p, const char* path)
{
    return guard([&] {
        require(path);
        write_predictions(unwrap(p), path);
    });
}

int lesion_predictions_destroy(lesion_predictions_t p) { return destroy(p); }

int lesion_predictions_size(lesion_predictions_t p, size_t* n)
{
    return guard([&] {
        require(n);
        *n = unwrap(p).size();
    });
}

int lesion_predictions_row(lesion_predictions_t p, size_t index, char* id_out, size_t* id_len,
                           double probs[LESION_NUM_CLASSES])
{
    std::string id;
    const int rc = guard([&] {
        const auto& set = unwrap(p);
        if (index >= set.size()) throw lesion::Error(ErrorCode::InvalidArgument, "row index out of range");
        id = set.ids()[index];
        if (probs) std::copy(set.row(index).begin(), set.row(index).end(), probs);
    });
    if (rc != LESION_OK || !id_len) return rc;
    return copy_out_status(id, id_out, id_len);
}

int lesion_predictions_average(const lesion_predictions_t* sets, size_t count, lesion_predictions_t* out)
{
    return guard([&] {
        require(out);
        if (count > 0) require(sets);
        std::vector<PredictionSet> inputs;
        inputs.reserve(count);
        for (std::size_t i = 0; i < count; ++i) inputs.push_back(unwrap(sets[i]));
        *out = new lesion_predictions_struct(average(inputs));
    });
}

int lesion_report_create(lesion_predictions_t p, lesion_manifest_t truth, lesion_report_t* out)
{
    return guard([&] {
        require(out);
        const auto cm = confusion_from_predictions(unwrap(p), unwrap(truth));
        *out = new lesion_report_struct(ReportData{cm, report(cm)});
    });
}

int lesion_report_from_labels(const int* y_true, const int* y_pred, size_t n, lesion_report_t* out)
{
    return guard([&] {
        require(out);
        if (n > 0) {
            require(y_true);
            require(y_pred);
        }
        std::vector<ClassLabel> t(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = label_from_index(y_true[i]);
            p[i] = label_from_index(y_pred[i]);
        }
        const auto cm = confusion(t, p);
        *out = new lesion_report_struct(ReportData{cm, report(cm)});
    });
}

int lesion_report_destroy(lesion_report_t r) { return destroy(r); }

int lesion_report_value(lesion_report_t r, const char* name, double* value)
{
    return guard([&] {
        const auto& rep = unwrap(r).report;
        require(name);
        require(value);
        const std::string n = name;
        if (n == "accuracy") *value = rep.accuracy;
        else if (n == "macro_precision") *value = rep.macro_precision;
        else if (n == "macro_recall") *value = rep.macro_recall;
        else if (n == "macro_f1") *value = rep.macro_f1;
        else if (n == "micro_precision") *value = rep.micro_precision;
        else if (n == "micro_recall") *value = rep.micro_recall;
        else if (n == "micro_f1") *value = rep.micro_f1;
        else throw lesion::Error(ErrorCode::InvalidArgument, "unknown report value '" + n + "'");
    });
}

int lesion_report_confusion(lesion_report_t r, uint64_t counts[LESION_NUM_CLASSES * LESION_NUM_CLASSES])
{
    return guard([&] {
        const auto& cm = unwrap(r).cm;
        require(counts);
        for (int t = 0; t < kNumClasses; ++t) {
            for (int p = 0; p < kNumClasses; ++p) counts[t * kNumClasses + p] = cm.at(t, p);
        }
    });
}

int lesion_report_text(lesion_report_t r, char* out, size_t* out_len)
{
    std::string text;
    const int rc = guard([&] { text = render_report_text(unwrap(r).report); });
    return rc == LESION_OK ? copy_out_status(text, out, out_len) : rc;
}

int lesion_report_write(lesion_report_t r, const char* json_path, const char* text_path, const char* confusion_csv_path)
{
    return guard([&] {
        const auto& data = unwrap(r);
        if (json_path) write_text_file(json_path, render_report_json(data.report));
        if (text_path) write_text_file(text_path, render_report_text(data.report));
        if (confusion_csv_path) write_text_file(confusion_csv_path, render_confusion_csv(data.cm));
    });
}

} // extern "C"
