/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "syq/syq.h"

#include "core/common.hpp"
#include "core/cost_model.hpp"
#include "core/dataset.hpp"
#include "core/infer.hpp"
#include "core/model_file.hpp"
#include "core/train.hpp"

#include <cstdio>
#include <cstring>
#include <exception>
#include <string>
#include <vector>

struct syq_dataset {
    syq::Dataset data;
};

struct syq_trainer {
    syq::TrainState state;
};

struct syq_model {
    syq::QuantizedModel model;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string &msg) { g_last_error = msg; }

// Maps core exceptions onto status codes; additionally records the message.
syq_status classify(std::exception_ptr ep) {
    try {
        std::rethrow_exception(ep);
    } catch (const syq::DivergenceError &e) {
        set_error(e.what());
        return SYQ_ERR_DIVERGED;
    } catch (const syq::FormatError &e) {
        set_error(e.what());
        return SYQ_ERR_FORMAT;
    } catch (const std::invalid_argument &e) {
        set_error(e.what());
        return SYQ_ERR_CONFIG;
    } catch (const std::exception &e) {
        set_error(e.what());
        return SYQ_ERR_IO;
    } catch (...) {
        set_error("unknown error");
        return SYQ_ERR_INTERNAL;
    }
}

template <typename Fn>
syq_status guarded(Fn &&fn) {
    try {
        fn();
        return SYQ_OK;
    } catch (...) {
        return classify(std::current_exception());
    }
}

syq_status arg_error(const char *msg) {
    set_error(msg);
    return SYQ_ERR_ARG;
}

} // namespace

extern "C" {

const char *syq_version(void) { return "1.0.0"; }

const char *syq_status_name(syq_status status) {
    switch (status) {
    case SYQ_OK: return "ok";
    case SYQ_ERR_ARG: return "invalid argument";
    case SYQ_ERR_CONFIG: return "invalid configuration";
    case SYQ_ERR_FORMAT: return "format error";
    case SYQ_ERR_DIVERGED: return "training diverged";
    case SYQ_ERR_IO: return "i/o error";
    case SYQ_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char *syq_last_error(void) { return g_last_error.c_str(); }

syq_status syq_dataset_open_idx(const char *images_path, const char *labels_path,
                                syq_dataset **out) {
    if (!images_path || !labels_path || !out)
        return arg_error("syq_dataset_open_idx: null argument");
    *out = nullptr;
    return guarded([&] {
        auto ds = new syq_dataset{syq::load_idx_dataset(images_path, labels_path)};
        *out = ds;
    });
}

syq_status syq_dataset_synthetic(uint64_t seed, uint32_t classes, uint32_t count,
                                 syq_dataset **out) {
    if (!out) return arg_error("syq_dataset_synthetic: null output");
    *out = nullptr;
    return guarded([&] {
        auto ds = new syq_dataset{syq::generate_synthetic(seed, static_cast<int>(classes),
                                                          static_cast<int>(count))};
        *out = ds;
    });
}

void syq_dataset_free(syq_dataset *ds) { delete ds; }

uint32_t syq_dataset_size(const syq_dataset *ds) {
    return ds ? static_cast<uint32_t>(ds->data.count()) : 0;
}

uint32_t syq_dataset_classes(const syq_dataset *ds) {
    return ds ? static_cast<uint32_t>(ds->data.classes) : 0;
}

syq_status syq_trainer_create(const char *config_json, syq_trainer **out) {
    if (!config_json || !out) return arg_error("syq_trainer_create: null argument");
    *out = nullptr;
    return guarded([&] {
        const syq::ModelConfig cfg = syq::parse_run_config(config_json);
        auto t = new syq_trainer{syq::init_train_state(cfg, config_json)};
        *out = t;
    });
}

syq_status syq_trainer_open_checkpoint(const char *path, syq_trainer **out) {
    if (!path || !out) return arg_error("syq_trainer_open_checkpoint: null argument");
    *out = nullptr;
    return guarded([&] { *out = new syq_trainer{syq::load_checkpoint(path)}; });
}

syq_status syq_trainer_fit(syq_trainer *t, const syq_dataset *train_data,
                           const syq_dataset *val_data, const char *run_dir,
                           double *final_top1, double *best_top1) {
    if (!t || !train_data || !val_data) return arg_error("syq_trainer_fit: null argument");
    return guarded([&] {
        const syq::FitResult r =
            syq::fit(t->state, train_data->data, val_data->data, run_dir ? run_dir : "");
        if (final_top1) *final_top1 = r.final_top1;
        if (best_top1) *best_top1 = r.best_top1;
    });
}

syq_status syq_trainer_evaluate(syq_trainer *t, const syq_dataset *data, double *top1,
                                double *loss) {
    if (!t || !data) return arg_error("syq_trainer_evaluate: null argument");
    return guarded([&] {
        const syq::EvalResult r = syq::evaluate_state(t->state, data->data);
        if (top1) *top1 = r.top1;
        if (loss) *loss = r.loss;
    });
}

syq_status syq_trainer_save_checkpoint(const syq_trainer *t, const char *path) {
    if (!t || !path) return arg_error("syq_trainer_save_checkpoint: null argument");
    return guarded([&] { syq::save_checkpoint(t->state, path); });
}

syq_status syq_trainer_export_model(const syq_trainer *t, const char *path) {
    if (!t || !path) return arg_error("syq_trainer_export_model: null argument");
    return guarded([&] {
        syq::write_syq1(syq::export_quantized_model(t->state), path);
    });
}

void syq_trainer_free(syq_trainer *t) { delete t; }

syq_status syq_model_open(const char *path, syq_model **out) {
    if (!path || !out) return arg_error("syq_model_open: null argument");
    *out = nullptr;
    return guarded([&] { *out = new syq_model{syq::read_syq1(path)}; });
}

syq_status syq_model_evaluate(const syq_model *m, const syq_dataset *data, double *top1,
                              double *loss) {
    if (!m || !data) return arg_error("syq_model_evaluate: null argument");
    return guarded([&] {
        const syq::EvalResult r = syq::evaluate_model(m->model, data->data);
        if (top1) *top1 = r.top1;
        if (loss) *loss = r.loss;
    });
}

void syq_model_free(syq_model *m) { delete m; }

syq_status syq_cost_report(uint32_t kernel, uint32_t in_maps, uint32_t out_maps,
                           uint32_t spatial, const char *method, syq_cost_row *rows,
                           size_t *row_count) {
    if (!method || !rows || !row_count) return arg_error("syq_cost_report: null argument");
    return guarded([&] {
        syq::LayerShape shape;
        shape.K = static_cast<int>(kernel);
        shape.I = static_cast<int>(in_maps);
        shape.N = static_cast<int>(out_maps);
        shape.F = static_cast<int>(spatial);

        std::vector<syq::CostReport> reports;
        if (std::strcmp(method, "all") == 0) {
            reports = syq::complexity_report_all(shape);
        } else {
            syq::CostMethod m;
            if (!syq::parse_cost_method(method, &m))
                throw std::invalid_argument(std::string("method: expected all, layer, row, "
                                                        "pixel, asymmetric, grouping or "
                                                        "channel, got '") +
                                            method + "'");
            reports.push_back(syq::complexity_report(shape, m));
        }
        if (*row_count < reports.size())
            throw std::invalid_argument("syq_cost_report: rows buffer too small");
        for (size_t i = 0; i < reports.size(); ++i) {
            std::snprintf(rows[i].method, sizeof rows[i].method, "%s",
                          syq::cost_method_name(reports[i].method));
            rows[i].scalars = reports[i].scalars;
            rows[i].ops = reports[i].ops;
        }
        *row_count = reports.size();
    });
}

} // extern "C"
