/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

/*
 * C interface to the syq library: training, evaluation, export and
 * complexity reporting for CNNs with symmetric low-precision quantization
 * (binary/ternary weights, fixed-point activations, learned per-subgroup
 * scales).
 *
 * All objects are opaque handles created and destroyed through the functions
 * below. Functions report failure through syq_status; syq_last_error()
 * returns a thread-local description of the most recent failure.
 */
#ifndef SYQ_H
#define SYQ_H

#include <stddef.h>
#include <stdint.h>

#if defined _WIN32 || defined __CYGWIN__
#  ifdef SYQ_BUILD
#    define SYQ_API __declspec(dllexport)
#  else
#    define SYQ_API __declspec(dllimport)
#  endif
#else
#  define SYQ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum syq_status {
    SYQ_OK = 0,
    SYQ_ERR_ARG = 1,        /* null handle or out-of-range argument */
    SYQ_ERR_CONFIG = 2,     /* invalid run configuration */
    SYQ_ERR_FORMAT = 3,     /* malformed dataset, model or checkpoint file */
    SYQ_ERR_DIVERGED = 4,   /* training loss became non-finite */
    SYQ_ERR_IO = 5,         /* filesystem failure */
    SYQ_ERR_INTERNAL = 6
} syq_status;

typedef struct syq_dataset syq_dataset;
typedef struct syq_trainer syq_trainer;
typedef struct syq_model syq_model;

SYQ_API const char *syq_version(void);
SYQ_API const char *syq_status_name(syq_status status);

/* Description of the most recent failure on this thread; empty string when
 * no failure has been recorded. */
SYQ_API const char *syq_last_error(void);

/* ---- datasets ---------------------------------------------------------- */

/* Loads a big-endian IDX image/label file pair (the standard MNIST
 * encoding). Pixel values are scaled to [0, 1]. */
SYQ_API syq_status syq_dataset_open_idx(const char *images_path, const char *labels_path,
                                        syq_dataset **out);

/* Seeded synthetic task: Gaussian class blobs rendered as 16x16
 * single-channel images; bit-reproducible for a fixed seed. */
SYQ_API syq_status syq_dataset_synthetic(uint64_t seed, uint32_t classes, uint32_t count,
                                         syq_dataset **out);

SYQ_API void syq_dataset_free(syq_dataset *ds);
SYQ_API uint32_t syq_dataset_size(const syq_dataset *ds);
SYQ_API uint32_t syq_dataset_classes(const syq_dataset *ds);

/* ---- training ---------------------------------------------------------- */

/* Creates a trainer from a JSON run configuration (see the project README
 * for the schema and defaults; "{}" selects all defaults). */
SYQ_API syq_status syq_trainer_create(const char *config_json, syq_trainer **out);

/* Restores a trainer from a SYQC checkpoint written by
 * syq_trainer_save_checkpoint or a training run. */
SYQ_API syq_status syq_trainer_open_checkpoint(const char *path, syq_trainer **out);

/* Runs the configured number of epochs. When run_dir is non-NULL the run
 * directory receives config.json, train.log, checkpoints/final.syqc and
 * metrics.json. Evaluation results of the final epoch are returned through
 * the optional out parameters. */
SYQ_API syq_status syq_trainer_fit(syq_trainer *t, const syq_dataset *train_data,
                                   const syq_dataset *val_data, const char *run_dir,
                                   double *final_top1, double *best_top1);

SYQ_API syq_status syq_trainer_evaluate(syq_trainer *t, const syq_dataset *data,
                                        double *top1, double *loss);

SYQ_API syq_status syq_trainer_save_checkpoint(const syq_trainer *t, const char *path);

/* Writes the current state as a SYQ1 model file. */
SYQ_API syq_status syq_trainer_export_model(const syq_trainer *t, const char *path);

SYQ_API void syq_trainer_free(syq_trainer *t);

/* ---- exported models --------------------------------------------------- */

SYQ_API syq_status syq_model_open(const char *path, syq_model **out);
SYQ_API syq_status syq_model_evaluate(const syq_model *m, const syq_dataset *data,
                                      double *top1, double *loss);
SYQ_API void syq_model_free(syq_model *m);

/* ---- complexity report ------------------------------------------------- */

typedef struct syq_cost_row {
    char method[16];
    uint64_t scalars;
    uint64_t ops;
} syq_cost_row;

/* Scaling-coefficient and operation counts for a conv layer of the given
 * dimensions. method selects one of layer, row, pixel, asymmetric,
 * grouping, channel, or "all" for the full table. rows must hold at least
 * *row_count entries (6 suffice); *row_count is set to the number written. */
SYQ_API syq_status syq_cost_report(uint32_t kernel, uint32_t in_maps, uint32_t out_maps,
                                   uint32_t spatial, const char *method,
                                   syq_cost_row *rows, size_t *row_count);

#ifdef __cplusplus
}
#endif

#endif /* SYQ_H */
