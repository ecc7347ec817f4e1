/*
 * (C) Copyright 2026 the syq developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

// Command-line front end. All model work goes through the public C API; this
// file only parses flags, assembles the JSON run configuration and formats
// output.
//
// Exit codes: 0 success, 2 usage/configuration, 3 data/format, 4 divergence.

#include <syq/syq.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;

int status_exit_code(syq_status s) {
    switch (s) {
    case SYQ_OK: return 0;
    case SYQ_ERR_ARG:
    case SYQ_ERR_CONFIG: return kExitUsage;
    case SYQ_ERR_FORMAT: return kExitData;
    case SYQ_ERR_DIVERGED: return kExitDiverged;
    default: return kExitData;
    }
}

[[noreturn]] void fail(syq_status s, const char *what) {
    std::fprintf(stderr, "syq: %s: %s (%s)\n", what, syq_last_error(), syq_status_name(s));
    std::exit(status_exit_code(s));
}

struct DatasetCloser {
    void operator()(syq_dataset *d) const { syq_dataset_free(d); }
};
struct TrainerCloser {
    void operator()(syq_trainer *t) const { syq_trainer_free(t); }
};
struct ModelCloser {
    void operator()(syq_model *m) const { syq_model_free(m); }
};

using DatasetPtr = std::unique_ptr<syq_dataset, DatasetCloser>;
using TrainerPtr = std::unique_ptr<syq_trainer, TrainerCloser>;
using ModelPtr = std::unique_ptr<syq_model, ModelCloser>;

struct DataOptions {
    bool synthetic = false;
    std::string data_dir;
    uint64_t seed = 7;
    int synth_classes = 4;
    int synth_count = 6000;
};

void add_data_options(CLI::App *cmd, DataOptions &opts) {
    cmd->add_flag("--synthetic", opts.synthetic, "use the built-in synthetic task");
    cmd->add_option("--data-dir", opts.data_dir,
                    "directory with MNIST-style IDX files (train-images-idx3-ubyte, "
                    "train-labels-idx1-ubyte, t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte)");
}

// Loads the train/validation pair. The synthetic validation stream derives
// its seed from the training seed.
void open_datasets(const DataOptions &opts, DatasetPtr &train, DatasetPtr &val) {
    if (opts.synthetic) {
        syq_dataset *d = nullptr;
        syq_status s = syq_dataset_synthetic(opts.seed, opts.synth_classes, opts.synth_count, &d);
        if (s != SYQ_OK) fail(s, "--synthetic");
        train.reset(d);
        s = syq_dataset_synthetic(opts.seed + 1, opts.synth_classes,
                                  std::max(opts.synth_count / 5, 200), &d);
        if (s != SYQ_OK) fail(s, "--synthetic");
        val.reset(d);
        return;
    }
    if (opts.data_dir.empty()) {
        std::fprintf(stderr, "syq: a dataset is required: pass --data-dir or --synthetic\n");
        std::exit(kExitUsage);
    }
    namespace fs = std::filesystem;
    const fs::path dir(opts.data_dir);
    syq_dataset *d = nullptr;
    syq_status s = syq_dataset_open_idx((dir / "train-images-idx3-ubyte").string().c_str(),
                                        (dir / "train-labels-idx1-ubyte").string().c_str(), &d);
    if (s != SYQ_OK) fail(s, "--data-dir (training split)");
    train.reset(d);
    s = syq_dataset_open_idx((dir / "t10k-images-idx3-ubyte").string().c_str(),
                             (dir / "t10k-labels-idx1-ubyte").string().c_str(), &d);
    if (s != SYQ_OK) fail(s, "--data-dir (validation split)");
    val.reset(d);
}

std::string resolve_run_dir(const std::string &out_flag) {
    if (!out_flag.empty()) {
        if (const char *root = std::getenv("SYQ_RUN_DIR"))
            return (std::filesystem::path(root) / out_flag).string();
        return out_flag;
    }
    if (const char *root = std::getenv("SYQ_RUN_DIR"))
        return (std::filesystem::path(root) / "run").string();
    return "runs/run";
}

bool file_has_magic(const std::string &path, const char *magic) {
    std::ifstream in(path, std::ios::binary);
    char buf[4] = {};
    in.read(buf, 4);
    return in.gcount() == 4 && std::memcmp(buf, magic, 4) == 0;
}

int cmd_train(const DataOptions &data_opts, const std::string &config_path,
              const nlohmann::json &overrides, const std::string &out_flag) {
    nlohmann::json config = nlohmann::json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            std::fprintf(stderr, "syq: --config: cannot open %s\n", config_path.c_str());
            return kExitUsage;
        }
        try {
            in >> config;
        } catch (const nlohmann::json::exception &e) {
            std::fprintf(stderr, "syq: --config: %s\n", e.what());
            return kExitUsage;
        }
    }
    for (auto it = overrides.begin(); it != overrides.end(); ++it) config[it.key()] = it.value();

    DatasetPtr train, val;
    open_datasets(data_opts, train, val);

    TrainerPtr trainer;
    {
        syq_trainer *t = nullptr;
        const syq_status s = syq_trainer_create(config.dump().c_str(), &t);
        if (s != SYQ_OK) fail(s, "configuration");
        trainer.reset(t);
    }

    const std::string run_dir = resolve_run_dir(out_flag);
    double final_top1 = 0.0, best_top1 = 0.0;
    const syq_status s = syq_trainer_fit(trainer.get(), train.get(), val.get(),
                                         run_dir.c_str(), &final_top1, &best_top1);
    if (s != SYQ_OK) fail(s, "training");

    std::printf("run dir: %s\n", run_dir.c_str());
    std::printf("final top-1: %.4f\n", final_top1);
    std::printf("best top-1:  %.4f\n", best_top1);
    return 0;
}

int cmd_eval(const std::string &model_path, const DataOptions &data_opts) {
    DatasetPtr train, val;
    open_datasets(data_opts, train, val);

    double top1 = 0.0, loss = 0.0;
    if (file_has_magic(model_path, "SYQC")) {
        syq_trainer *t = nullptr;
        syq_status s = syq_trainer_open_checkpoint(model_path.c_str(), &t);
        if (s != SYQ_OK) fail(s, "checkpoint");
        TrainerPtr trainer(t);
        s = syq_trainer_evaluate(trainer.get(), val.get(), &top1, &loss);
        if (s != SYQ_OK) fail(s, "evaluation");
    } else {
        syq_model *m = nullptr;
        syq_status s = syq_model_open(model_path.c_str(), &m);
        if (s != SYQ_OK) fail(s, "model");
        ModelPtr model(m);
        s = syq_model_evaluate(model.get(), val.get(), &top1, &loss);
        if (s != SYQ_OK) fail(s, "evaluation");
    }
    std::printf("top1\t%.6f\nloss\t%.6f\n", top1, loss);
    return 0;
}

int cmd_export(const std::string &checkpoint_path, const std::string &out_path) {
    syq_trainer *t = nullptr;
    syq_status s = syq_trainer_open_checkpoint(checkpoint_path.c_str(), &t);
    if (s != SYQ_OK) fail(s, "checkpoint");
    TrainerPtr trainer(t);
    s = syq_trainer_export_model(trainer.get(), out_path.c_str());
    if (s != SYQ_OK) fail(s, "export");
    std::printf("wrote %s\n", out_path.c_str());
    return 0;
}

int cmd_cost(uint32_t kernel, uint32_t in_maps, uint32_t out_maps, uint32_t spatial,
             const std::string &method) {
    syq_cost_row rows[6];
    size_t count = 6;
    const syq_status s =
        syq_cost_report(kernel, in_maps, out_maps, spatial, method.c_str(), rows, &count);
    if (s != SYQ_OK) fail(s, "cost report");
    std::printf("%-12s %12s %16s\n", "method", "scalars", "ops");
    for (size_t i = 0; i < count; ++i)
        std::printf("%-12s %12llu %16llu\n", rows[i].method,
                    static_cast<unsigned long long>(rows[i].scalars),
                    static_cast<unsigned long long>(rows[i].ops));
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"syq: train, evaluate and export CNNs with symmetric low-precision "
                 "quantization"};
    app.require_subcommand(1);

    // train
    auto *train = app.add_subcommand("train", "train a model and write a run directory");
    DataOptions train_data;
    add_data_options(train, train_data);
    std::string config_path, out_flag;
    std::optional<int> epochs, batch, lr_step, wbits, abits, fbits;
    std::optional<double> lr, lr_decay;
    std::optional<uint64_t> seed;
    std::string granularity;
    train->add_option("--config", config_path, "JSON configuration file");
    train->add_option("--epochs", epochs, "training epochs");
    train->add_option("--batch", batch, "minibatch size");
    train->add_option("--lr", lr, "initial learning rate");
    train->add_option("--lr-decay", lr_decay, "learning-rate decay factor");
    train->add_option("--lr-step", lr_step, "steps between learning-rate decays");
    train->add_option("--seed", seed, "random seed");
    train->add_option("--granularity", granularity, "conv scale granularity: pixel, row or layer")
        ->check(CLI::IsMember({"pixel", "row", "layer"}));
    train->add_option("--wbits", wbits, "weight bits: 1 (binary) or 2 (ternary)");
    train->add_option("--abits", abits, "activation bits (2-8)");
    train->add_option("--fbits", fbits, "activation fractional bits (default: abits)");
    train->add_option("--out", out_flag, "run directory (SYQ_RUN_DIR overrides the root)");

    // eval
    auto *eval = app.add_subcommand("eval", "evaluate a SYQ1 model or SYQC checkpoint");
    DataOptions eval_data;
    std::string eval_path;
    eval->add_option("model", eval_path, "model or checkpoint path")->required();
    add_data_options(eval, eval_data);
    eval->add_option("--seed", eval_data.seed, "seed for --synthetic");

    // export
    auto *exp = app.add_subcommand("export", "convert a checkpoint to a SYQ1 model file");
    std::string ckpt_path, export_out;
    exp->add_option("checkpoint", ckpt_path, "SYQC checkpoint path")->required();
    exp->add_option("output", export_out, "output SYQ1 path")->required();

    // cost
    auto *cost = app.add_subcommand("cost", "per-layer scaling/operation cost table");
    uint32_t ck = 3, ci = 384, cn = 256, cf = 13;
    std::string method = "all";
    cost->add_option("-K", ck, "kernel size")->required();
    cost->add_option("-I", ci, "input feature maps")->required();
    cost->add_option("-N", cn, "output feature maps")->required();
    cost->add_option("-F", cf, "input feature-map spatial dimension")->required();
    cost->add_option("--method", method,
                     "layer, row, pixel, asymmetric, grouping, channel or all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    if (train->parsed()) {
        if (seed) train_data.seed = *seed;
        nlohmann::json overrides = nlohmann::json::object();
        if (epochs) overrides["epochs"] = *epochs;
        if (batch) overrides["batch"] = *batch;
        if (lr) overrides["lr"] = *lr;
        if (lr_decay) overrides["lr_decay"] = *lr_decay;
        if (lr_step) overrides["lr_step"] = *lr_step;
        if (seed) overrides["seed"] = *seed;
        if (!granularity.empty()) overrides["granularity"] = granularity;
        if (wbits) overrides["wbits"] = *wbits;
        if (abits) overrides["abits"] = *abits;
        if (fbits) overrides["fbits"] = *fbits;
        if (train_data.synthetic) {
            overrides["input_size"] = 16;
            if (!overrides.contains("classes")) overrides["classes"] = train_data.synth_classes;
        }
        return cmd_train(train_data, config_path, overrides, out_flag);
    }
    if (eval->parsed()) return cmd_eval(eval_path, eval_data);
    if (exp->parsed()) return cmd_export(ckpt_path, export_out);
    if (cost->parsed()) return cmd_cost(ck, ci, cn, cf, method);
    return kExitUsage;
}
