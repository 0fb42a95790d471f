// dscx command-line interface: heatmap | synth | train | eval | predict
//
// Exit codes: 0 success, 2 parse failure, 3 I/O failure, 4 numeric failure
// during training, 5 checkpoint mismatch.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dscx/dscx.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitCheckpoint = 5;

struct CliOptions {
    std::string detections, out, manifest, config, checkpoint, history, metrics;
    int width = 256, height = 144;
    int frame = -1;
    int total = 1000;
    std::vector<int> counts;
    uint64_t seed = 0;
    int kfold = 0;
    bool only_moving = false;
};

dscx::TrainConfig load_config(const std::string& path) {
    if (path.empty()) return dscx::TrainConfig{};
    return dscx::parse_train_config(path);
}

std::vector<dscx::Sample> load_samples(const std::string& manifest_path,
                                       const dscx::TrainConfig& cfg, bool only_moving) {
    const dscx::Manifest manifest = dscx::read_manifest(manifest_path);
    dscx::LoadedDataset ds = dscx::load_dataset(manifest);
    if (ds.dropped > 0)
        std::cerr << "dropped " << ds.dropped << " of " << manifest.entries.size()
                  << " manifest entries\n";
    (void)cfg;
    std::vector<dscx::Sample> samples;
    for (auto& s : ds.samples)
        if (!only_moving || s.moving) samples.push_back(std::move(s));
    if (samples.empty()) throw dscx::EmptyDataset("no usable samples in '" + manifest_path + "'");
    return samples;
}

int cmd_heatmap(const CliOptions& opt) {
    const auto frames = dscx::read_detections_jsonl(opt.detections);
    std::vector<dscx::Detection> boxes;
    for (const auto& f : frames) {
        if (opt.frame >= 0 && f.frame != opt.frame) continue;
        boxes.insert(boxes.end(), f.boxes.begin(), f.boxes.end());
    }
    const dscx::HeatMap hm = dscx::render_heatmap(boxes, opt.width, opt.height);
    dscx::write_pgm16(opt.out, hm);
    std::printf("%.17g\n", hm.total_intensity);
    return 0;
}

int cmd_synth(const CliOptions& opt) {
    dscx::SynthConfig cfg;
    cfg.seed = opt.seed;
    if (!opt.counts.empty()) {
        if (opt.counts.size() != dscx::kNumClasses)
            throw dscx::InvalidConfig("--counts needs exactly 5 values");
        for (int c = 0; c < dscx::kNumClasses; ++c)
            cfg.class_counts[static_cast<size_t>(c)] = opt.counts[static_cast<size_t>(c)];
    } else {
        cfg.class_counts = dscx::table2_counts(opt.total);
    }
    const auto ds = dscx::generate_synth_dataset(cfg, opt.out);
    std::cout << "wrote " << ds.entries.size() << " samples under " << opt.out << "\n";
    return 0;
}

int cmd_train(const CliOptions& opt) {
    const dscx::TrainConfig cfg = load_config(opt.config);
    const std::vector<dscx::Sample> samples = load_samples(opt.manifest, cfg, opt.only_moving);

    const auto split = dscx::stratified_split_indices(
        static_cast<int>(samples.size()),
        [&](int i) { return samples[static_cast<size_t>(i)].label; }, cfg.train_fraction, cfg.seed);
    std::vector<const dscx::Sample*> train, val;
    for (int i : split.train) train.push_back(&samples[static_cast<size_t>(i)]);
    for (int i : split.validate) val.push_back(&samples[static_cast<size_t>(i)]);
    std::cerr << "training on " << train.size() << " samples, validating on " << val.size()
              << "\n";

    dscx::ComplexityModel model(cfg.model_config(), cfg.seed);
    dscx::TrainResult result;
    try {
        result = dscx::train_model(model, train, val, cfg, fs::path(opt.out),
                                   [](const dscx::EpochStat& s) {
                                       std::fprintf(stderr,
                                                    "epoch %d: train_loss %.4f val_acc %.4f\n",
                                                    s.epoch, s.train_loss, s.val_acc);
                                       return true;
                                   });
    } catch (const dscx::NonFiniteLoss& e) {
        // the best checkpoint so far is already on disk; report and bail
        if (!opt.history.empty()) dscx::write_history_csv(opt.history, result.history);
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    if (!opt.history.empty()) dscx::write_history_csv(opt.history, result.history);
    std::printf("best_val_acc %.17g at epoch %d\n", result.best_val_acc, result.best_epoch);
    return 0;
}

int cmd_eval(const CliOptions& opt) {
    const dscx::TrainConfig cfg = load_config(opt.config);
    std::vector<dscx::Sample> samples = load_samples(opt.manifest, cfg, opt.only_moving);

    if (opt.kfold > 0) {
        const dscx::CvResult cv =
            dscx::run_kfold_cv(samples, opt.kfold, cfg, [](int fold, double acc) {
                std::fprintf(stderr, "fold %d: accuracy %.4f\n", fold + 1, acc);
            });
        const auto report = dscx::accuracy_report(cv.aggregate);
        std::cout << dscx::format_confusion_table(cv.aggregate, report);
        std::printf("mean fold accuracy: %.2f%%\n", 100.0 * cv.mean_accuracy);
        if (!opt.metrics.empty()) {
            nlohmann::json j = dscx::metrics_to_json(cv.aggregate, report);
            nlohmann::json folds = nlohmann::json::array();
            for (double a : cv.fold_accuracies) folds.push_back(100.0 * a);
            j["fold_accuracies"] = folds;
            j["mean_fold_accuracy"] = 100.0 * cv.mean_accuracy;
            std::ofstream out(opt.metrics, std::ios::binary);
            if (!out) throw dscx::IoError("cannot open '" + opt.metrics + "' for writing");
            out << j.dump(2) << "\n";
        }
        return 0;
    }

    dscx::ComplexityModel model(cfg.model_config(), cfg.seed);
    dscx::load_checkpoint(opt.checkpoint, model.state_entries());
    std::vector<const dscx::Sample*> ptrs;
    for (const auto& s : samples) ptrs.push_back(&s);
    dscx::ConfusionMatrix cm;
    dscx::evaluate_accuracy(model, ptrs, cfg.threads, &cm);
    const auto report = dscx::accuracy_report(cm);
    std::cout << dscx::format_confusion_table(cm, report);
    if (!opt.metrics.empty()) dscx::write_metrics_json(opt.metrics, cm, report);
    return 0;
}

int cmd_predict(const CliOptions& opt) {
    const dscx::TrainConfig cfg = load_config(opt.config);
    std::vector<dscx::Sample> samples = load_samples(opt.manifest, cfg, opt.only_moving);
    dscx::ComplexityModel model(cfg.model_config(), cfg.seed);
    dscx::load_checkpoint(opt.checkpoint, model.state_entries());

    const auto outcomes = dscx::predict_batch(model, samples);
    std::ofstream out(opt.out, std::ios::binary);
    if (!out) throw dscx::IoError("cannot open '" + opt.out + "' for writing");
    out << "sample_id,predicted,p0,p1,p2,p3,p4\n";
    char buf[160];
    for (size_t i = 0; i < samples.size(); ++i) {
        if (!outcomes[i].ok) {
            std::cerr << "sample '" << samples[i].id << "' failed: " << outcomes[i].error << "\n";
            continue;
        }
        const auto& p = outcomes[i].prediction;
        std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                      samples[i].id.c_str(), p.predicted_class, p.probabilities[0],
                      p.probabilities[1], p.probabilities[2], p.probabilities[3],
                      p.probabilities[4]);
        out << buf;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"driving-scene complexity toolkit"};
    app.require_subcommand(1);
    CliOptions opt;

    CLI::App* heatmap = app.add_subcommand("heatmap", "render a detections file to a 16-bit PGM");
    heatmap->add_option("--detections", opt.detections, "detections JSONL")->required();
    heatmap->add_option("--width", opt.width, "heat map width");
    heatmap->add_option("--height", opt.height, "heat map height");
    heatmap->add_option("--out", opt.out, "output PGM path")->required();
    heatmap->add_option("--frame", opt.frame, "render only this frame index (default: all boxes)");

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic labeled dataset");
    synth->add_option("--out", opt.out, "output directory")->required();
    synth->add_option("--total", opt.total, "total samples (published class shares)");
    synth->add_option("--counts", opt.counts, "explicit per-class counts (5 values)");
    synth->add_option("--seed", opt.seed, "generator seed");

    CLI::App* train = app.add_subcommand("train", "train a model from a manifest");
    train->add_option("--manifest", opt.manifest, "dataset manifest CSV")->required();
    train->add_option("--config", opt.config, "training config file");
    train->add_option("--out", opt.out, "output checkpoint path")->required();
    train->add_option("--history", opt.history, "training history CSV path");
    train->add_flag("--only-moving", opt.only_moving, "drop samples whose vehicle is stopped");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint or run k-fold CV");
    eval->add_option("--manifest", opt.manifest, "dataset manifest CSV")->required();
    eval->add_option("--checkpoint", opt.checkpoint, "model checkpoint");
    eval->add_option("--config", opt.config, "training config file");
    eval->add_option("--metrics", opt.metrics, "metrics JSON output path");
    eval->add_option("--kfold", opt.kfold, "run k-fold cross-validation (trains per fold)");
    eval->add_flag("--only-moving", opt.only_moving, "drop samples whose vehicle is stopped");

    CLI::App* predict = app.add_subcommand("predict", "write per-sample predictions");
    predict->add_option("--manifest", opt.manifest, "dataset manifest CSV")->required();
    predict->add_option("--checkpoint", opt.checkpoint, "model checkpoint")->required();
    predict->add_option("--config", opt.config, "training config file");
    predict->add_option("--out", opt.out, "predictions CSV path")->required();
    predict->add_flag("--only-moving", opt.only_moving, "drop samples whose vehicle is stopped");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitParse;
    }

    try {
        if (heatmap->parsed()) return cmd_heatmap(opt);
        if (synth->parsed()) return cmd_synth(opt);
        if (train->parsed()) return cmd_train(opt);
        if (eval->parsed()) {
            if (opt.kfold == 0 && opt.checkpoint.empty()) {
                std::cerr << "error: eval needs --checkpoint (or --kfold)\n";
                return kExitParse;
            }
            return cmd_eval(opt);
        }
        if (predict->parsed()) return cmd_predict(opt);
    } catch (const dscx::CheckpointMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckpoint;
    } catch (const dscx::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const dscx::InvalidConfig& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const dscx::NonFiniteLoss& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const dscx::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const dscx::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
