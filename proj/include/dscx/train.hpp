#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dscx/checkpoint.hpp"
#include "dscx/dataset.hpp"
#include "dscx/errors.hpp"
#include "dscx/metrics.hpp"
#include "dscx/model.hpp"
#include "dscx/optimizer.hpp"

namespace dscx {

struct TrainConfig {
    uint64_t seed = 0;
    int epochs = 10;
    double lr = 1e-3;
    int batch_size = 16;
    bool class_weights = false;
    int heat_w = 256;
    int heat_h = 144;
    int threads = 1; // gradient reduction order is fixed per thread count
    double train_fraction = 0.8;

    ModelConfig model_config() const {
        ModelConfig m;
        m.heat_w = heat_w;
        m.heat_h = heat_h;
        return m;
    }
};

// Flat `key = value` config file; '#' starts a comment.
inline TrainConfig parse_train_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    TrainConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "epochs") cfg.epochs = std::stoi(value);
            else if (key == "lr") cfg.lr = std::stod(value);
            else if (key == "batch_size") cfg.batch_size = std::stoi(value);
            else if (key == "class_weights") cfg.class_weights = (value == "true" || value == "1");
            else if (key == "heatmap_width") cfg.heat_w = std::stoi(value);
            else if (key == "heatmap_height") cfg.heat_h = std::stoi(value);
            else if (key == "threads") cfg.threads = std::stoi(value);
            else if (key == "train_fraction") cfg.train_fraction = std::stod(value);
            else
                throw ParseError(path.string() + ":" + std::to_string(lineno) + ": unknown key '" +
                                 key + "'");
        } catch (const std::invalid_argument&) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad value for '" +
                             key + "'");
        } catch (const std::out_of_range&) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad value for '" +
                             key + "'");
        }
    }
    if (cfg.epochs < 0 || cfg.batch_size < 1 || cfg.threads < 1)
        throw InvalidConfig("config: epochs must be >= 0, batch_size and threads >= 1");
    return cfg;
}

struct EpochStat {
    int epoch = 0;
    double train_loss = 0.0;
    double val_acc = 0.0; // fraction in [0, 1]
};

struct TrainResult {
    std::vector<EpochStat> history;
    double best_val_acc = 0.0;
    int best_epoch = 0; // 0 = the untrained baseline
};

namespace detail {

template <typename Fn>
void run_chunked(int n, int threads, Fn&& fn) {
    const int workers = std::max(1, std::min(threads, n));
    if (workers == 1) {
        fn(0, 0, n);
        return;
    }
    const int chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(n, lo + chunk);
        pool.emplace_back([&fn, w, lo, hi] { fn(w, lo, hi); });
    }
    for (std::thread& t : pool) t.join();
}

} // namespace detail

// Order-preserving predictions for a set of samples; chunks run in parallel
// but each prediction is independent, so the result is thread-agnostic.
inline std::vector<ComplexityPrediction> predict_all(ComplexityModel& model,
                                                     const std::vector<const Sample*>& samples,
                                                     int threads) {
    std::vector<ComplexityPrediction> preds(samples.size());
    std::vector<std::exception_ptr> errs(static_cast<size_t>(std::max(1, threads)));
    detail::run_chunked(static_cast<int>(samples.size()), threads, [&](int w, int lo, int hi) {
        try {
            for (int i = lo; i < hi; ++i) preds[static_cast<size_t>(i)] = model.predict(*samples[static_cast<size_t>(i)]);
        } catch (...) {
            errs[static_cast<size_t>(w)] = std::current_exception();
        }
    });
    for (const auto& e : errs)
        if (e) std::rethrow_exception(e);
    return preds;
}

inline double evaluate_accuracy(ComplexityModel& model, const std::vector<const Sample*>& samples,
                                int threads, ConfusionMatrix* cm_out = nullptr) {
    if (samples.empty()) throw EmptyDataset("evaluation set is empty");
    const auto preds = predict_all(model, samples, threads);
    ConfusionMatrix cm;
    int64_t correct = 0;
    for (size_t i = 0; i < samples.size(); ++i) {
        cm.add(preds[i].predicted_class, samples[i]->label);
        if (preds[i].predicted_class == samples[i]->label) ++correct;
    }
    if (cm_out) *cm_out = cm;
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

// Inverse-frequency weights over the training labels; classes absent from
// the split weigh 1.
inline std::vector<double> inverse_frequency_weights(const std::vector<const Sample*>& train) {
    std::vector<int64_t> counts(kNumClasses, 0);
    for (const Sample* s : train) ++counts[static_cast<size_t>(s->label)];
    int present = 0;
    for (int64_t c : counts)
        if (c > 0) ++present;
    std::vector<double> w(kNumClasses, 1.0);
    for (int c = 0; c < kNumClasses; ++c)
        if (counts[static_cast<size_t>(c)] > 0)
            w[static_cast<size_t>(c)] = static_cast<double>(train.size()) /
                                        (static_cast<double>(present) *
                                         static_cast<double>(counts[static_cast<size_t>(c)]));
    return w;
}

// Adam training over shuffled mini-batches. Per-sample gradients are
// computed on private tapes; worker chunks are contiguous in sample order
// and reduced in a fixed order, so a given (seed, batch, threads) config
// replays bit-identically. The best-validation checkpoint (including the
// epoch-0 baseline, so a file always exists) is written when a path is
// given. The optional callback sees each epoch and may return false to stop
// early.
inline TrainResult train_model(ComplexityModel& model, const std::vector<const Sample*>& train,
                               const std::vector<const Sample*>& val, const TrainConfig& cfg,
                               const std::optional<std::filesystem::path>& checkpoint_path = {},
                               const std::function<bool(const EpochStat&)>& on_epoch = {}) {
    if (train.empty()) throw EmptyDataset("training split is empty");

    {
        std::vector<const DynamicsWindow*> windows;
        windows.reserve(train.size());
        for (const Sample* s : train) windows.push_back(&s->dynamics);
        model.set_dyn_stats(compute_dyn_stats(windows));
    }
    const std::vector<double> cw = cfg.class_weights
                                       ? inverse_frequency_weights(train)
                                       : std::vector<double>(kNumClasses, 1.0);

    const std::vector<Parameter*>& params = model.parameters();
    Adam opt(cfg.lr);
    Rng rng(cfg.seed);

    TrainResult result;
    result.best_val_acc = val.empty() ? 0.0 : evaluate_accuracy(model, val, cfg.threads);
    result.best_epoch = 0;
    if (checkpoint_path) save_checkpoint(*checkpoint_path, model.state_entries());

    std::vector<int> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        int64_t loss_count = 0;

        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
            const int nb = static_cast<int>(
                std::min(order.size() - start, static_cast<size_t>(cfg.batch_size)));
            const int workers = std::max(1, std::min(cfg.threads, nb));
            std::vector<std::vector<Tensor>> acc(static_cast<size_t>(workers),
                                                 std::vector<Tensor>(params.size()));
            std::vector<double> losses(static_cast<size_t>(nb), 0.0);
            std::vector<std::exception_ptr> errs(static_cast<size_t>(workers));

            detail::run_chunked(nb, workers, [&](int w, int lo, int hi) {
                try {
                    Tape tape;
                    for (int i = lo; i < hi; ++i) {
                        tape.reset();
                        const Sample& s = *train[static_cast<size_t>(order[start + static_cast<size_t>(i)])];
                        const auto tr = model.forward(tape, s);
                        const Tape::Id loss =
                            tape.cross_entropy(tr.logits, s.label, cw[static_cast<size_t>(s.label)]);
                        losses[static_cast<size_t>(i)] = tape.val(loss).v[0];
                        tape.backward(loss, 1.0 / static_cast<double>(nb));
                        tape.collect_param_grads(acc[static_cast<size_t>(w)], 1.0);
                    }
                } catch (...) {
                    errs[static_cast<size_t>(w)] = std::current_exception();
                }
            });
            for (const auto& e : errs)
                if (e) std::rethrow_exception(e);

            for (double l : losses) {
                if (!std::isfinite(l))
                    throw NonFiniteLoss("non-finite loss in epoch " + std::to_string(epoch));
                loss_sum += l;
                ++loss_count;
            }
            for (int w = 0; w < workers; ++w)
                for (size_t pid = 0; pid < params.size(); ++pid) {
                    const Tensor& g = acc[static_cast<size_t>(w)][pid];
                    if (g.numel() == 0) continue;
                    for (int64_t i = 0; i < g.numel(); ++i) params[pid]->grad.v[i] += g.v[i];
                }
            opt.step(params);
            for (Parameter* p : params) p->zero_grad();
        }

        EpochStat stat;
        stat.epoch = epoch;
        stat.train_loss = loss_sum / static_cast<double>(std::max<int64_t>(1, loss_count));
        stat.val_acc = val.empty() ? 0.0 : evaluate_accuracy(model, val, cfg.threads);
        result.history.push_back(stat);

        if (stat.val_acc > result.best_val_acc) {
            result.best_val_acc = stat.val_acc;
            result.best_epoch = epoch;
            if (checkpoint_path) save_checkpoint(*checkpoint_path, model.state_entries());
        }
        if (on_epoch && !on_epoch(stat)) break;
    }
    return result;
}

inline void write_history_csv(const std::filesystem::path& path,
                              const std::vector<EpochStat>& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "epoch,train_loss,val_acc\n";
    char buf[96];
    for (const EpochStat& s : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", s.epoch, s.train_loss, s.val_acc);
        out << buf;
    }
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

struct CvResult {
    std::vector<double> fold_accuracies; // fractions
    double mean_accuracy = 0.0;
    ConfusionMatrix aggregate; // pooled over all validation folds
};

// Stratified k-fold cross-validation: train a fresh model per fold, pool
// every fold's validation predictions, and report the mean fold accuracy.
inline CvResult run_kfold_cv(const std::vector<Sample>& samples, int k, const TrainConfig& cfg,
                             const std::function<void(int, double)>& on_fold = {}) {
    if (samples.empty()) throw EmptyDataset("cross-validation set is empty");
    const auto folds = kfold_indices(
        static_cast<int>(samples.size()),
        [&](int i) { return samples[static_cast<size_t>(i)].label; }, k, cfg.seed);
    CvResult cv;
    for (size_t f = 0; f < folds.size(); ++f) {
        std::vector<const Sample*> train, validate;
        for (int i : folds[f].train) train.push_back(&samples[static_cast<size_t>(i)]);
        for (int i : folds[f].validate) validate.push_back(&samples[static_cast<size_t>(i)]);
        ComplexityModel model(cfg.model_config(), cfg.seed);
        train_model(model, train, validate, cfg);
        ConfusionMatrix cm;
        const double acc = evaluate_accuracy(model, validate, cfg.threads, &cm);
        cv.aggregate.merge(cm);
        cv.fold_accuracies.push_back(acc);
        if (on_fold) on_fold(static_cast<int>(f), acc);
    }
    for (double a : cv.fold_accuracies) cv.mean_accuracy += a;
    cv.mean_accuracy /= static_cast<double>(cv.fold_accuracies.size());
    return cv;
}

} // namespace dscx
