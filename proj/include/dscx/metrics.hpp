#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dscx/errors.hpp"
#include "dscx/sample.hpp"

namespace dscx {

// 5x5 count grid: rows are the predicted class, columns the true class, so
// column sums equal per-class validation counts.
class ConfusionMatrix {
public:
    ConfusionMatrix() { for (auto& row : counts_) row.fill(0); }

    explicit ConfusionMatrix(const std::array<std::array<int64_t, kNumClasses>, kNumClasses>& c)
        : counts_(c) {}

    void add(int predicted, int truth) {
        if (predicted < 0 || predicted >= kNumClasses || truth < 0 || truth >= kNumClasses)
            throw InvalidLabel("confusion matrix index outside 0..4");
        ++counts_[static_cast<size_t>(predicted)][static_cast<size_t>(truth)];
    }

    int64_t at(int predicted, int truth) const {
        return counts_[static_cast<size_t>(predicted)][static_cast<size_t>(truth)];
    }

    void merge(const ConfusionMatrix& o) {
        for (int p = 0; p < kNumClasses; ++p)
            for (int t = 0; t < kNumClasses; ++t)
                counts_[static_cast<size_t>(p)][static_cast<size_t>(t)] += o.at(p, t);
    }

    int64_t column_sum(int truth) const {
        int64_t s = 0;
        for (int p = 0; p < kNumClasses; ++p) s += at(p, truth);
        return s;
    }

    int64_t trace() const {
        int64_t s = 0;
        for (int i = 0; i < kNumClasses; ++i) s += at(i, i);
        return s;
    }

    int64_t total() const {
        int64_t s = 0;
        for (int c = 0; c < kNumClasses; ++c) s += column_sum(c);
        return s;
    }

private:
    std::array<std::array<int64_t, kNumClasses>, kNumClasses> counts_;
};

// Per-class accuracy = diagonal / column sum, as percentages. Classes with
// an empty column are undefined and reported as absent.
struct AccuracyReport {
    std::array<std::optional<double>, kNumClasses> per_class_pct;
    double overall_pct = 0.0;
};

inline AccuracyReport accuracy_report(const ConfusionMatrix& cm) {
    AccuracyReport r;
    const int64_t total = cm.total();
    if (total == 0) throw EmptyDataset("confusion matrix is empty");
    for (int c = 0; c < kNumClasses; ++c) {
        const int64_t col = cm.column_sum(c);
        if (col > 0)
            r.per_class_pct[static_cast<size_t>(c)] =
                100.0 * static_cast<double>(cm.at(c, c)) / static_cast<double>(col);
    }
    r.overall_pct = 100.0 * static_cast<double>(cm.trace()) / static_cast<double>(total);
    return r;
}

inline nlohmann::json metrics_to_json(const ConfusionMatrix& cm, const AccuracyReport& r) {
    nlohmann::json per = nlohmann::json::array();
    for (int c = 0; c < kNumClasses; ++c) {
        if (r.per_class_pct[static_cast<size_t>(c)])
            per.push_back(*r.per_class_pct[static_cast<size_t>(c)]);
        else
            per.push_back(nullptr);
    }
    nlohmann::json grid = nlohmann::json::array();
    for (int p = 0; p < kNumClasses; ++p) {
        nlohmann::json row = nlohmann::json::array();
        for (int t = 0; t < kNumClasses; ++t) row.push_back(cm.at(p, t));
        grid.push_back(row);
    }
    return nlohmann::json{{"per_class_accuracy", per},
                          {"overall_accuracy", r.overall_pct},
                          {"confusion", grid}};
}

inline void write_metrics_json(const std::filesystem::path& path, const ConfusionMatrix& cm,
                               const AccuracyReport& r) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << metrics_to_json(cm, r).dump(2) << "\n";
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// Text grid in the published table's layout: prediction rows, truth columns,
// per-class accuracy footer.
inline std::string format_confusion_table(const ConfusionMatrix& cm, const AccuracyReport& r) {
    std::ostringstream os;
    os << "            ";
    for (int t = 0; t < kNumClasses; ++t) os << "  Class " << t;
    os << "\n";
    for (int p = 0; p < kNumClasses; ++p) {
        os << "  Class " << p << "  ";
        for (int t = 0; t < kNumClasses; ++t) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%9lld", static_cast<long long>(cm.at(p, t)));
            os << buf;
        }
        os << "\n";
    }
    os << "  Acc (%)  ";
    for (int t = 0; t < kNumClasses; ++t) {
        char buf[16];
        if (r.per_class_pct[static_cast<size_t>(t)])
            std::snprintf(buf, sizeof(buf), "%9.2f", *r.per_class_pct[static_cast<size_t>(t)]);
        else
            std::snprintf(buf, sizeof(buf), "%9s", "-");
        os << buf;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "\n  Overall accuracy: %.2f%%\n", r.overall_pct);
    os << buf;
    return os.str();
}

} // namespace dscx
