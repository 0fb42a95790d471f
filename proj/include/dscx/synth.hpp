#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "dscx/dataset.hpp"
#include "dscx/detections_io.hpp"
#include "dscx/dynamics.hpp"
#include "dscx/errors.hpp"
#include "dscx/random.hpp"

namespace dscx {

// ----------------------------------------------------------------------
// Planted labeling rule
//
// Synthetic labels are a transparent, recomputable function of the files:
//   score = mean humans per keyframe
//         + 10 * mean box-area fraction per keyframe
//         + (std(ax) + std(ay)) of the resampled window
// thresholded at kSynthThresholds. The generator targets disjoint score
// bands per class with wide margins around every threshold, so re-scoring
// the written files always reproduces the manifest label.
// ----------------------------------------------------------------------

inline constexpr std::array<double, 4> kSynthThresholds{1.0, 2.6, 4.1, 5.7};

// Table II class shares, in percent.
inline constexpr std::array<double, kNumClasses> kClassShares{32.84, 44.83, 18.59, 3.23, 0.52};

struct SampleScore {
    double humans = 0.0;    // mean pedestrian+cyclist boxes per keyframe
    double area_frac = 0.0; // mean total box area / image area
    double dyn_std = 0.0;   // std(ax) + std(ay)
    double score = 0.0;
    int label = 0;
};

namespace detail {

inline double population_std(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    return std::sqrt(var / static_cast<double>(x.size()));
}

} // namespace detail

inline SampleScore score_sample(const std::vector<FrameDetections>& frames,
                                const DynamicsWindow& window, int img_w, int img_h) {
    SampleScore s;
    const std::vector<int> picks = select_keyframes(static_cast<int>(frames.size()));
    const double img_area = static_cast<double>(img_w) * static_cast<double>(img_h);
    for (int i : picks) {
        const auto& boxes = frames[static_cast<size_t>(i)].boxes;
        double area = 0.0;
        int humans = 0;
        for (const Detection& d : boxes) {
            area += std::max(0.0, d.x_rt - d.x_lb) * std::max(0.0, d.y_rt - d.y_lb);
            if (d.cls == ObjectClass::Pedestrian || d.cls == ObjectClass::Cyclist) ++humans;
        }
        s.humans += static_cast<double>(humans);
        s.area_frac += area / img_area;
    }
    s.humans /= kKeyframes;
    s.area_frac /= kKeyframes;
    s.dyn_std = detail::population_std(window.ax) + detail::population_std(window.ay);
    s.score = s.humans + 10.0 * s.area_frac + s.dyn_std;
    s.label = 0;
    for (double t : kSynthThresholds)
        if (s.score > t) ++s.label;
    return s;
}

// Largest-remainder apportionment of `total` samples to the Table II shares.
inline std::array<int, kNumClasses> table2_counts(int total) {
    std::array<int, kNumClasses> counts{};
    std::array<double, kNumClasses> exact{};
    int assigned = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        exact[static_cast<size_t>(c)] = kClassShares[static_cast<size_t>(c)] / 100.0 * total;
        counts[static_cast<size_t>(c)] = static_cast<int>(std::floor(exact[static_cast<size_t>(c)]));
        assigned += counts[static_cast<size_t>(c)];
    }
    while (assigned < total) {
        int best = 0;
        double best_rem = -1.0;
        for (int c = 0; c < kNumClasses; ++c) {
            const double rem = exact[static_cast<size_t>(c)] - counts[static_cast<size_t>(c)];
            if (rem > best_rem) {
                best_rem = rem;
                best = c;
            }
        }
        ++counts[static_cast<size_t>(best)];
        ++assigned;
    }
    return counts;
}

struct SynthConfig {
    std::array<int, kNumClasses> class_counts{};
    uint64_t seed = 0;
    int img_w = 1280;
    int img_h = 720;
    int frames = 120;
    double fps = 30.0;
};

namespace detail {

struct Band {
    double area_lo, area_hi; // total box-area fraction
    double dyn_lo, dyn_hi;   // std(ax) + std(ay)
};

// Per-label generation bands. Combined with humans = label, the resulting
// score intervals are [0.05,0.45], [1.6,2.0], [3.15,3.55], [4.7,5.1] and
// [6.25,6.8] -- clear of every threshold by at least 0.55.
inline Band band_for(int label) {
    switch (label) {
        case 0: return {0.005, 0.030, 0.05, 0.15};
        case 1: return {0.040, 0.070, 0.20, 0.30};
        case 2: return {0.080, 0.110, 0.35, 0.45};
        case 3: return {0.120, 0.150, 0.50, 0.60};
        default: return {0.160, 0.200, 0.65, 0.80};
    }
}

inline uint64_t mix_seed(uint64_t seed, uint64_t index) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// AR(1) noise recentred and rescaled to an exact population std.
inline std::vector<double> smooth_noise(int n, double target_std, Rng& rng) {
    std::vector<double> x(static_cast<size_t>(n));
    double g = rng.gaussian();
    const double rho = 0.8;
    const double w = std::sqrt(1.0 - rho * rho);
    for (int i = 0; i < n; ++i) {
        x[static_cast<size_t>(i)] = g;
        g = rho * g + w * rng.gaussian();
    }
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    for (double& v : x) v -= mean;
    const double sd = population_std(x);
    const double k = sd > 1e-12 ? target_std / sd : 0.0;
    for (double& v : x) v *= k;
    return x;
}

struct MovingBox {
    double cx, cy, w, h, vx, vy;
    ObjectClass cls;
};

inline MovingBox place_box(double w, double h, ObjectClass cls, const SynthConfig& cfg, Rng& rng) {
    MovingBox b{};
    b.w = w;
    b.h = h;
    b.cls = cls;
    // drift stays within a 100 px margin over the whole clip, so boxes never
    // leave the frame and keyframe areas stay exactly on target
    const double margin = 100.0;
    b.vx = rng.uniform(-0.8, 0.8);
    b.vy = rng.uniform(-0.4, 0.4);
    b.cx = rng.uniform(w / 2 + margin, cfg.img_w - w / 2 - margin);
    b.cy = rng.uniform(h / 2 + margin, cfg.img_h - h / 2 - margin);
    return b;
}

} // namespace detail

struct GeneratedSample {
    std::vector<FrameDetections> frames;
    DynamicsWindow window;
    std::vector<double> t;
    int label = 0;
    bool moving = true;
};

inline GeneratedSample generate_sample(int label, const SynthConfig& cfg, Rng& rng) {
    const detail::Band band = detail::band_for(label);
    const double img_area = static_cast<double>(cfg.img_w) * cfg.img_h;

    std::vector<detail::MovingBox> boxes;
    double humans_area = 0.0;
    for (int i = 0; i < label; ++i) {
        const double w = rng.uniform(25.0, 45.0);
        const double h = rng.uniform(60.0, 110.0);
        const ObjectClass cls =
            rng.uniform() < 0.7 ? ObjectClass::Pedestrian : ObjectClass::Cyclist;
        boxes.push_back(detail::place_box(w, h, cls, cfg, rng));
        humans_area += w * h;
    }
    int others = 0;
    if (label == 0)
        others = rng.uniform() < 0.5 ? 1 : 0; // label 0 carries at most one box
    else
        others = label + rng.below_int(2);
    const double area_target = rng.uniform(band.area_lo, band.area_hi) * img_area;
    const double others_area = std::max(0.0, area_target - humans_area);
    for (int i = 0; i < others; ++i) {
        const double area = others_area / others;
        const double aspect = rng.uniform(0.9, 2.2);
        const double w = std::sqrt(area * aspect);
        const double h = area / w;
        const double roll = rng.uniform();
        ObjectClass cls = ObjectClass::Vehicle;
        if (roll > 0.90) cls = ObjectClass::Other;
        else if (roll > 0.75) cls = ObjectClass::TrafficLight;
        else if (roll > 0.60) cls = ObjectClass::TrafficSign;
        boxes.push_back(detail::place_box(w, h, cls, cfg, rng));
    }

    GeneratedSample out;
    out.label = label;
    out.frames.reserve(static_cast<size_t>(cfg.frames));
    for (int f = 0; f < cfg.frames; ++f) {
        FrameDetections fd;
        fd.frame = f;
        for (const detail::MovingBox& b : boxes) {
            Detection d;
            const double cx = b.cx + b.vx * f;
            const double cy = b.cy + b.vy * f;
            d.x_lb = cx - b.w / 2;
            d.x_rt = cx + b.w / 2;
            d.y_lb = cy - b.h / 2;
            d.y_rt = cy + b.h / 2;
            d.cls = b.cls;
            fd.boxes.push_back(d);
        }
        out.frames.push_back(std::move(fd));
    }

    const double dyn_target = rng.uniform(band.dyn_lo, band.dyn_hi);
    const int n = cfg.frames;
    out.window.ax = detail::smooth_noise(n, 0.55 * dyn_target, rng);
    out.window.ay = detail::smooth_noise(n, 0.45 * dyn_target, rng);

    const bool stopped = label == 0 && rng.uniform() < 0.15;
    const double base_speed = stopped ? 0.0 : rng.uniform(8.0, 25.0);
    const double speed_sigma = label == 0 ? rng.uniform(0.0, 0.05) : rng.uniform(0.3, 1.5);
    std::vector<double> wiggle = detail::smooth_noise(n, speed_sigma, rng);
    std::vector<double> yaw_noise = detail::smooth_noise(n, 0.01, rng);
    out.window.speed.resize(static_cast<size_t>(n));
    out.window.yaw_rate.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        out.window.speed[static_cast<size_t>(i)] =
            std::max(0.0, base_speed + wiggle[static_cast<size_t>(i)]);
        out.window.yaw_rate[static_cast<size_t>(i)] =
            out.window.ay[static_cast<size_t>(i)] / std::max(out.window.speed[static_cast<size_t>(i)], 0.5) +
            yaw_noise[static_cast<size_t>(i)];
    }
    out.moving = !stopped;

    out.t.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) out.t[static_cast<size_t>(i)] = static_cast<double>(i) / cfg.fps;
    return out;
}

struct GeneratedDataset {
    std::filesystem::path manifest_path;
    std::vector<ManifestEntry> entries;
};

// Writes detections/, dynamics/ and manifest.csv under out_dir. Labels are
// assigned from class_counts, shuffled once so videos mix classes, and each
// generated sample is re-scored in memory as a self-check before writing.
inline GeneratedDataset generate_synth_dataset(const SynthConfig& cfg,
                                               const std::filesystem::path& out_dir) {
    int total = 0;
    for (int c : cfg.class_counts) {
        if (c < 0) throw InvalidConfig("negative class count");
        total += c;
    }
    if (total == 0) throw InvalidConfig("synthetic dataset needs at least one sample");

    std::vector<int> labels;
    labels.reserve(static_cast<size_t>(total));
    for (int c = 0; c < kNumClasses; ++c)
        labels.insert(labels.end(), static_cast<size_t>(cfg.class_counts[static_cast<size_t>(c)]), c);
    Rng order_rng(cfg.seed);
    order_rng.shuffle(labels);

    std::error_code ec;
    std::filesystem::create_directories(out_dir / "detections", ec);
    std::filesystem::create_directories(out_dir / "dynamics", ec);

    GeneratedDataset ds;
    for (int i = 0; i < total; ++i) {
        Rng rng(detail::mix_seed(cfg.seed, static_cast<uint64_t>(i)));
        const int label = labels[static_cast<size_t>(i)];
        const GeneratedSample s = generate_sample(label, cfg, rng);

        const SampleScore check = score_sample(s.frames, s.window, cfg.img_w, cfg.img_h);
        if (check.label != label)
            throw Error("synthetic generator produced an off-band sample (wanted " +
                        std::to_string(label) + ", scored " + std::to_string(check.label) + ")");

        char name[32];
        std::snprintf(name, sizeof(name), "sample_%06d", i);
        ManifestEntry e;
        e.sample_id = name;
        e.detections_path = std::string("detections/") + name + ".jsonl";
        e.dynamics_path = std::string("dynamics/") + name + ".csv";
        e.label = label;
        e.moving = s.moving;
        char vid[24];
        std::snprintf(vid, sizeof(vid), "vid_%05d", i / 10);
        e.video_id = vid;
        e.segment = i % 10;

        write_detections_jsonl(out_dir / e.detections_path, s.frames);
        write_dynamics_csv(out_dir / e.dynamics_path, s.t, s.window);
        ds.entries.push_back(std::move(e));
    }
    ds.manifest_path = out_dir / "manifest.csv";
    write_manifest(ds.manifest_path, ds.entries);
    return ds;
}

} // namespace dscx
