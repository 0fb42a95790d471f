#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dscx/errors.hpp"
#include "dscx/tensor.hpp"

namespace dscx {

// Four synchronized vehicle-dynamics channels resampled to a fixed grid
// (default 120 points over 4 s, mirroring the per-sample frame count).
struct DynamicsWindow {
    std::vector<double> ax;       // longitudinal acceleration, m/s^2
    std::vector<double> speed;    // m/s
    std::vector<double> ay;       // lateral acceleration, m/s^2
    std::vector<double> yaw_rate; // rad/s

    int length() const { return static_cast<int>(ax.size()); }

    void check_lengths() const {
        const size_t n = ax.size();
        if (speed.size() != n || ay.size() != n || yaw_rate.size() != n)
            throw LengthMismatch("dynamics channels have differing lengths");
    }

    const std::vector<double>& channel(int i) const {
        switch (i) {
            case 0: return ax;
            case 1: return speed;
            case 2: return ay;
            default: return yaw_rate;
        }
    }
    std::vector<double>& channel(int i) {
        return const_cast<std::vector<double>&>(static_cast<const DynamicsWindow*>(this)->channel(i));
    }

    // [4 x L] tensor, channel order ax, speed, ay, yaw_rate
    Tensor to_tensor() const {
        check_lengths();
        Tensor t({4, length()});
        for (int c = 0; c < 4; ++c)
            std::copy(channel(c).begin(), channel(c).end(), t.v.begin() + static_cast<int64_t>(c) * length());
        return t;
    }
};

struct ChannelStats {
    double mean = 0.0;
    double stdev = 1.0;
};

struct DynNormStats {
    ChannelStats ch[4];
};

namespace detail {

inline std::vector<double> resample_linear(const std::vector<double>& t,
                                           const std::vector<double>& y, int n, double duration) {
    std::vector<double> out(static_cast<size_t>(n));
    const double dt = duration / static_cast<double>(n);
    size_t k = 0;
    for (int i = 0; i < n; ++i) {
        const double ti = dt * static_cast<double>(i);
        if (ti <= t.front()) {
            out[static_cast<size_t>(i)] = y.front();
            continue;
        }
        if (ti >= t.back()) {
            out[static_cast<size_t>(i)] = y.back();
            continue;
        }
        while (k + 1 < t.size() && t[k + 1] < ti) ++k;
        const double span = t[k + 1] - t[k];
        const double w = span > 0.0 ? (ti - t[k]) / span : 0.0;
        out[static_cast<size_t>(i)] = y[k] + w * (y[k + 1] - y[k]);
    }
    return out;
}

} // namespace detail

// CSV with header `t,ax,ay,yaw_rate,speed`, t in seconds from sample start.
// Rows with non-finite fields are dropped; the remainder is sorted by t and
// linearly resampled onto the target grid (clamped at the ends).
inline DynamicsWindow read_dynamics_csv(const std::filesystem::path& path, int target_len = 120,
                                        double duration = 4.0) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dynamics file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty dynamics file");
    auto strip = [](std::string s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
        return s;
    };
    if (strip(line) != "t,ax,ay,yaw_rate,speed")
        throw ParseError(path.string() + ": expected header 't,ax,ay,yaw_rate,speed'");

    struct Row {
        double t, ax, ay, yaw, speed;
    };
    std::vector<Row> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (strip(line).empty()) continue;
        std::istringstream ss(line);
        Row r{};
        char c1, c2, c3, c4;
        if (!(ss >> r.t >> c1 >> r.ax >> c2 >> r.ay >> c3 >> r.yaw >> c4 >> r.speed) || c1 != ',' ||
            c2 != ',' || c3 != ',' || c4 != ',')
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad CSV row");
        if (!std::isfinite(r.t) || !std::isfinite(r.ax) || !std::isfinite(r.ay) ||
            !std::isfinite(r.yaw) || !std::isfinite(r.speed))
            continue; // ingestion cleaning: drop non-finite rows
        rows.push_back(r);
    }
    if (rows.empty()) throw ParseError(path.string() + ": no usable dynamics rows");
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });

    std::vector<double> t, ax, ay, yaw, speed;
    t.reserve(rows.size());
    for (const Row& r : rows) {
        t.push_back(r.t);
        ax.push_back(r.ax);
        ay.push_back(r.ay);
        yaw.push_back(r.yaw);
        speed.push_back(r.speed);
    }
    DynamicsWindow w;
    w.ax = detail::resample_linear(t, ax, target_len, duration);
    w.ay = detail::resample_linear(t, ay, target_len, duration);
    w.yaw_rate = detail::resample_linear(t, yaw, target_len, duration);
    w.speed = detail::resample_linear(t, speed, target_len, duration);
    return w;
}

inline void write_dynamics_csv(const std::filesystem::path& path, const std::vector<double>& t,
                               const DynamicsWindow& w) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "t,ax,ay,yaw_rate,speed\n";
    char buf[192];
    for (size_t i = 0; i < t.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f,%.6f\n", t[i], w.ax[i], w.ay[i],
                      w.yaw_rate[i], w.speed[i]);
        out << buf;
    }
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// Pooled per-channel moments over a training split (population stdev).
inline DynNormStats compute_dyn_stats(const std::vector<const DynamicsWindow*>& windows) {
    DynNormStats stats;
    for (int c = 0; c < 4; ++c) {
        double sum = 0.0, sum2 = 0.0;
        int64_t n = 0;
        for (const DynamicsWindow* w : windows) {
            for (double x : w->channel(c)) {
                sum += x;
                sum2 += x * x;
                ++n;
            }
        }
        if (n == 0) continue;
        const double mean = sum / static_cast<double>(n);
        const double var = std::max(0.0, sum2 / static_cast<double>(n) - mean * mean);
        stats.ch[c].mean = mean;
        stats.ch[c].stdev = std::sqrt(var);
    }
    return stats;
}

// (x - mean) / stdev per channel; a nearly constant channel (stdev < 1e-8)
// maps to zeros.
inline DynamicsWindow normalize_window(const DynamicsWindow& raw, const DynNormStats& stats) {
    raw.check_lengths();
    DynamicsWindow out = raw;
    for (int c = 0; c < 4; ++c) {
        const double mean = stats.ch[c].mean;
        const double sd = stats.ch[c].stdev;
        for (double& x : out.channel(c)) x = sd < 1e-8 ? 0.0 : (x - mean) / sd;
    }
    return out;
}

} // namespace dscx
