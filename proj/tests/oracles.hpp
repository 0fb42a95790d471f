#pragma once

// Test-only reference implementations, kept independent of the library's
// computation paths: a literal per-pixel transcription of the heat-map
// recipe, direct sliding-window convolutions, and a central-finite-difference
// gradient checker.

#include <cmath>
#include <functional>
#include <vector>

#include "dscx/heatmap.hpp"
#include "dscx/tensor.hpp"

namespace oracle {

// Per-pixel heat map: every pixel of every box evaluates the interpolation
// and intensity formulas directly (no shared axis profiles, no sorting).
inline dscx::HeatMap heatmap(const std::vector<dscx::Detection>& dets, int w, int h) {
    dscx::HeatMap hm;
    hm.width = w;
    hm.height = h;
    hm.values.assign(static_cast<size_t>(w) * h, 0.0);
    const double a0 = -std::acos(-1.0) / 2.0;
    const double a1 = std::acos(-1.0) / 2.0;
    for (const dscx::Detection& det : dets) {
        const dscx::PixelBox box = dscx::rasterize_box(det, w, h);
        if (box.empty()) continue;
        const double n = dscx::class_weight(det.cls);
        for (int y = box.y0; y <= box.y1; ++y) {
            for (int x = box.x0; x <= box.x1; ++x) {
                const double xh =
                    box.x1 > box.x0 ? (x - box.x0) * (a1 - a0) / (box.x1 - box.x0) + a0 : 0.0;
                const double yv =
                    box.y1 > box.y0 ? (y - box.y0) * (a1 - a0) / (box.y1 - box.y0) + a0 : 0.0;
                const double zh = std::exp(std::sqrt(n) * std::cos(xh));
                const double zv = std::exp(std::sqrt(n) * std::cos(yv));
                const double z = std::sqrt(zh * zh + zv * zv);
                hm.values[static_cast<size_t>(y) * w + x] += z;
                hm.total_intensity += z;
            }
        }
    }
    return hm;
}

// Direct sliding-window cross-correlation, x[C x H x W], k[F x C x KH x KW].
inline dscx::Tensor conv2d(const dscx::Tensor& x, const dscx::Tensor& k,
                           const std::vector<double>& bias, int sy, int sx, int py, int px) {
    const int C = x.shape[0], H = x.shape[1], W = x.shape[2];
    const int F = k.shape[0], KH = k.shape[2], KW = k.shape[3];
    const int OH = (H + 2 * py - KH) / sy + 1;
    const int OW = (W + 2 * px - KW) / sx + 1;
    dscx::Tensor y({F, OH, OW});
    for (int f = 0; f < F; ++f)
        for (int oy = 0; oy < OH; ++oy)
            for (int ox = 0; ox < OW; ++ox) {
                double acc = bias[static_cast<size_t>(f)];
                for (int c = 0; c < C; ++c)
                    for (int ky = 0; ky < KH; ++ky)
                        for (int kx = 0; kx < KW; ++kx) {
                            const int iy = oy * sy - py + ky;
                            const int ix = ox * sx - px + kx;
                            if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                            acc += x.v[(static_cast<int64_t>(c) * H + iy) * W + ix] *
                                   k.v[((static_cast<int64_t>(f) * C + c) * KH + ky) * KW + kx];
                        }
                y.v[(static_cast<int64_t>(f) * OH + oy) * OW + ox] = acc;
            }
    return y;
}

inline dscx::Tensor conv1d(const dscx::Tensor& x, const dscx::Tensor& k,
                           const std::vector<double>& bias, int stride, int pad) {
    const int C = x.shape[0], L = x.shape[1];
    const int F = k.shape[0], K = k.shape[2];
    const int OL = (L + 2 * pad - K) / stride + 1;
    dscx::Tensor y({F, OL});
    for (int f = 0; f < F; ++f)
        for (int o = 0; o < OL; ++o) {
            double acc = bias[static_cast<size_t>(f)];
            for (int c = 0; c < C; ++c)
                for (int kk = 0; kk < K; ++kk) {
                    const int i = o * stride - pad + kk;
                    if (i < 0 || i >= L) continue;
                    acc += x.v[static_cast<int64_t>(c) * L + i] *
                           k.v[(static_cast<int64_t>(f) * C + c) * K + kk];
                }
            y.v[static_cast<int64_t>(f) * OL + o] = acc;
        }
    return y;
}

// Moves every parameter element to a generic point. Freshly built nets have
// zero biases, which parks ReLU pre-activations exactly on the kink wherever
// a window sees only zeros; central differences straddle the kink there no
// matter how small h gets. Offsetting all parameters puts pre-activations a
// safe distance from zero without changing what the check proves.
inline void randomize_point(const std::vector<dscx::Parameter*>& params, dscx::Rng& rng) {
    for (dscx::Parameter* p : params)
        for (double& v : p->value.v)
            v += (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.05, 0.15);
}

// Central finite differences against analytic grads already stored in each
// parameter. Error metric: |analytic - fd| / max(1, |fd|).
inline double fd_max_error(const std::vector<dscx::Parameter*>& params,
                           const std::function<double()>& loss, double h = 1e-5) {
    double worst = 0.0;
    for (dscx::Parameter* p : params) {
        for (int64_t i = 0; i < p->value.numel(); ++i) {
            const double keep = p->value.v[i];
            p->value.v[i] = keep + h;
            const double up = loss();
            p->value.v[i] = keep - h;
            const double down = loss();
            p->value.v[i] = keep;
            const double fd = (up - down) / (2.0 * h);
            const double err = std::abs(p->grad.v[i] - fd) / std::max(1.0, std::abs(fd));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

} // namespace oracle
