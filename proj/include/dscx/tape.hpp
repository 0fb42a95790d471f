#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dscx/errors.hpp"
#include "dscx/kernels.hpp"
#include "dscx/tensor.hpp"

namespace dscx {

inline int conv_extent(int in, int k, int stride, int pad) {
    if (in + 2 * pad < k || stride < 1)
        throw ShapeMismatch("convolution window does not fit the padded input");
    return (in + 2 * pad - k) / stride + 1;
}

namespace detail {

inline void im2col2d(const double* x, int C, int H, int W, int KH, int KW, int sy, int sx, int py,
                     int px, int OH, int OW, double* cols) {
    const int64_t plane = static_cast<int64_t>(OH) * OW;
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < KH; ++ky) {
            for (int kx = 0; kx < KW; ++kx) {
                double* row = cols + (static_cast<int64_t>(c) * KH * KW + ky * KW + kx) * plane;
                for (int oy = 0; oy < OH; ++oy) {
                    const int iy = oy * sy - py + ky;
                    double* dst = row + static_cast<int64_t>(oy) * OW;
                    if (iy < 0 || iy >= H) {
                        for (int ox = 0; ox < OW; ++ox) dst[ox] = 0.0;
                        continue;
                    }
                    const double* src = x + (static_cast<int64_t>(c) * H + iy) * W;
                    for (int ox = 0; ox < OW; ++ox) {
                        const int ix = ox * sx - px + kx;
                        dst[ox] = (ix >= 0 && ix < W) ? src[ix] : 0.0;
                    }
                }
            }
        }
    }
}

// Reusable per-thread im2col panels. These buffers are the largest transient
// allocations in the hot path; recycling them keeps glibc from mmap/munmap
// cycles (and the page faults they bring) on every convolution call. Both
// panels are fully overwritten before use, so reuse cannot leak state.
inline std::vector<double>& conv_scratch(int which, size_t n) {
    thread_local std::vector<double> bufs[2];
    std::vector<double>& b = bufs[which];
    if (b.size() < n) b.resize(n);
    return b;
}

inline void col2im2d_acc(const double* cols, int C, int H, int W, int KH, int KW, int sy, int sx,
                         int py, int px, int OH, int OW, double* dx) {
    const int64_t plane = static_cast<int64_t>(OH) * OW;
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < KH; ++ky) {
            for (int kx = 0; kx < KW; ++kx) {
                const double* row = cols + (static_cast<int64_t>(c) * KH * KW + ky * KW + kx) * plane;
                for (int oy = 0; oy < OH; ++oy) {
                    const int iy = oy * sy - py + ky;
                    if (iy < 0 || iy >= H) continue;
                    const double* src = row + static_cast<int64_t>(oy) * OW;
                    double* dst = dx + (static_cast<int64_t>(c) * H + iy) * W;
                    for (int ox = 0; ox < OW; ++ox) {
                        const int ix = ox * sx - px + kx;
                        if (ix >= 0 && ix < W) dst[ix] += src[ox];
                    }
                }
            }
        }
    }
}

} // namespace detail

// Reverse-accumulation tape over a fixed op vocabulary. Every op appends a
// node whose backward closure pulls this node's grad into its parents, so
// creation order is already a valid topological order. One tape serves one
// forward/backward pass for one sample; workers each own a private tape and
// parameters are only read during recording.
class Tape {
public:
    using Id = int32_t;

    Id input(Tensor t) {
        nodes_.push_back(Node{std::move(t), {}, nullptr, nullptr});
        return last();
    }

    // Leaf bound to a trainable parameter. The value is read in place (no
    // copy); grads land in the node and are harvested afterwards. Repeated
    // binds of the same parameter reuse one node.
    Id param(Parameter& p) {
        auto it = param_nodes_.find(&p);
        if (it != param_nodes_.end()) return it->second;
        nodes_.push_back(Node{{}, {}, nullptr, &p});
        param_nodes_.emplace(&p, last());
        return last();
    }

    const Tensor& val(Id id) const {
        const Node& n = node(id);
        return n.bound ? n.bound->value : n.own;
    }

    Tensor& grad(Id id) { return node(id).grad; }

    size_t size() const { return nodes_.size(); }

    Id add(Id a, Id b) {
        const Tensor& ta = val(a);
        const Tensor& tb = val(b);
        if (!ta.same_shape(tb))
            throw ShapeMismatch("add: " + ta.shape_str() + " vs " + tb.shape_str());
        Tensor out(ta.shape);
        for (int64_t i = 0; i < out.numel(); ++i) out.v[i] = ta.v[i] + tb.v[i];
        return emit(std::move(out), [a, b](Tape& t, Id self) {
            const Tensor& g = t.grad(self);
            Tensor& ga = t.grad(a);
            Tensor& gb = t.grad(b);
            for (int64_t i = 0; i < g.numel(); ++i) {
                ga.v[i] += g.v[i];
                gb.v[i] += g.v[i];
            }
        });
    }

    Id relu(Id a) {
        const Tensor& ta = val(a);
        Tensor out(ta.shape);
        for (int64_t i = 0; i < out.numel(); ++i) out.v[i] = ta.v[i] > 0.0 ? ta.v[i] : 0.0;
        return emit(std::move(out), [a](Tape& t, Id self) {
            const Tensor& g = t.grad(self);
            const Tensor& x = t.val(a);
            Tensor& ga = t.grad(a);
            for (int64_t i = 0; i < g.numel(); ++i)
                if (x.v[i] > 0.0) ga.v[i] += g.v[i];
        });
    }

    Id scale(Id a, double s) {
        const Tensor& ta = val(a);
        Tensor out(ta.shape);
        for (int64_t i = 0; i < out.numel(); ++i) out.v[i] = ta.v[i] * s;
        return emit(std::move(out), [a, s](Tape& t, Id self) {
            const Tensor& g = t.grad(self);
            Tensor& ga = t.grad(a);
            for (int64_t i = 0; i < g.numel(); ++i) ga.v[i] += s * g.v[i];
        });
    }

    // [M x K] * [K x N] -> [M x N]
    Id matmul(Id a, Id b) {
        const Tensor& ta = val(a);
        const Tensor& tb = val(b);
        require_rank(ta, 2, "matmul lhs");
        require_rank(tb, 2, "matmul rhs");
        const int M = ta.shape[0], K = ta.shape[1];
        if (tb.shape[0] != K)
            throw ShapeMismatch("matmul: " + ta.shape_str() + " vs " + tb.shape_str());
        const int N = tb.shape[1];
        Tensor out({M, N});
        kern::mm_acc(out.data(), ta.data(), tb.data(), M, K, N);
        return emit(std::move(out), [a, b, M, K, N](Tape& t, Id self) {
            const Tensor& g = t.grad(self);
            // dA += dC * B^T, dB += A^T * dC
            kern::mm_nt_acc(t.grad(a).data(), g.data(), t.val(b).data(), M, N, K);
            kern::mm_tn_acc(t.grad(b).data(), t.val(a).data(), g.data(), M, K, N);
        });
    }

    // [M x K] * [N x K]^T -> [M x N]
    Id matmul_nt(Id a, Id b) {
        const Tensor& ta = val(a);
        const Tensor& tb = val(b);
        require_rank(ta, 2, "matmul_nt lhs");
        require_rank(tb, 2, "matmul_nt rhs");
        const int M = ta.shape[0], K = ta.shape[1];
        if (tb.shape[1] != K)
            throw ShapeMismatch("matmul_nt: " + ta.shape_str() + " vs " + tb.shape_str());
        const int N = tb.shape[0];
        Tensor out({M, N});
        kern::mm_nt_acc(out.data(), ta.data(), tb.data(), M, K, N);
        return emit(std::move(out), [a, b, M, K, N](Tape& t, Id self) {
            const Tensor& g = t.grad(self);
            // dA += dC * B, dB += dC^T * A
            kern::mm_acc(t.grad(a).data(), g.data(), t.val(b).data(), M, N, K);
            kern::mm_tn_acc(t.grad(b).data(), g.data(), t.val(a).data(), M, N, K);
        });
    }

    // x[T x d_in] * w[d_in x d_out] + b[d_out] broadcast over rows
    Id dense(Id x, Id w, Id b) {
        const Tensor& tx = val(x);
        const Tensor& tw = val(w);
        const Tensor& tb = val(b);
        require_rank(tx, 2, "dense input");
        require_rank(tw, 2, "dense weight");
        require_rank(tb, 1, "dense bias");
        const int T = tx.shape[0], din = tx.shape[1];
        if (tw.shape[0] != din || tw.shape[1] != tb.shape[0])
            throw ShapeMismatch("dense: " + tx.shape_str() + " * " + tw.shape_str() + " + " +
                                tb.shape_str());
        const int dout = tw.shape[1];
        Tensor out({T, dout});
        for (int t = 0; t < T; ++t)
            for (int j = 0; j < dout; ++j) out.v[static_cast<int64_t>(t) * dout + j] = tb.v[j];
        kern::mm_acc(out.data(), tx.data(), tw.data(), T, din, dout);
        return emit(std::move(out), [x, w, b, T, din, dout](Tape& t, Id self) {
            const Tensor& g = t.grad(self);
            kern::mm_nt_acc(t.grad(x).data(), g.data(), t.val(w).data(), T, dout, din);
            kern::mm_tn_acc(t.grad(w).data(), t.val(x).data(), g.data(), T, din, dout);
            Tensor& gb = t.grad(b);
            for (int r = 0; r < T; ++r)
                for (int j = 0; j < dout; ++j) gb.v[j] += g.v[static_cast<int64_t>(r) * dout + j];
        });
    }

    // x[C x H x W] (cross-correlation) w[F x C x KH x KW], b[F]
    Id conv2d(Id x, Id w, Id b, int sy, int sx, int py, int px) {
        const Tensor& tx = val(x);
        const Tensor& tw = val(w);
        const Tensor& tb = val(b);
        require_rank(tx, 3, "conv2d input");
        require_rank(tw, 4, "conv2d kernel");
        require_rank(tb, 1, "conv2d bias");
        const int C = tx.shape[0], H = tx.shape[1], W = tx.shape[2];
        const int F = tw.shape[0], KH = tw.shape[2], KW = tw.shape[3];
        if (tw.shape[1] != C)
            throw ShapeMismatch("conv2d: channel counts disagree, input " + tx.shape_str() +
                                " kernel " + tw.shape_str());
        if (tb.shape[0] != F) throw ShapeMismatch("conv2d: bias length != filter count");
        const int OH = conv_extent(H, KH, sy, py);
        const int OW = conv_extent(W, KW, sx, px);
        const int ckk = C * KH * KW;
        const int64_t plane = static_cast<int64_t>(OH) * OW;

        std::vector<double>& cols = detail::conv_scratch(0, static_cast<size_t>(ckk) * plane);
        detail::im2col2d(tx.data(), C, H, W, KH, KW, sy, sx, py, px, OH, OW, cols.data());
        Tensor out({F, OH, OW});
        for (int f = 0; f < F; ++f) {
            double* dst = out.data() + f * plane;
            for (int64_t i = 0; i < plane; ++i) dst[i] = tb.v[f];
        }
        kern::mm_acc(out.data(), tw.data(), cols.data(), F, ckk, static_cast<int>(plane));

        return emit(std::move(out),
                    [x, w, b, sy, sx, py, px, C, H, W, F, KH, KW, OH, OW, ckk](Tape& t, Id self) {
                        const Tensor& g = t.grad(self);
                        const int64_t plane = static_cast<int64_t>(OH) * OW;
                        // cols are recomputed rather than cached on the node:
                        // the panels would dominate tape memory otherwise.
                        const size_t panel = static_cast<size_t>(ckk) * plane;
                        std::vector<double>& cols = detail::conv_scratch(0, panel);
                        detail::im2col2d(t.val(x).data(), C, H, W, KH, KW, sy, sx, py, px, OH, OW,
                                         cols.data());
                        kern::mm_nt_acc(t.grad(w).data(), g.data(), cols.data(), F,
                                        static_cast<int>(plane), ckk);
                        Tensor& gb = t.grad(b);
                        for (int f = 0; f < F; ++f) {
                            const double* src = g.data() + f * plane;
                            double acc = 0.0;
                            for (int64_t i = 0; i < plane; ++i) acc += src[i];
                            gb.v[f] += acc;
                        }
                        std::vector<double>& dcols = detail::conv_scratch(1, panel);
                        std::fill(dcols.begin(), dcols.begin() + static_cast<int64_t>(panel), 0.0);
                        kern::mm_tn_acc(dcols.data(), t.val(w).data(), g.data(), F, ckk,
                                        static_cast<int>(plane));
                        detail::col2im2d_acc(dcols.data(), C, H, W, KH, KW, sy, sx, py, px, OH, OW,
                                             t.grad(x).data());
                    });
    }

    // x[C x L], w[F x C x K], b[F]; 1D analogue of conv2d
    Id conv1d(Id x, Id w, Id b, int stride, int pad) {
        const Tensor& tx = val(x);
        const Tensor& tw = val(w);
        require_rank(tx, 2, "conv1d input");
        require_rank(tw, 3, "conv1d kernel");
        const int C = tx.shape[0], L = tx.shape[1];
        const int F = tw.shape[0], K = tw.shape[2];
        if (tw.shape[1] != C)
            throw ShapeMismatch("conv1d: channel counts disagree, input " + tx.shape_str() +
                                " kernel " + tw.shape_str());
        const Tensor& tb = val(b);
        if (tb.shape != std::vector<int>{F})
            throw ShapeMismatch("conv1d: bias length != filter count");
        // [C x L] shares its flat layout with [C x 1 x L], so the 2D
        // im2col/col2im path is reused with a unit height.
        const int OL = conv_extent(L, K, stride, pad);
        const int ckk = C * K;
        std::vector<double>& cols = detail::conv_scratch(0, static_cast<size_t>(ckk) * OL);
        detail::im2col2d(tx.data(), C, 1, L, 1, K, 1, stride, 0, pad, 1, OL, cols.data());
        Tensor out({F, OL});
        for (int f = 0; f < F; ++f)
            for (int i = 0; i < OL; ++i) out.v[static_cast<int64_t>(f) * OL + i] = tb.v[f];
        kern::mm_acc(out.data(), tw.data(), cols.data(), F, ckk, OL);
        return emit(std::move(out), [x, w, b, stride, pad, C, L, F, K, OL, ckk](Tape& t, Id self) {
            const Tensor& g = t.grad(self);
            const size_t panel = static_cast<size_t>(ckk) * OL;
            std::vector<double>& cols = detail::conv_scratch(0, panel);
            detail::im2col2d(t.val(x).data(), C, 1, L, 1, K, 1, stride, 0, pad, 1, OL, cols.data());
            kern::mm_nt_acc(t.grad(w).data(), g.data(), cols.data(), F, OL, ckk);
            Tensor& gb = t.grad(b);
            for (int f = 0; f < F; ++f) {
                double acc = 0.0;
                for (int i = 0; i < OL; ++i) acc += g.v[static_cast<int64_t>(f) * OL + i];
                gb.v[f] += acc;
            }
            std::vector<double>& dcols = detail::conv_scratch(1, panel);
            std::fill(dcols.begin(), dcols.begin() + static_cast<int64_t>(panel), 0.0);
            kern::mm_tn_acc(dcols.data(), t.val(w).data(), g.data(), F, ckk, OL);
            detail::col2im2d_acc(dcols.data(), C, 1, L, 1, K, 1, stride, 0, pad, 1, OL,
                                 t.grad(x).data());
        });
    }

    // Per-row: (x - mean) / sqrt(var + eps) * gain + shift
    Id layer_norm(Id x, Id gain, Id shift, double eps = 1e-5) {
        const Tensor& tx = val(x);
        require_rank(tx, 2, "layer_norm input");
        const int T = tx.shape[0], d = tx.shape[1];
        const Tensor& tg = val(gain);
        const Tensor& ts = val(shift);
        if (tg.shape != std::vector<int>{d} || ts.shape != std::vector<int>{d})
            throw ShapeMismatch("layer_norm: gain/shift must be [" + std::to_string(d) + "]");
        Tensor out({T, d});
        for (int r = 0; r < T; ++r) {
            const double* xr = tx.data() + static_cast<int64_t>(r) * d;
            double* yr = out.data() + static_cast<int64_t>(r) * d;
            double mean = 0.0;
            for (int j = 0; j < d; ++j) mean += xr[j];
            mean /= d;
            double var = 0.0;
            for (int j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
            var /= d;
            const double inv = 1.0 / std::sqrt(var + eps);
            for (int j = 0; j < d; ++j) yr[j] = (xr[j] - mean) * inv * tg.v[j] + ts.v[j];
        }
        return emit(std::move(out), [x, gain, shift, eps, T, d](Tape& t, Id self) {
            const Tensor& g = t.grad(self);
            const Tensor& tx = t.val(x);
            const Tensor& tg = t.val(gain);
            Tensor& gx = t.grad(x);
            Tensor& gg = t.grad(gain);
            Tensor& gs = t.grad(shift);
            std::vector<double> xhat(d);
            for (int r = 0; r < T; ++r) {
                const double* xr = tx.data() + static_cast<int64_t>(r) * d;
                const double* gr = g.data() + static_cast<int64_t>(r) * d;
                double* gxr = gx.data() + static_cast<int64_t>(r) * d;
                double mean = 0.0;
                for (int j = 0; j < d; ++j) mean += xr[j];
                mean /= d;
                double var = 0.0;
                for (int j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
                var /= d;
                const double inv = 1.0 / std::sqrt(var + eps);
                double m1 = 0.0, m2 = 0.0;
                for (int j = 0; j < d; ++j) {
                    xhat[j] = (xr[j] - mean) * inv;
                    const double dxh = gr[j] * tg.v[j];
                    m1 += dxh;
                    m2 += dxh * xhat[j];
                    gg.v[j] += gr[j] * xhat[j];
                    gs.v[j] += gr[j];
                }
                m1 /= d;
                m2 /= d;
                for (int j = 0; j < d; ++j)
                    gxr[j] += inv * (gr[j] * tg.v[j] - m1 - xhat[j] * m2);
            }
        });
    }

    // Row-wise softmax with max subtraction
    Id softmax_rows(Id x) {
        const Tensor& tx = val(x);
        require_rank(tx, 2, "softmax input");
        const int T = tx.shape[0], d = tx.shape[1];
        Tensor out({T, d});
        for (int r = 0; r < T; ++r) {
            const double* xr = tx.data() + static_cast<int64_t>(r) * d;
            double* yr = out.data() + static_cast<int64_t>(r) * d;
            double mx = xr[0];
            for (int j = 1; j < d; ++j) mx = std::max(mx, xr[j]);
            double sum = 0.0;
            for (int j = 0; j < d; ++j) {
                yr[j] = std::exp(xr[j] - mx);
                sum += yr[j];
            }
            const double inv = 1.0 / sum;
            for (int j = 0; j < d; ++j) yr[j] *= inv;
        }
        return emit(std::move(out), [x, T, d](Tape& t, Id self) {
            const Tensor& y = t.val(self);
            const Tensor& g = t.grad(self);
            Tensor& gx = t.grad(x);
            for (int r = 0; r < T; ++r) {
                const double* yr = y.data() + static_cast<int64_t>(r) * d;
                const double* gr = g.data() + static_cast<int64_t>(r) * d;
                double* gxr = gx.data() + static_cast<int64_t>(r) * d;
                double s = 0.0;
                for (int j = 0; j < d; ++j) s += gr[j] * yr[j];
                for (int j = 0; j < d; ++j) gxr[j] += yr[j] * (gr[j] - s);
            }
        });
    }

    // [T x d] -> [1 x d]
    Id mean_rows(Id x) {
        const Tensor& tx = val(x);
        require_rank(tx, 2, "mean_rows input");
        const int T = tx.shape[0], d = tx.shape[1];
        Tensor out({1, d});
        for (int r = 0; r < T; ++r)
            for (int j = 0; j < d; ++j) out.v[j] += tx.v[static_cast<int64_t>(r) * d + j];
        const double inv = 1.0 / T;
        for (int j = 0; j < d; ++j) out.v[j] *= inv;
        return emit(std::move(out), [x, T, d](Tape& t, Id self) {
            const Tensor& g = t.grad(self);
            Tensor& gx = t.grad(x);
            const double inv = 1.0 / T;
            for (int r = 0; r < T; ++r)
                for (int j = 0; j < d; ++j) gx.v[static_cast<int64_t>(r) * d + j] += g.v[j] * inv;
        });
    }

    // Concatenates the flat buffers of the parts into out_shape. Covers both
    // channel concatenation ([C x H x W] along C) and row stacking.
    Id concat_flat(const std::vector<Id>& parts, std::vector<int> out_shape) {
        if (parts.empty()) throw ShapeMismatch("concat_flat: no parts");
        int64_t total = 0;
        for (Id p : parts) total += val(p).numel();
        Tensor out(std::move(out_shape));
        if (out.numel() != total)
            throw ShapeMismatch("concat_flat: parts do not fill " + out.shape_str());
        int64_t off = 0;
        for (Id p : parts) {
            const Tensor& tp = val(p);
            std::copy(tp.v.begin(), tp.v.end(), out.v.begin() + off);
            off += tp.numel();
        }
        return emit(std::move(out), [parts](Tape& t, Id self) {
            const Tensor& g = t.grad(self);
            int64_t off = 0;
            for (Id p : parts) {
                Tensor& gp = t.grad(p);
                for (int64_t i = 0; i < gp.numel(); ++i) gp.v[i] += g.v[off + i];
                off += gp.numel();
            }
        });
    }

    Id reshape(Id x, std::vector<int> out_shape) {
        const Tensor& tx = val(x);
        Tensor out(std::move(out_shape), tx.v);
        return emit(std::move(out), [x](Tape& t, Id self) {
            const Tensor& g = t.grad(self);
            Tensor& gx = t.grad(x);
            for (int64_t i = 0; i < g.numel(); ++i) gx.v[i] += g.v[i];
        });
    }

    // [R x C] -> [C x R]
    Id transpose2d(Id x) {
        const Tensor& tx = val(x);
        require_rank(tx, 2, "transpose input");
        const int R = tx.shape[0], C = tx.shape[1];
        Tensor out({C, R});
        for (int r = 0; r < R; ++r)
            for (int c = 0; c < C; ++c)
                out.v[static_cast<int64_t>(c) * R + r] = tx.v[static_cast<int64_t>(r) * C + c];
        return emit(std::move(out), [x, R, C](Tape& t, Id self) {
            const Tensor& g = t.grad(self);
            Tensor& gx = t.grad(x);
            for (int r = 0; r < R; ++r)
                for (int c = 0; c < C; ++c)
                    gx.v[static_cast<int64_t>(r) * C + c] += g.v[static_cast<int64_t>(c) * R + r];
        });
    }

    // scalar sum of all elements
    Id sum_all(Id x) {
        const Tensor& tx = val(x);
        Tensor out({1});
        for (double xv : tx.v) out.v[0] += xv;
        return emit(std::move(out), [x](Tape& t, Id self) {
            const double g = t.grad(self).v[0];
            Tensor& gx = t.grad(x);
            for (int64_t i = 0; i < gx.numel(); ++i) gx.v[i] += g;
        });
    }

    // -weight * log softmax(logits)[label]; logits [1 x C] or [C]
    Id cross_entropy(Id logits, int label, double weight = 1.0) {
        const Tensor& tl = val(logits);
        const int C = static_cast<int>(tl.numel());
        if (tl.shape.size() > 2 || (tl.shape.size() == 2 && tl.shape[0] != 1))
            throw ShapeMismatch("cross_entropy expects a single logit row");
        if (label < 0 || label >= C)
            throw InvalidLabel("label " + std::to_string(label) + " outside [0, " +
                               std::to_string(C) + ")");
        double mx = tl.v[0];
        for (int j = 1; j < C; ++j) mx = std::max(mx, tl.v[j]);
        double sum = 0.0;
        for (int j = 0; j < C; ++j) sum += std::exp(tl.v[j] - mx);
        const double lse = mx + std::log(sum);
        Tensor out({1});
        out.v[0] = weight * (lse - tl.v[label]);
        return emit(std::move(out), [logits, label, weight, C](Tape& t, Id self) {
            const double gs = t.grad(self).v[0];
            const Tensor& tl = t.val(logits);
            Tensor& gl = t.grad(logits);
            double mx = tl.v[0];
            for (int j = 1; j < C; ++j) mx = std::max(mx, tl.v[j]);
            double sum = 0.0;
            for (int j = 0; j < C; ++j) sum += std::exp(tl.v[j] - mx);
            for (int j = 0; j < C; ++j) {
                const double p = std::exp(tl.v[j] - mx) / sum;
                gl.v[j] += gs * weight * (p - (j == label ? 1.0 : 0.0));
            }
        });
    }

    // Seeds d(loss)/d(loss) = seed and sweeps the tape in reverse creation
    // order, accumulating into every node's grad buffer.
    void backward(Id loss, double seed = 1.0) {
        if (nodes_.empty()) throw GraphNotRecorded("backward on an empty tape");
        if (loss < 0 || static_cast<size_t>(loss) >= nodes_.size())
            throw GraphNotRecorded("backward target was not recorded on this tape");
        if (val(loss).numel() != 1) throw ShapeMismatch("backward target must be scalar");
        for (Id id = 0; id <= loss; ++id) {
            Node& n = nodes_[static_cast<size_t>(id)];
            n.grad = Tensor(val(id).shape);
        }
        nodes_[static_cast<size_t>(loss)].grad.v[0] = seed;
        for (Id id = loss; id >= 0; --id) {
            Node& n = nodes_[static_cast<size_t>(id)];
            if (n.back) n.back(*this, id);
        }
    }

    // Single-owner convenience: fold leaf grads into the bound parameters.
    void add_param_grads(double s = 1.0) {
        for (auto& [p, id] : param_nodes_) {
            const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
            if (g.numel() == 0) continue;
            for (int64_t i = 0; i < g.numel(); ++i) p->grad.v[i] += s * g.v[i];
        }
    }

    // Harvest leaf grads into an accumulator indexed by Parameter::pid
    // (thread-private; reduced later in a fixed order).
    void collect_param_grads(std::vector<Tensor>& acc, double s) const {
        for (const auto& [p, id] : param_nodes_) {
            const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
            if (g.numel() == 0) continue;
            if (p->pid < 0 || static_cast<size_t>(p->pid) >= acc.size())
                throw GraphNotRecorded("parameter has no pid slot");
            Tensor& dst = acc[static_cast<size_t>(p->pid)];
            if (dst.numel() == 0) dst = Tensor(g.shape);
            for (int64_t i = 0; i < g.numel(); ++i) dst.v[i] += s * g.v[i];
        }
    }

    void reset() {
        nodes_.clear();
        param_nodes_.clear();
    }

private:
    struct Node {
        Tensor own;
        Tensor grad;
        std::function<void(Tape&, Id)> back;
        Parameter* bound = nullptr;
    };

    Node& node(Id id) {
        if (id < 0 || static_cast<size_t>(id) >= nodes_.size())
            throw GraphNotRecorded("node id " + std::to_string(id) + " not on tape");
        return nodes_[static_cast<size_t>(id)];
    }
    const Node& node(Id id) const { return const_cast<Tape*>(this)->node(id); }

    Id last() const { return static_cast<Id>(nodes_.size()) - 1; }

    template <typename F>
    Id emit(Tensor value, F&& back) {
        nodes_.push_back(Node{std::move(value), {}, std::forward<F>(back), nullptr});
        return last();
    }

    static void require_rank(const Tensor& t, size_t rank, const char* what) {
        if (t.shape.size() != rank)
            throw ShapeMismatch(std::string(what) + ": expected rank " + std::to_string(rank) +
                                ", got " + t.shape_str());
    }

    std::vector<Node> nodes_;
    std::unordered_map<Parameter*, Id> param_nodes_;
};

// Stable softmax over a plain vector (inference-side helper).
inline std::vector<double> softmax_vec(const std::vector<double>& x) {
    std::vector<double> y(x.size());
    double mx = x.empty() ? 0.0 : x[0];
    for (double v : x) mx = std::max(mx, v);
    double sum = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        y[i] = std::exp(x[i] - mx);
        sum += y[i];
    }
    for (double& v : y) v /= sum;
    return y;
}

} // namespace dscx
