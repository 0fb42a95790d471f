#pragma once

#include <string>
#include <vector>

#include "dscx/random.hpp"
#include "dscx/tape.hpp"
#include "dscx/tensor.hpp"

namespace dscx {

struct DenseLayer {
    Parameter w, b;

    DenseLayer() = default;
    DenseLayer(const std::string& name, int d_in, int d_out, Rng& rng)
        : w(name + ".w", Tensor({d_in, d_out})), b(name + ".b", Tensor({d_out})) {
        glorot_init(w.value, d_in, d_out, rng);
    }

    Tape::Id apply(Tape& t, Tape::Id x) { return t.dense(x, t.param(w), t.param(b)); }

    void collect(std::vector<Parameter*>& out) {
        out.push_back(&w);
        out.push_back(&b);
    }
};

struct Conv2dLayer {
    Parameter w, b;
    int sy = 1, sx = 1, py = 0, px = 0;

    Conv2dLayer() = default;
    Conv2dLayer(const std::string& name, int in_ch, int out_ch, int kh, int kw, int stride_y,
                int stride_x, int pad_y, int pad_x, Rng& rng)
        : w(name + ".w", Tensor({out_ch, in_ch, kh, kw})),
          b(name + ".b", Tensor({out_ch})),
          sy(stride_y),
          sx(stride_x),
          py(pad_y),
          px(pad_x) {
        glorot_init(w.value, in_ch * kh * kw, out_ch * kh * kw, rng);
    }

    Tape::Id apply(Tape& t, Tape::Id x) {
        return t.conv2d(x, t.param(w), t.param(b), sy, sx, py, px);
    }

    void collect(std::vector<Parameter*>& out) {
        out.push_back(&w);
        out.push_back(&b);
    }
};

struct Conv1dLayer {
    Parameter w, b;
    int stride = 1, pad = 0;

    Conv1dLayer() = default;
    Conv1dLayer(const std::string& name, int in_ch, int out_ch, int k, int stride_, int pad_,
                Rng& rng)
        : w(name + ".w", Tensor({out_ch, in_ch, k})),
          b(name + ".b", Tensor({out_ch})),
          stride(stride_),
          pad(pad_) {
        glorot_init(w.value, in_ch * k, out_ch * k, rng);
    }

    Tape::Id apply(Tape& t, Tape::Id x) { return t.conv1d(x, t.param(w), t.param(b), stride, pad); }

    void collect(std::vector<Parameter*>& out) {
        out.push_back(&w);
        out.push_back(&b);
    }
};

struct LayerNormLayer {
    Parameter gain, shift;
    double eps = 1e-5;

    LayerNormLayer() = default;
    LayerNormLayer(const std::string& name, int d)
        : gain(name + ".gain", Tensor({d})), shift(name + ".shift", Tensor({d})) {
        gain.value.fill(1.0);
    }

    Tape::Id apply(Tape& t, Tape::Id x) {
        return t.layer_norm(x, t.param(gain), t.param(shift), eps);
    }

    void collect(std::vector<Parameter*>& out) {
        out.push_back(&gain);
        out.push_back(&shift);
    }
};

} // namespace dscx
