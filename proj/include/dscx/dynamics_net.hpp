#pragma once

#include <string>
#include <vector>

#include "dscx/dynamics.hpp"
#include "dscx/encoder.hpp"
#include "dscx/layers.hpp"
#include "dscx/tape.hpp"

namespace dscx {

struct DynamicsNetConfig {
    int in_len = 120;
    int channels[3] = {16, 32, 64};
    int kernels[3] = {7, 5, 3};
    int mlp_hidden = 64;
    int enc_layers = 6;
    int out_dim = 200;
    double scale_divisor = 8.0;
    bool softmax = true;
};

// 1D smoothing/feature convolutions over the 4-channel window followed by a
// transformer encoder over the resulting tokens. All kernel and projection
// matrices on this path are one-dimensional in their sliding axis. The
// stride-2 stack also plays the denoising role: each stage halves the
// sampling rate while mixing neighbours.
struct DynamicsExtractor {
    DynamicsNetConfig cfg;
    Conv1dLayer conv1, conv2, conv3;
    EncoderStack encoder;

    DynamicsExtractor() = default;
    DynamicsExtractor(const std::string& name, const DynamicsNetConfig& c, Rng& rng)
        : cfg(c),
          conv1(name + ".conv1", 4, c.channels[0], c.kernels[0], 2, (c.kernels[0] - 1) / 2, rng),
          conv2(name + ".conv2", c.channels[0], c.channels[1], c.kernels[1], 2,
                (c.kernels[1] - 1) / 2, rng),
          conv3(name + ".conv3", c.channels[1], c.channels[2], c.kernels[2], 2,
                (c.kernels[2] - 1) / 2, rng),
          encoder(name + ".enc", make_encoder_config(c), rng) {}

    static int token_count(const DynamicsNetConfig& c) {
        int len = c.in_len;
        for (int i = 0; i < 3; ++i) len = conv_extent(len, c.kernels[i], 2, (c.kernels[i] - 1) / 2);
        return len;
    }

    static EncoderConfig make_encoder_config(const DynamicsNetConfig& c) {
        EncoderConfig e;
        e.tokens = token_count(c);
        e.d_model = c.channels[2];
        e.d_k = c.channels[2]; // square projections; no output projection needed
        e.mlp_hidden = c.mlp_hidden;
        e.layers = c.enc_layers;
        e.out_dim = c.out_dim;
        e.scale_divisor = c.scale_divisor;
        e.softmax = c.softmax;
        return e;
    }

    // window tensor [4 x L] -> [1 x out_dim]
    Tape::Id apply(Tape& t, Tape::Id window) {
        const Tensor& tw = t.val(window);
        if (tw.shape != std::vector<int>{4, cfg.in_len})
            throw ShapeMismatch("dynamics extractor expects [4x" + std::to_string(cfg.in_len) +
                                "], got " + tw.shape_str());
        Tape::Id y = t.relu(conv1.apply(t, window));
        y = t.relu(conv2.apply(t, y));
        y = t.relu(conv3.apply(t, y));      // [C x T]
        const Tape::Id tokens = t.transpose2d(y); // [T x C]
        return encoder.encode(t, tokens);
    }

    void collect(std::vector<Parameter*>& out) {
        conv1.collect(out);
        conv2.collect(out);
        conv3.collect(out);
        encoder.collect(out);
    }
};

} // namespace dscx
