#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dscx/layers.hpp"
#include "dscx/tape.hpp"

namespace dscx {

// Single-head scaled attention. Q/K/V project tokens [T x d_model] to
// [T x d_k]; scores are divided by a fixed scale divisor (8). When d_k
// differs from d_model an output projection restores the token width so the
// residual add typechecks; with square projections none is needed.
struct AttentionLayer {
    Parameter q, k, v;
    std::optional<Parameter> out_proj;
    double scale_divisor = 8.0;
    bool use_softmax = true; // ablation switch: raw scores as weights when off

    AttentionLayer() = default;
    AttentionLayer(const std::string& name, int d_model, int d_k, double divisor, bool softmax,
                   Rng& rng)
        : q(name + ".q", Tensor({d_model, d_k})),
          k(name + ".k", Tensor({d_model, d_k})),
          v(name + ".v", Tensor({d_model, d_k})),
          scale_divisor(divisor),
          use_softmax(softmax) {
        glorot_init(q.value, d_model, d_k, rng);
        glorot_init(k.value, d_model, d_k, rng);
        glorot_init(v.value, d_model, d_k, rng);
        if (d_k != d_model) {
            out_proj.emplace(name + ".out", Tensor({d_k, d_model}));
            glorot_init(out_proj->value, d_k, d_model, rng);
        }
    }

    // Intermediate node ids, exposed so tests can probe scores and weights.
    struct Trace {
        Tape::Id q_out, k_out, v_out, scores, weights, out;
    };

    Trace apply(Tape& t, Tape::Id x) {
        Trace tr{};
        tr.q_out = t.matmul(x, t.param(q));
        tr.k_out = t.matmul(x, t.param(k));
        tr.v_out = t.matmul(x, t.param(v));
        tr.scores = t.scale(t.matmul_nt(tr.q_out, tr.k_out), 1.0 / scale_divisor);
        tr.weights = use_softmax ? t.softmax_rows(tr.scores) : tr.scores;
        tr.out = t.matmul(tr.weights, tr.v_out);
        if (out_proj) tr.out = t.matmul(tr.out, t.param(*out_proj));
        return tr;
    }

    void collect(std::vector<Parameter*>& out) {
        out.push_back(&q);
        out.push_back(&k);
        out.push_back(&v);
        if (out_proj) out.push_back(&*out_proj);
    }
};

// Attention + add&norm, then a 3-layer MLP + add&norm. A block whose MLP
// output width differs from d_model (the stack's final block) emits the MLP
// output directly; the second residual cannot be formed across the width
// change.
struct TransformerBlock {
    AttentionLayer attn;
    LayerNormLayer norm1, norm2;
    DenseLayer fc1, fc2, fc3;
    int d_model = 0, out_dim = 0;

    TransformerBlock() = default;
    TransformerBlock(const std::string& name, int d_model_, int d_k, int mlp_hidden, int out_dim_,
                     double divisor, bool softmax, Rng& rng)
        : attn(name + ".attn", d_model_, d_k, divisor, softmax, rng),
          norm1(name + ".norm1", d_model_),
          norm2(name + ".norm2", d_model_),
          fc1(name + ".fc1", d_model_, mlp_hidden, rng),
          fc2(name + ".fc2", mlp_hidden, mlp_hidden, rng),
          fc3(name + ".fc3", mlp_hidden, out_dim_, rng),
          d_model(d_model_),
          out_dim(out_dim_) {}

    Tape::Id apply(Tape& t, Tape::Id tokens) {
        const Tape::Id attended = attn.apply(t, tokens).out;
        const Tape::Id x1 = norm1.apply(t, t.add(tokens, attended));
        Tape::Id f = fc1.apply(t, x1);
        f = t.relu(f);
        f = fc2.apply(t, f);
        f = t.relu(f);
        f = fc3.apply(t, f);
        if (out_dim != d_model) return f;
        return norm2.apply(t, t.add(x1, f));
    }

    void collect(std::vector<Parameter*>& out) {
        attn.collect(out);
        norm1.collect(out);
        norm2.collect(out);
        fc1.collect(out);
        fc2.collect(out);
        fc3.collect(out);
    }
};

struct EncoderConfig {
    int tokens = 12;
    int d_model = 576;
    int d_k = 64;
    int mlp_hidden = 128;
    int layers = 6;
    int out_dim = 200;
    double scale_divisor = 8.0;
    bool softmax = true;
};

// Stack of transformer blocks over a fixed token count. Learned position
// embeddings are added first; blocks 1..L-1 preserve d_model and the final
// block's MLP widens to out_dim; tokens are then mean-pooled to [1 x out_dim].
struct EncoderStack {
    EncoderConfig cfg;
    Parameter pos;
    std::vector<TransformerBlock> blocks;

    EncoderStack() = default;
    EncoderStack(const std::string& name, const EncoderConfig& c, Rng& rng)
        : cfg(c), pos(name + ".pos", Tensor({c.tokens, c.d_model})) {
        blocks.reserve(static_cast<size_t>(c.layers));
        for (int i = 0; i < c.layers; ++i) {
            const int out = (i == c.layers - 1) ? c.out_dim : c.d_model;
            blocks.emplace_back(name + ".block" + std::to_string(i + 1), c.d_model, c.d_k,
                                c.mlp_hidden, out, c.scale_divisor, c.softmax, rng);
        }
    }

    Tape::Id encode(Tape& t, Tape::Id tokens) {
        const Tensor& tt = t.val(tokens);
        if (tt.shape != std::vector<int>{cfg.tokens, cfg.d_model})
            throw ShapeMismatch("encoder expects [" + std::to_string(cfg.tokens) + "x" +
                                std::to_string(cfg.d_model) + "], got " + tt.shape_str());
        Tape::Id x = t.add(tokens, t.param(pos));
        for (TransformerBlock& b : blocks) x = b.apply(t, x);
        return t.mean_rows(x);
    }

    void collect(std::vector<Parameter*>& out) {
        out.push_back(&pos);
        for (TransformerBlock& b : blocks) b.collect(out);
    }
};

} // namespace dscx
