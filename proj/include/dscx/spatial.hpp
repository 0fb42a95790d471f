#pragma once

#include <string>
#include <vector>

#include "dscx/heatmap.hpp"
#include "dscx/layers.hpp"
#include "dscx/tape.hpp"

namespace dscx {

// Four parallel same-padding convolutions ([3x1], [1x3], [3x3], [5x5]),
// channel concatenation, a 1x1 merge, and a residual skip (1x1 projection
// when the channel counts differ). Branches are ReLU-activated; the merged
// sum passes a final ReLU.
struct InceptionBlock {
    Conv2dLayer b3x1, b1x3, b3x3, b5x5, merge;
    std::optional<Conv2dLayer> proj;
    int in_ch = 0, out_ch = 0;

    InceptionBlock() = default;
    InceptionBlock(const std::string& name, int in_ch_, int branch_ch, int out_ch_, Rng& rng)
        : b3x1(name + ".b3x1", in_ch_, branch_ch, 3, 1, 1, 1, 1, 0, rng),
          b1x3(name + ".b1x3", in_ch_, branch_ch, 1, 3, 1, 1, 0, 1, rng),
          b3x3(name + ".b3x3", in_ch_, branch_ch, 3, 3, 1, 1, 1, 1, rng),
          b5x5(name + ".b5x5", in_ch_, branch_ch, 5, 5, 1, 1, 2, 2, rng),
          merge(name + ".merge", 4 * branch_ch, out_ch_, 1, 1, 1, 1, 0, 0, rng),
          in_ch(in_ch_),
          out_ch(out_ch_) {
        if (in_ch_ != out_ch_) proj.emplace(name + ".proj", in_ch_, out_ch_, 1, 1, 1, 1, 0, 0, rng);
    }

    Tape::Id apply(Tape& t, Tape::Id x) {
        const Tensor& tx = t.val(x);
        const int h = tx.shape[1], w = tx.shape[2];
        std::vector<Tape::Id> branches{t.relu(b3x1.apply(t, x)), t.relu(b1x3.apply(t, x)),
                                       t.relu(b3x3.apply(t, x)), t.relu(b5x5.apply(t, x))};
        const int bc = t.val(branches[0]).shape[0];
        const Tape::Id cat = t.concat_flat(branches, {4 * bc, h, w});
        const Tape::Id merged = merge.apply(t, cat);
        const Tape::Id skip = proj ? proj->apply(t, x) : x;
        return t.relu(t.add(merged, skip));
    }

    void collect(std::vector<Parameter*>& out) {
        b3x1.collect(out);
        b1x3.collect(out);
        b3x3.collect(out);
        b5x5.collect(out);
        merge.collect(out);
        if (proj) proj->collect(out);
    }
};

struct SpatialConfig {
    int in_w = 256;
    int in_h = 144;
    int stem_ch[3] = {8, 16, 32};
    int branch_ch = 8;
    int blocks = 2;
    int out_ch = 1;
};

// Heat map [1 x H x W] -> spatial feature grid, 1 channel at 1/8 resolution
// (256x144 -> 32x18). Three stride-2 stem convolutions downsample, the
// inception-residual blocks refine, and a linear 1x1 head collapses to one
// channel.
struct SpatialExtractor {
    SpatialConfig cfg;
    Conv2dLayer stem1, stem2, stem3;
    std::vector<InceptionBlock> inception;
    Conv2dLayer head;

    SpatialExtractor() = default;
    SpatialExtractor(const std::string& name, const SpatialConfig& c, Rng& rng)
        : cfg(c),
          stem1(name + ".stem1", 1, c.stem_ch[0], 3, 3, 2, 2, 1, 1, rng),
          stem2(name + ".stem2", c.stem_ch[0], c.stem_ch[1], 3, 3, 2, 2, 1, 1, rng),
          stem3(name + ".stem3", c.stem_ch[1], c.stem_ch[2], 3, 3, 2, 2, 1, 1, rng),
          head(name + ".head", c.stem_ch[2], c.out_ch, 1, 1, 1, 1, 0, 0, rng) {
        inception.reserve(static_cast<size_t>(c.blocks));
        for (int i = 0; i < c.blocks; ++i)
            inception.emplace_back(name + ".inc" + std::to_string(i + 1), c.stem_ch[2], c.branch_ch,
                                   c.stem_ch[2], rng);
    }

    static int halved(int n) { return conv_extent(n, 3, 2, 1); } // ceil(n / 2)

    int grid_w() const { return halved(halved(halved(cfg.in_w))); }
    int grid_h() const { return halved(halved(halved(cfg.in_h))); }
    int feature_dim() const { return cfg.out_ch * grid_w() * grid_h(); }

    Tape::Id apply(Tape& t, Tape::Id x) {
        const Tensor& tx = t.val(x);
        if (tx.shape != std::vector<int>{1, cfg.in_h, cfg.in_w})
            throw ShapeMismatch("spatial extractor expects [1x" + std::to_string(cfg.in_h) + "x" +
                                std::to_string(cfg.in_w) + "], got " + tx.shape_str());
        Tape::Id y = t.relu(stem1.apply(t, x));
        y = t.relu(stem2.apply(t, y));
        y = t.relu(stem3.apply(t, y));
        for (InceptionBlock& b : inception) y = b.apply(t, y);
        return head.apply(t, y);
    }

    // Stem pre-activations only (no ReLU, biases untouched); used to probe
    // the stem's linearity in isolation.
    Tape::Id stem_preactivation(Tape& t, Tape::Id x) {
        Tape::Id y = stem1.apply(t, x);
        y = stem2.apply(t, y);
        return stem3.apply(t, y);
    }

    void collect(std::vector<Parameter*>& out) {
        stem1.collect(out);
        stem2.collect(out);
        stem3.collect(out);
        for (InceptionBlock& b : inception) b.collect(out);
        head.collect(out);
    }
};

// Public single-map feature with the documented [channels x width x height]
// extents ([1 x 32 x 18] at the default resolution).
struct SpatialFeature {
    Tensor grid;
};

inline SpatialFeature extract_spatial(SpatialExtractor& extractor, const HeatMap& hm) {
    Tape tape;
    const Tape::Id out = extractor.apply(tape, tape.input(heatmap_to_tensor(hm)));
    const Tensor& y = tape.val(out); // [out_ch x gh x gw]
    const int ch = y.shape[0], gh = y.shape[1], gw = y.shape[2];
    SpatialFeature f{Tensor({ch, gw, gh})};
    for (int c = 0; c < ch; ++c)
        for (int yy = 0; yy < gh; ++yy)
            for (int xx = 0; xx < gw; ++xx)
                f.grid.v[(static_cast<int64_t>(c) * gw + xx) * gh + yy] =
                    y.v[(static_cast<int64_t>(c) * gh + yy) * gw + xx];
    return f;
}

} // namespace dscx
