#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dscx/dynamics_net.hpp"
#include "dscx/encoder.hpp"
#include "dscx/sample.hpp"
#include "dscx/spatial.hpp"
#include "dscx/tape.hpp"

namespace dscx {

struct ModelConfig {
    int heat_w = 256;
    int heat_h = 144;
    int source_w = 1280; // coordinate space of detection files (BDD frame size)
    int source_h = 720;
    int dyn_len = 120;
    double dyn_duration = 4.0;
    int cam_d_k = 64;
    int cam_mlp_hidden = 128;
    int enc_layers = 6;
    int enc_out = 200;
    int dyn_mlp_hidden = 64;
    int fusion_hidden = 64;
    double scale_divisor = 8.0;
    bool attn_softmax = true;

    SpatialConfig spatial() const {
        SpatialConfig s;
        s.in_w = heat_w;
        s.in_h = heat_h;
        return s;
    }
};

// End-to-end classifier: 12 keyframe heat maps -> shared spatial extractor
// -> camera encoder [1 x 200]; dynamics window -> dynamics encoder
// [1 x 200]; concatenated [1 x 400] -> 2-layer head -> 5 logits.
struct ComplexityModel {
    ModelConfig cfg;
    SpatialExtractor spatial;
    EncoderStack camera;
    DynamicsExtractor dynamics;
    DenseLayer fuse1, fuse2;
    Parameter dyn_mean, dyn_std; // normalization buffers; persisted, never optimized

    ComplexityModel(const ModelConfig& c, uint64_t seed) : cfg(c) {
        Rng rng(seed);
        spatial = SpatialExtractor("spatial", c.spatial(), rng);
        EncoderConfig cam;
        cam.tokens = kKeyframes;
        cam.d_model = spatial.feature_dim();
        cam.d_k = c.cam_d_k;
        cam.mlp_hidden = c.cam_mlp_hidden;
        cam.layers = c.enc_layers;
        cam.out_dim = c.enc_out;
        cam.scale_divisor = c.scale_divisor;
        cam.softmax = c.attn_softmax;
        camera = EncoderStack("camera", cam, rng);

        DynamicsNetConfig dyn;
        dyn.in_len = c.dyn_len;
        dyn.mlp_hidden = c.dyn_mlp_hidden;
        dyn.enc_layers = c.enc_layers;
        dyn.out_dim = c.enc_out;
        dyn.scale_divisor = c.scale_divisor;
        dyn.softmax = c.attn_softmax;
        dynamics = DynamicsExtractor("dynamics", dyn, rng);

        fuse1 = DenseLayer("head.fc1", 2 * c.enc_out, c.fusion_hidden, rng);
        fuse2 = DenseLayer("head.fc2", c.fusion_hidden, kNumClasses, rng);

        dyn_mean = Parameter("dyn_norm.mean", Tensor({4}));
        dyn_std = Parameter("dyn_norm.std", Tensor({4}));
        dyn_std.value.fill(1.0);

        params_.clear();
        spatial.collect(params_);
        camera.collect(params_);
        dynamics.collect(params_);
        fuse1.collect(params_);
        fuse2.collect(params_);
        for (size_t i = 0; i < params_.size(); ++i) params_[i]->pid = static_cast<int>(i);
    }

    ComplexityModel(const ComplexityModel&) = delete;
    ComplexityModel& operator=(const ComplexityModel&) = delete;

    const std::vector<Parameter*>& parameters() { return params_; }

    // Checkpoint entries: trainables in registration order, then the
    // normalization buffers.
    std::vector<Parameter*> state_entries() {
        std::vector<Parameter*> all = params_;
        all.push_back(&dyn_mean);
        all.push_back(&dyn_std);
        return all;
    }

    void set_dyn_stats(const DynNormStats& s) {
        for (int c = 0; c < 4; ++c) {
            dyn_mean.value.v[c] = s.ch[c].mean;
            dyn_std.value.v[c] = s.ch[c].stdev;
        }
    }

    DynNormStats dyn_stats() const {
        DynNormStats s;
        for (int c = 0; c < 4; ++c) {
            s.ch[c].mean = dyn_mean.value.v[c];
            s.ch[c].stdev = dyn_std.value.v[c];
        }
        return s;
    }

    // Detection coordinates live in the source frame; scale them into the
    // heat-map raster before rendering.
    std::vector<Detection> scaled_boxes(const std::vector<Detection>& src) const {
        const double fx = static_cast<double>(cfg.heat_w) / static_cast<double>(cfg.source_w);
        const double fy = static_cast<double>(cfg.heat_h) / static_cast<double>(cfg.source_h);
        std::vector<Detection> out = src;
        for (Detection& d : out) {
            d.x_lb *= fx;
            d.x_rt *= fx;
            d.y_lb *= fy;
            d.y_rt *= fy;
        }
        return out;
    }

    struct ForwardTrace {
        Tape::Id camera_feature;   // [1 x enc_out]
        Tape::Id dynamics_feature; // [1 x enc_out]
        Tape::Id fused;            // [1 x 2*enc_out]
        Tape::Id logits;           // [1 x kNumClasses]
    };

    ForwardTrace forward(Tape& t, const Sample& sample) {
        if (static_cast<int>(sample.keyframes.size()) != kKeyframes)
            throw MissingKeyframe("sample '" + sample.id + "' has " +
                                  std::to_string(sample.keyframes.size()) + " keyframes, need " +
                                  std::to_string(kKeyframes));
        std::vector<Tape::Id> tokens;
        tokens.reserve(kKeyframes);
        for (const auto& boxes : sample.keyframes) {
            const HeatMap hm = render_heatmap(scaled_boxes(boxes), cfg.heat_w, cfg.heat_h);
            const Tape::Id grid = spatial.apply(t, t.input(heatmap_to_tensor(hm)));
            tokens.push_back(t.reshape(grid, {1, spatial.feature_dim()}));
        }
        ForwardTrace tr{};
        const Tape::Id stacked = t.concat_flat(tokens, {kKeyframes, spatial.feature_dim()});
        tr.camera_feature = camera.encode(t, stacked);

        const DynamicsWindow norm = normalize_window(sample.dynamics, dyn_stats());
        tr.dynamics_feature = dynamics.apply(t, t.input(norm.to_tensor()));

        tr.fused = t.concat_flat({tr.camera_feature, tr.dynamics_feature}, {1, 2 * cfg.enc_out});
        Tape::Id h = t.relu(fuse1.apply(t, tr.fused));
        tr.logits = fuse2.apply(t, h);
        return tr;
    }

    ComplexityPrediction predict(const Sample& sample) {
        Tape tape;
        const ForwardTrace tr = forward(tape, sample);
        ComplexityPrediction pred;
        pred.probabilities = softmax_vec(tape.val(tr.logits).v);
        pred.predicted_class = argmax_lowest(pred.probabilities);
        return pred;
    }

private:
    std::vector<Parameter*> params_;
};

// Order-preserving batch prediction; per-sample failures are reported, not
// fatal.
struct PredictOutcome {
    bool ok = false;
    ComplexityPrediction prediction;
    std::string error;
};

inline std::vector<PredictOutcome> predict_batch(ComplexityModel& model,
                                                 const std::vector<Sample>& samples) {
    std::vector<PredictOutcome> out(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        try {
            out[i].prediction = model.predict(samples[i]);
            out[i].ok = true;
        } catch (const Error& e) {
            out[i].error = e.what();
        }
    }
    return out;
}

} // namespace dscx
