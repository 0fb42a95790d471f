#include <gtest/gtest.h>

#include <cmath>

#include "dscx/dynamics.hpp"
#include "dscx/dynamics_net.hpp"
#include "dscx/spatial.hpp"

using namespace dscx;

TEST(SpatialExtractor, DefaultGridIs32x18) {
    Rng rng(1);
    SpatialExtractor sp("sp", SpatialConfig{}, rng);
    EXPECT_EQ(sp.grid_w(), 32);
    EXPECT_EQ(sp.grid_h(), 18);
    EXPECT_EQ(sp.feature_dim(), 576);
}

TEST(SpatialExtractor, FeatureExtentsAreOneBy32By18) {
    Rng rng(2);
    SpatialExtractor sp("sp", SpatialConfig{}, rng);
    HeatMap hm = render_heatmap({Detection{30, 30, 120, 90, ObjectClass::Pedestrian}}, 256, 144);
    const SpatialFeature f = extract_spatial(sp, hm);
    EXPECT_EQ(f.grid.shape, (std::vector<int>{1, 32, 18}));
    EXPECT_TRUE(f.grid.all_finite());
}

TEST(SpatialExtractor, ZeroMapZeroBiasesGiveZeroFeature) {
    Rng rng(3);
    SpatialExtractor sp("sp", SpatialConfig{}, rng); // biases start at zero
    HeatMap hm = render_heatmap({}, 256, 144);
    const SpatialFeature f = extract_spatial(sp, hm);
    for (double v : f.grid.v) EXPECT_EQ(v, 0.0);
}

TEST(SpatialExtractor, WrongResolutionThrows) {
    Rng rng(4);
    SpatialExtractor sp("sp", SpatialConfig{}, rng);
    Tape t;
    EXPECT_THROW(sp.apply(t, t.input(Tensor({1, 72, 128}))), ShapeMismatch);
}

TEST(SpatialExtractor, StemIsLinearPreActivation) {
    // doubling the map doubles the stem pre-activations bit-exactly (powers
    // of two commute with IEEE add/mul, biases are zero at init)
    Rng rng(5);
    SpatialExtractor sp("sp", SpatialConfig{}, rng);
    Rng data(6);
    Tensor hm({1, 144, 256});
    for (double& v : hm.v) v = data.uniform(0, 4);
    Tensor doubled = hm;
    for (double& v : doubled.v) v *= 2.0;
    Tape t;
    const Tape::Id a = sp.stem_preactivation(t, t.input(hm));
    const Tape::Id b = sp.stem_preactivation(t, t.input(doubled));
    for (int64_t i = 0; i < t.val(a).numel(); ++i)
        ASSERT_EQ(t.val(b).v[i], 2.0 * t.val(a).v[i]);
}

TEST(SpatialExtractor, ResidualProjectionKicksInWhenChannelsDiffer) {
    Rng rng(7);
    InceptionBlock same("b1", 8, 2, 8, rng);
    EXPECT_FALSE(same.proj.has_value());
    InceptionBlock differ("b2", 8, 2, 12, rng);
    EXPECT_TRUE(differ.proj.has_value());
    Tape t;
    Tensor x({8, 6, 10});
    for (double& v : x.v) v = rng.uniform(-1, 1);
    const Tape::Id y = differ.apply(t, t.input(x));
    EXPECT_EQ(t.val(y).shape, (std::vector<int>{12, 6, 10}));
}

TEST(NormalizeWindow, ConstantChannelMapsToZeros) {
    DynamicsWindow w;
    w.ax.assign(10, 3.5);
    w.speed.assign(10, 3.5);
    w.ay.assign(10, 3.5);
    w.yaw_rate.assign(10, 3.5);
    std::vector<const DynamicsWindow*> ws{&w};
    const DynamicsWindow out = normalize_window(w, compute_dyn_stats(ws));
    for (int c = 0; c < 4; ++c)
        for (double v : out.channel(c)) EXPECT_EQ(v, 0.0);
}

TEST(NormalizeWindow, StandardizationIsIdempotent) {
    Rng rng(8);
    DynamicsWindow w;
    for (int c = 0; c < 4; ++c) {
        auto& ch = w.channel(c);
        ch.resize(64);
        for (double& v : ch) v = rng.uniform(-3, 7);
    }
    std::vector<const DynamicsWindow*> ws{&w};
    const DynamicsWindow once = normalize_window(w, compute_dyn_stats(ws));
    std::vector<const DynamicsWindow*> os{&once};
    const DynamicsWindow twice = normalize_window(once, compute_dyn_stats(os));
    for (int c = 0; c < 4; ++c)
        for (size_t i = 0; i < once.channel(c).size(); ++i)
            EXPECT_NEAR(twice.channel(c)[i], once.channel(c)[i], 1e-12);
}

TEST(NormalizeWindow, OwnStatsGiveZeroMeanUnitStd) {
    Rng rng(9);
    DynamicsWindow w;
    for (int c = 0; c < 4; ++c) {
        auto& ch = w.channel(c);
        ch.resize(120);
        for (double& v : ch) v = rng.gaussian() * (c + 1) + 2.0 * c;
    }
    std::vector<const DynamicsWindow*> ws{&w};
    const DynamicsWindow out = normalize_window(w, compute_dyn_stats(ws));
    for (int c = 0; c < 4; ++c) {
        double mean = 0.0, var = 0.0;
        for (double v : out.channel(c)) mean += v;
        mean /= 120.0;
        for (double v : out.channel(c)) var += (v - mean) * (v - mean);
        var /= 120.0;
        EXPECT_NEAR(mean, 0.0, 1e-9);
        EXPECT_NEAR(std::sqrt(var), 1.0, 1e-9);
    }
}

TEST(NormalizeWindow, LengthMismatchThrows) {
    DynamicsWindow w;
    w.ax.assign(10, 0.0);
    w.speed.assign(9, 0.0);
    w.ay.assign(10, 0.0);
    w.yaw_rate.assign(10, 0.0);
    EXPECT_THROW(normalize_window(w, DynNormStats{}), LengthMismatch);
}

TEST(DynamicsExtractor, TokenCountAndOutputShape) {
    Rng rng(10);
    DynamicsNetConfig dc;
    EXPECT_EQ(DynamicsExtractor::token_count(dc), 15); // 120 -> 60 -> 30 -> 15
    DynamicsExtractor dyn("dyn", dc, rng);
    Tensor x({4, 120});
    for (double& v : x.v) v = rng.uniform(-1, 1);
    Tape t;
    const Tape::Id y = dyn.apply(t, t.input(x));
    EXPECT_EQ(t.val(y).shape, (std::vector<int>{1, 200}));
    EXPECT_THROW(dyn.apply(t, t.input(Tensor({4, 60}))), ShapeMismatch);
}

TEST(DynamicsExtractor, KernelsAreOneDimensional) {
    Rng rng(11);
    DynamicsExtractor dyn("dyn", DynamicsNetConfig{}, rng);
    EXPECT_EQ(dyn.conv1.w.value.shape.size(), 3u); // [F x C x K], no second spatial axis
    EXPECT_EQ(dyn.conv2.w.value.shape.size(), 3u);
    EXPECT_EQ(dyn.conv3.w.value.shape.size(), 3u);
    for (auto& b : dyn.encoder.blocks) EXPECT_EQ(b.attn.q.value.shape.size(), 2u);
}

TEST(DynamicsExtractor, ZeroWindowZeroBiasesGiveZeroConvFeatures) {
    Rng rng(12);
    DynamicsExtractor dyn("dyn", DynamicsNetConfig{}, rng);
    Tape t;
    Tape::Id y = t.relu(dyn.conv1.apply(t, t.input(Tensor({4, 120}))));
    y = t.relu(dyn.conv2.apply(t, y));
    y = t.relu(dyn.conv3.apply(t, y));
    for (double v : t.val(y).v) EXPECT_EQ(v, 0.0);
}

TEST(DynamicsExtractor, TokenCountTracksConfigProperty) {
    Rng shapes(13);
    for (int trial = 0; trial < 25; ++trial) {
        DynamicsNetConfig dc;
        dc.in_len = 16 + shapes.below_int(200);
        for (int i = 0; i < 3; ++i) dc.kernels[i] = 3 + 2 * shapes.below_int(3); // 3, 5, 7
        dc.channels[0] = 2 + shapes.below_int(4);
        dc.channels[1] = 2 + shapes.below_int(4);
        dc.channels[2] = 4 + shapes.below_int(4);
        dc.enc_layers = 1;
        dc.mlp_hidden = 4;
        dc.out_dim = 6;
        Rng rng(shapes.next());
        DynamicsExtractor dyn("dyn", dc, rng);
        Tensor x({4, dc.in_len});
        for (double& v : x.v) v = rng.uniform(-1, 1);
        Tape t;
        Tape::Id y = t.relu(dyn.conv1.apply(t, t.input(x)));
        y = t.relu(dyn.conv2.apply(t, y));
        y = t.relu(dyn.conv3.apply(t, y));
        ASSERT_EQ(t.val(y).shape[1], DynamicsExtractor::token_count(dc));
    }
}
