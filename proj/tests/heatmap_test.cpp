#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dscx/heatmap.hpp"
#include "dscx/random.hpp"
#include "oracles.hpp"

using namespace dscx;

namespace {

Detection make_box(double x0, double y0, double x1, double y1, ObjectClass c) {
    Detection d;
    d.x_lb = x0;
    d.y_lb = y0;
    d.x_rt = x1;
    d.y_rt = y1;
    d.cls = c;
    return d;
}

const double kSqrt2 = std::sqrt(2.0);

} // namespace

TEST(ClassWeight, PaperAssignments) {
    EXPECT_EQ(class_weight(ObjectClass::Pedestrian), 4);
    EXPECT_EQ(class_weight(ObjectClass::Cyclist), 4);
    EXPECT_EQ(class_weight(ObjectClass::Vehicle), 2);
    EXPECT_EQ(class_weight(ObjectClass::TrafficSign), 2);
    EXPECT_EQ(class_weight(ObjectClass::TrafficLight), 2);
    EXPECT_EQ(class_weight(ObjectClass::Other), 1);
}

TEST(BoxField, CornersAreSqrtTwo) {
    // cos(+-pi/2) = 0 forces both axis intensities to exp(0) = 1
    for (ObjectClass c : {ObjectClass::Pedestrian, ObjectClass::Vehicle, ObjectClass::Other}) {
        const Detection d = make_box(3, 4, 13, 12, c);
        const BoxField f = box_field(d, class_weight(c), 32, 32);
        ASSERT_FALSE(f.box.empty());
        const int w = f.box.width(), h = f.box.height();
        EXPECT_NEAR(f.patch[0], kSqrt2, 1e-9);
        EXPECT_NEAR(f.patch[static_cast<size_t>(w) - 1], kSqrt2, 1e-9);
        EXPECT_NEAR(f.patch[static_cast<size_t>(w) * (h - 1)], kSqrt2, 1e-9);
        EXPECT_NEAR(f.patch[static_cast<size_t>(w) * h - 1], kSqrt2, 1e-9);
    }
}

TEST(BoxField, CenterValues) {
    // odd extents put a pixel exactly at the box center, where cos(0) = 1
    const Detection vehicle = make_box(2, 2, 12, 10, ObjectClass::Vehicle);
    const BoxField fv = box_field(vehicle, 2, 32, 32);
    const int cw = fv.box.width();
    const double center_v = fv.patch[static_cast<size_t>(fv.box.height() / 2) * cw + cw / 2];
    EXPECT_NEAR(center_v, kSqrt2 * std::exp(std::sqrt(2.0)), 1e-9);
    EXPECT_NEAR(center_v, 5.8170, 5e-4);

    const Detection ped = make_box(2, 2, 12, 10, ObjectClass::Pedestrian);
    const BoxField fp = box_field(ped, 4, 32, 32);
    const double center_p = fp.patch[static_cast<size_t>(fp.box.height() / 2) * cw + cw / 2];
    EXPECT_NEAR(center_p, kSqrt2 * std::exp(2.0), 1e-9);
    EXPECT_NEAR(center_p, 10.4498, 5e-4);
}

TEST(BoxField, DegenerateAxisUsesCenterValue) {
    // single-pixel-wide box: the horizontal axis collapses to angle 0
    const Detection d = make_box(5, 2, 5, 10, ObjectClass::Other);
    const BoxField f = box_field(d, 1, 32, 32);
    ASSERT_EQ(f.box.width(), 1);
    const double top = f.patch[0]; // vertical corner, horizontal center
    EXPECT_NEAR(top, std::sqrt(std::exp(2.0) + 1.0), 1e-9);
}

TEST(BoxField, SymmetricAboutCenterLines) {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const double x0 = rng.uniform(0, 20), y0 = rng.uniform(0, 20);
        const Detection d = make_box(x0, y0, x0 + rng.uniform(1, 30), y0 + rng.uniform(1, 30),
                                     ObjectClass::Vehicle);
        const BoxField f = box_field(d, 2, 64, 64);
        if (f.box.empty()) continue;
        const int w = f.box.width(), h = f.box.height();
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double v = f.patch[static_cast<size_t>(y) * w + x];
                EXPECT_NEAR(v, f.patch[static_cast<size_t>(y) * w + (w - 1 - x)], 1e-9);
                EXPECT_NEAR(v, f.patch[static_cast<size_t>(h - 1 - y) * w + x], 1e-9);
            }
    }
}

TEST(BoxField, ValuesWithinClosedFormRange) {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = trial % 2 == 0 ? 4 : (trial % 3 == 0 ? 2 : 1);
        const double x0 = rng.uniform(0, 40), y0 = rng.uniform(0, 40);
        const Detection d =
            make_box(x0, y0, x0 + rng.uniform(1, 20), y0 + rng.uniform(1, 20), ObjectClass::Other);
        const BoxField f = box_field(d, n, 64, 64);
        const double lo = kSqrt2, hi = kSqrt2 * std::exp(std::sqrt(static_cast<double>(n)));
        for (double v : f.patch) {
            EXPECT_GE(v, lo - 1e-9);
            EXPECT_LE(v, hi + 1e-9);
        }
    }
}

TEST(RenderHeatmap, EmptyDetectionsGiveZeroMap) {
    const HeatMap hm = render_heatmap({}, 64, 36);
    EXPECT_EQ(hm.total_intensity, 0.0);
    for (double v : hm.values) EXPECT_EQ(v, 0.0);
}

TEST(RenderHeatmap, UncoveredPixelsStayZero) {
    const HeatMap hm = render_heatmap({make_box(10, 10, 20, 20, ObjectClass::Vehicle)}, 64, 64);
    EXPECT_EQ(hm.at(5, 5), 0.0);
    EXPECT_EQ(hm.at(30, 15), 0.0);
    EXPECT_GT(hm.at(15, 15), 0.0);
}

TEST(RenderHeatmap, PedestrianPeakExceedsVehiclePeak) {
    const HeatMap hp = render_heatmap({make_box(4, 4, 20, 14, ObjectClass::Pedestrian)}, 32, 32);
    const HeatMap hv = render_heatmap({make_box(4, 4, 20, 14, ObjectClass::Vehicle)}, 32, 32);
    const HeatMap ho = render_heatmap({make_box(4, 4, 20, 14, ObjectClass::Other)}, 32, 32);
    EXPECT_GT(hp.max_value(), hv.max_value());
    EXPECT_GT(hv.max_value(), ho.max_value());
}

TEST(RenderHeatmap, DisjointIdenticalBoxesDoubleZ) {
    const Detection a = make_box(2, 2, 12, 10, ObjectClass::Cyclist);
    const Detection b = make_box(30, 20, 40, 28, ObjectClass::Cyclist);
    const HeatMap one = render_heatmap({a}, 64, 64);
    const HeatMap two = render_heatmap({a, b}, 64, 64);
    EXPECT_EQ(two.total_intensity, 2.0 * one.total_intensity);
}

TEST(RenderHeatmap, PermutationInvariantBitExact) {
    Rng rng(23);
    std::vector<Detection> dets;
    for (int i = 0; i < 8; ++i) {
        const double x0 = rng.uniform(0, 40), y0 = rng.uniform(0, 40);
        dets.push_back(make_box(x0, y0, x0 + rng.uniform(1, 20), y0 + rng.uniform(1, 20),
                                static_cast<ObjectClass>(i % 6)));
    }
    const HeatMap base = render_heatmap(dets, 64, 64);
    for (int trial = 0; trial < 10; ++trial) {
        rng.shuffle(dets);
        const HeatMap shuffled = render_heatmap(dets, 64, 64);
        ASSERT_EQ(shuffled.values, base.values);
        ASSERT_EQ(shuffled.total_intensity, base.total_intensity);
    }
}

TEST(RenderHeatmap, OutOfBoundsBoxesClampOrVanish) {
    // straddling the border: clamped, still contributes
    const HeatMap clamped = render_heatmap({make_box(-10, -5, 6, 8, ObjectClass::Vehicle)}, 32, 32);
    EXPECT_GT(clamped.total_intensity, 0.0);
    EXPECT_GT(clamped.at(0, 0), 0.0);
    // fully outside: nothing
    const HeatMap gone = render_heatmap({make_box(40, 40, 60, 60, ObjectClass::Vehicle)}, 32, 32);
    EXPECT_EQ(gone.total_intensity, 0.0);
    const HeatMap negative = render_heatmap({make_box(-30, -30, -5, -5, ObjectClass::Vehicle)}, 32, 32);
    EXPECT_EQ(negative.total_intensity, 0.0);
}

TEST(RenderHeatmap, MatchesPerPixelOracle) {
    Rng rng(101);
    for (int trial = 0; trial < 30; ++trial) {
        const int w = 16 + rng.below_int(49); // up to 64
        const int h = 16 + rng.below_int(49);
        std::vector<Detection> dets;
        const int nboxes = 1 + rng.below_int(6);
        for (int i = 0; i < nboxes; ++i) {
            const double x0 = rng.uniform(-5, w - 1);
            const double y0 = rng.uniform(-5, h - 1);
            dets.push_back(make_box(x0, y0, x0 + rng.uniform(0, 30), y0 + rng.uniform(0, 30),
                                    static_cast<ObjectClass>(rng.below_int(6))));
        }
        const HeatMap got = render_heatmap(dets, w, h);
        const HeatMap want = oracle::heatmap(dets, w, h);
        ASSERT_EQ(got.values.size(), want.values.size());
        for (size_t i = 0; i < got.values.size(); ++i)
            ASSERT_NEAR(got.values[i], want.values[i], 1e-9);
        ASSERT_NEAR(got.total_intensity, want.total_intensity, 1e-9 * std::max(1.0, want.total_intensity));
    }
}

TEST(RenderHeatmap, RejectsBadExtents) {
    EXPECT_THROW(render_heatmap({}, 0, 10), ShapeMismatch);
    EXPECT_THROW(render_heatmap({}, 10, -1), ShapeMismatch);
}
