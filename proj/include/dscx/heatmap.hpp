#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "dscx/errors.hpp"
#include "dscx/tensor.hpp"

namespace dscx {

enum class ObjectClass : int {
    Pedestrian = 0,
    Cyclist = 1,
    Vehicle = 2,
    TrafficSign = 3,
    TrafficLight = 4,
    Other = 5,
};

// Heat intensity weight factor: humans weigh 4, traffic-relevant objects 2,
// everything else 1.
inline int class_weight(ObjectClass c) {
    switch (c) {
        case ObjectClass::Pedestrian:
        case ObjectClass::Cyclist:
            return 4;
        case ObjectClass::Vehicle:
        case ObjectClass::TrafficSign:
        case ObjectClass::TrafficLight:
            return 2;
        default:
            return 1;
    }
}

inline const char* class_name(ObjectClass c) {
    switch (c) {
        case ObjectClass::Pedestrian: return "pedestrian";
        case ObjectClass::Cyclist: return "cyclist";
        case ObjectClass::Vehicle: return "vehicle";
        case ObjectClass::TrafficSign: return "traffic_sign";
        case ObjectClass::TrafficLight: return "traffic_light";
        default: return "other";
    }
}

inline ObjectClass class_from_name(const std::string& s) {
    if (s == "pedestrian") return ObjectClass::Pedestrian;
    if (s == "cyclist") return ObjectClass::Cyclist;
    if (s == "vehicle") return ObjectClass::Vehicle;
    if (s == "traffic_sign") return ObjectClass::TrafficSign;
    if (s == "traffic_light") return ObjectClass::TrafficLight;
    if (s == "other") return ObjectClass::Other;
    throw ParseError("unknown object class '" + s + "'");
}

// One bounding box on one keyframe. Pixel origin is the image top-left with
// x growing rightward and y downward; (x_lb, y_lb) is the box's top-left
// corner and (x_rt, y_rt) its bottom-right.
struct Detection {
    double x_lb = 0.0;
    double y_lb = 0.0;
    double x_rt = 0.0;
    double y_rt = 0.0;
    ObjectClass cls = ObjectClass::Other;
};

struct HeatMap {
    int width = 0;
    int height = 0;
    std::vector<double> values; // row-major, values[y * width + x]
    double total_intensity = 0.0;

    double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
    double max_value() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, v);
        return m;
    }
};

// Inclusive pixel ranges of a box after rounding and clamping to the image.
struct PixelBox {
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
    bool empty() const { return x1 < x0 || y1 < y0; }
    int width() const { return x1 - x0 + 1; }
    int height() const { return y1 - y0 + 1; }
};

inline PixelBox rasterize_box(const Detection& det, int image_w, int image_h) {
    PixelBox b;
    if (det.x_rt < det.x_lb || det.y_rt < det.y_lb) return b; // inverted box: empty
    const long cx0 = std::lround(det.x_lb);
    const long cx1 = std::lround(det.x_rt);
    const long cy0 = std::lround(det.y_lb);
    const long cy1 = std::lround(det.y_rt);
    if (cx1 < 0 || cx0 > image_w - 1 || cy1 < 0 || cy0 > image_h - 1) return b;
    b.x0 = static_cast<int>(std::clamp(cx0, 0L, static_cast<long>(image_w - 1)));
    b.x1 = static_cast<int>(std::clamp(cx1, 0L, static_cast<long>(image_w - 1)));
    b.y0 = static_cast<int>(std::clamp(cy0, 0L, static_cast<long>(image_h - 1)));
    b.y1 = static_cast<int>(std::clamp(cy1, 0L, static_cast<long>(image_h - 1)));
    return b;
}

namespace detail {

// exp(sqrt(n) * cos(a)) along one axis, where a runs linearly from -pi/2 at
// the first pixel to +pi/2 at the last. A collapsed axis (single pixel)
// would divide by zero in the interpolation; it is pinned to angle 0, the
// center value.
inline std::vector<double> axis_profile(int first, int last, double sqrt_n) {
    const double half_pi = 1.5707963267948966;
    const int count = last - first + 1;
    std::vector<double> out(static_cast<size_t>(count));
    if (count == 1) {
        out[0] = std::exp(sqrt_n); // cos(0) = 1
        return out;
    }
    const double step = (2.0 * half_pi) / static_cast<double>(count - 1);
    for (int i = 0; i < count; ++i) {
        const double angle = -half_pi + step * static_cast<double>(i);
        out[static_cast<size_t>(i)] = std::exp(sqrt_n * std::cos(angle));
    }
    return out;
}

} // namespace detail

// Intensity patch of a single box over its clamped pixel range: per pixel
// z = sqrt(z_h^2 + z_v^2) with z_h = exp(sqrt(n) cos(x_h)) horizontally and
// z_v likewise vertically. Patch rows run top to bottom.
struct BoxField {
    PixelBox box;
    std::vector<double> patch; // box.height() x box.width(), row-major
    double sum = 0.0;
};

inline BoxField box_field(const Detection& det, int weight_n, int image_w, int image_h) {
    if (image_w <= 0 || image_h <= 0) throw ShapeMismatch("heat map extents must be positive");
    BoxField f;
    f.box = rasterize_box(det, image_w, image_h);
    if (f.box.empty()) return f;
    const double sqrt_n = std::sqrt(static_cast<double>(weight_n));
    const std::vector<double> zh = detail::axis_profile(f.box.x0, f.box.x1, sqrt_n);
    const std::vector<double> zv = detail::axis_profile(f.box.y0, f.box.y1, sqrt_n);
    f.patch.resize(static_cast<size_t>(f.box.width()) * f.box.height());
    size_t k = 0;
    for (double v : zv) {
        for (double h : zh) {
            const double z = std::sqrt(h * h + v * v);
            f.patch[k++] = z;
            f.sum += z;
        }
    }
    return f;
}

// Renders all detections into one heat map. Overlapping boxes superpose by
// elementwise addition and Z accumulates every box's pixel sum. Detections
// are sorted into a canonical order first so any permutation of the input
// replays the identical floating-point accumulation.
inline HeatMap render_heatmap(std::vector<Detection> dets, int width, int height) {
    if (width <= 0 || height <= 0) throw ShapeMismatch("heat map extents must be positive");
    HeatMap hm;
    hm.width = width;
    hm.height = height;
    hm.values.assign(static_cast<size_t>(width) * height, 0.0);
    std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
        return std::tie(a.x_lb, a.y_lb, a.x_rt, a.y_rt, a.cls) <
               std::tie(b.x_lb, b.y_lb, b.x_rt, b.y_rt, b.cls);
    });
    for (const Detection& det : dets) {
        const BoxField f = box_field(det, class_weight(det.cls), width, height);
        if (f.box.empty()) continue;
        size_t k = 0;
        for (int y = f.box.y0; y <= f.box.y1; ++y) {
            double* row = hm.values.data() + static_cast<size_t>(y) * width;
            for (int x = f.box.x0; x <= f.box.x1; ++x) row[x] += f.patch[k++];
        }
        hm.total_intensity += f.sum;
    }
    return hm;
}

// Heat map grid as a [1 x H x W] tensor, the convolution input layout.
inline Tensor heatmap_to_tensor(const HeatMap& hm) {
    return Tensor({1, hm.height, hm.width}, hm.values);
}

} // namespace dscx
