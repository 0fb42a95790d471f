#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "dscx/errors.hpp"
#include "dscx/random.hpp"

namespace dscx {

// Dense double-precision tensor. Row-major contiguous storage; the last
// extent varies fastest. Double everywhere: gradient checks run at 1e-4
// relative tolerance and desk-scale speed does not justify float.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;

    explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(numel_of(shape), 0.0) {}

    Tensor(std::vector<int> s, std::vector<double> data) : shape(std::move(s)), v(std::move(data)) {
        if (numel_of(shape) != static_cast<int64_t>(v.size()))
            throw ShapeMismatch("tensor data length does not match shape");
    }

    static int64_t numel_of(const std::vector<int>& s) {
        int64_t n = 1;
        for (int e : s) {
            if (e <= 0) throw ShapeMismatch("tensor extents must be positive");
            n *= e;
        }
        return n;
    }

    int64_t numel() const { return static_cast<int64_t>(v.size()); }

    double* data() { return v.data(); }
    const double* data() const { return v.data(); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }

    std::string shape_str() const {
        std::string s = "[";
        for (size_t i = 0; i < shape.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }
};

// Named trainable tensor; grad is always allocated alongside.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    int pid = -1; // slot index assigned by the owning model

    Parameter() = default;
    Parameter(std::string n, Tensor t) : name(std::move(n)), value(std::move(t)), grad(value.shape) {}

    void zero_grad() { grad.fill(0.0); }
};

// Uniform in +-sqrt(6 / (fan_in + fan_out))
inline void glorot_init(Tensor& t, int fan_in, int fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / (static_cast<double>(fan_in) + static_cast<double>(fan_out)));
    for (double& x : t.v) x = rng.uniform(-limit, limit);
}

} // namespace dscx
