#pragma once

#include <string>
#include <vector>

#include "dscx/dynamics.hpp"
#include "dscx/heatmap.hpp"

namespace dscx {

inline constexpr int kNumClasses = 5;
inline constexpr int kKeyframes = 12;

// One 4-second segment: 12 keyframe detection sets (timestep order), the
// dynamics window, and the complexity label.
struct Sample {
    std::string id;
    std::vector<std::vector<Detection>> keyframes; // exactly kKeyframes entries
    DynamicsWindow dynamics;
    int label = 0;      // 0 (easiest) .. 4 (hardest)
    bool moving = true; // driving flag; carried through, not consumed by the model
};

struct ComplexityPrediction {
    std::vector<double> probabilities; // length kNumClasses, sums to 1
    int predicted_class = 0;           // argmax, lowest index wins ties
};

inline int argmax_lowest(const std::vector<double>& p) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(p.size()); ++i)
        if (p[i] > p[best]) best = i;
    return best;
}

} // namespace dscx
