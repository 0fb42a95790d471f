#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dscx/errors.hpp"
#include "dscx/heatmap.hpp"

namespace dscx {

struct FrameDetections {
    int frame = 0;
    std::vector<Detection> boxes;
};

// JSON-lines detections: one object per keyframe,
// {"frame": int, "boxes": [{"x_lb":f,"y_lb":f,"x_rt":f,"y_rt":f,"class":s}]}
inline std::vector<FrameDetections> read_detections_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open detections file '" + path.string() + "'");
    std::vector<FrameDetections> frames;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        try {
            FrameDetections fd;
            fd.frame = j.at("frame").get<int>();
            for (const auto& b : j.at("boxes")) {
                Detection d;
                d.x_lb = b.at("x_lb").get<double>();
                d.y_lb = b.at("y_lb").get<double>();
                d.x_rt = b.at("x_rt").get<double>();
                d.y_rt = b.at("y_rt").get<double>();
                d.cls = class_from_name(b.at("class").get<std::string>());
                fd.boxes.push_back(d);
            }
            frames.push_back(std::move(fd));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    std::stable_sort(frames.begin(), frames.end(),
                     [](const FrameDetections& a, const FrameDetections& b) { return a.frame < b.frame; });
    return frames;
}

inline void write_detections_jsonl(const std::filesystem::path& path,
                                   const std::vector<FrameDetections>& frames) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    for (const FrameDetections& fd : frames) {
        nlohmann::json boxes = nlohmann::json::array();
        for (const Detection& d : fd.boxes) {
            boxes.push_back({{"x_lb", d.x_lb},
                             {"y_lb", d.y_lb},
                             {"x_rt", d.x_rt},
                             {"y_rt", d.y_rt},
                             {"class", class_name(d.cls)}});
        }
        nlohmann::json j{{"frame", fd.frame}, {"boxes", boxes}};
        out << j.dump() << "\n";
    }
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

} // namespace dscx
