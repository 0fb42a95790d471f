#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dscx/errors.hpp"
#include "dscx/heatmap.hpp"

namespace dscx {

// Binary 16-bit PGM (P5, maxval 65535, big-endian samples per the format).
// The grid is scaled so its maximum maps to 65535; an all-zero grid writes
// an all-zero raster.
inline void write_pgm16(const std::filesystem::path& path, const HeatMap& hm) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "P5\n" << hm.width << " " << hm.height << "\n65535\n";
    const double mx = hm.max_value();
    const double scale = mx > 0.0 ? 65535.0 / mx : 0.0;
    std::vector<unsigned char> raster(static_cast<size_t>(hm.width) * hm.height * 2);
    for (size_t i = 0; i < hm.values.size(); ++i) {
        const auto q = static_cast<uint16_t>(std::lround(hm.values[i] * scale));
        raster[2 * i] = static_cast<unsigned char>(q >> 8);
        raster[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
    }
    out.write(reinterpret_cast<const char*>(raster.data()),
              static_cast<std::streamsize>(raster.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

} // namespace dscx
