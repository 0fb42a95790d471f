#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dscx/errors.hpp"
#include "dscx/tensor.hpp"

namespace dscx {

// Checkpoint layout: magic "DSCXv1", then per entry (in model order)
//   u32 name length | name bytes | u32 rank | u32 extents... | f64 values
// all little-endian. The loader walks the model's entries in the same order
// and rejects any name or shape mismatch.

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts are unsupported");

namespace detail {

inline void put_u32(std::ofstream& out, uint32_t x) {
    out.write(reinterpret_cast<const char*>(&x), 4);
}

inline uint32_t get_u32(std::ifstream& in, const std::string& path) {
    uint32_t x = 0;
    if (!in.read(reinterpret_cast<char*>(&x), 4))
        throw CheckpointMismatch("truncated checkpoint '" + path + "'");
    return x;
}

} // namespace detail

inline void save_checkpoint(const std::filesystem::path& path,
                            const std::vector<Parameter*>& entries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write("DSCXv1", 6);
    for (const Parameter* p : entries) {
        detail::put_u32(out, static_cast<uint32_t>(p->name.size()));
        out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        detail::put_u32(out, static_cast<uint32_t>(p->value.shape.size()));
        for (int e : p->value.shape) detail::put_u32(out, static_cast<uint32_t>(e));
        out.write(reinterpret_cast<const char*>(p->value.data()),
                  static_cast<std::streamsize>(p->value.numel() * sizeof(double)));
    }
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline void load_checkpoint(const std::filesystem::path& path,
                            const std::vector<Parameter*>& entries) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
    char magic[6];
    if (!in.read(magic, 6) || std::memcmp(magic, "DSCXv1", 6) != 0)
        throw CheckpointMismatch("'" + path.string() + "' is not a DSCXv1 checkpoint");
    for (Parameter* p : entries) {
        const uint32_t name_len = detail::get_u32(in, path.string());
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len))
            throw CheckpointMismatch("truncated checkpoint '" + path.string() + "'");
        if (name != p->name)
            throw CheckpointMismatch("checkpoint entry '" + name + "' does not match expected '" +
                                     p->name + "'");
        const uint32_t rank = detail::get_u32(in, path.string());
        std::vector<int> shape(rank);
        for (uint32_t i = 0; i < rank; ++i)
            shape[i] = static_cast<int>(detail::get_u32(in, path.string()));
        if (shape != p->value.shape)
            throw CheckpointMismatch("checkpoint entry '" + name + "' has mismatched shape");
        if (!in.read(reinterpret_cast<char*>(p->value.data()),
                     static_cast<std::streamsize>(p->value.numel() * sizeof(double))))
            throw CheckpointMismatch("truncated checkpoint '" + path.string() + "'");
    }
    // the stream must be exactly consumed
    char extra;
    if (in.read(&extra, 1))
        throw CheckpointMismatch("'" + path.string() + "' holds more entries than the model");
}

} // namespace dscx
