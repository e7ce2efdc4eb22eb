// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#include "svitt/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace svitt::checkpoint {

namespace {

constexpr char kMagic[4] = {'S', 'V', 'T', 'T'};

template <typename T>
void write_le(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return static_cast<T>(v);
}

void write_f32(std::ostream& os, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_le<std::uint32_t>(os, bits);
}

float read_f32(std::istream& is) {
    const std::uint32_t bits = read_le<std::uint32_t>(is);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

}  // namespace

void save(const encoder::Model& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    os.write(kMagic, 4);
    write_le<std::uint32_t>(os, kFormatVersion);
    const std::string cfg = model.config().to_json();
    write_le<std::uint64_t>(os, cfg.size());
    os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    for (const auto& [name, p] : model.params().all()) {
        write_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_le<std::uint32_t>(os, static_cast<std::uint32_t>(p->value.shape.size()));
        for (auto d : p->value.shape) write_le<std::uint64_t>(os, d);
        for (auto v : p->value.data) write_f32(os, static_cast<float>(v));
    }
    if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

encoder::Model load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic");
    const auto version = read_le<std::uint32_t>(is);
    if (version != kFormatVersion) throw std::runtime_error("checkpoint: unsupported version");
    const auto cfg_len = read_le<std::uint64_t>(is);
    std::string cfg_text(cfg_len, '\0');
    is.read(cfg_text.data(), static_cast<std::streamsize>(cfg_len));
    if (!is) throw std::runtime_error("checkpoint: truncated config");

    encoder::Model model(encoder::ModelConfig::from_json(cfg_text));
    while (true) {
        std::uint32_t name_len;
        {
            unsigned char buf[4];
            is.read(reinterpret_cast<char*>(buf), 4);
            if (is.eof()) break;
            if (!is) throw std::runtime_error("checkpoint: truncated tensor header");
            name_len = static_cast<std::uint32_t>(buf[0]) | (buf[1] << 8) | (buf[2] << 16) |
                       (static_cast<std::uint32_t>(buf[3]) << 24);
        }
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const auto rank = read_le<std::uint32_t>(is);
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = read_le<std::uint64_t>(is);
        auto& p = model.params().create(name, shape);
        for (auto& v : p.value.data) v = static_cast<double>(read_f32(is));
        if (!is) throw std::runtime_error("checkpoint: truncated tensor data");
    }
    return model;
}

}  // namespace svitt::checkpoint
