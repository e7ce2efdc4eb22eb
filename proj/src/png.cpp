// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#include "svitt/png.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace svitt::png {

namespace {

constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4],
               const std::vector<std::uint8_t>& data) {
    put_u32(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const auto crc = crc32(0, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start));
    put_u32(out, static_cast<std::uint32_t>(crc));
}

std::vector<std::uint8_t> deflate_all(const std::vector<std::uint8_t>& raw) {
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> out(bound);
    if (compress2(out.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw std::runtime_error("png: deflate failed");
    out.resize(bound);
    return out;
}

std::vector<std::uint8_t> inflate_all(const std::vector<std::uint8_t>& comp,
                                      std::size_t expected) {
    std::vector<std::uint8_t> out(expected);
    uLongf len = static_cast<uLongf>(expected);
    if (uncompress(out.data(), &len, comp.data(), static_cast<uLong>(comp.size())) != Z_OK ||
        len != expected)
        throw std::runtime_error("png: inflate failed");
    return out;
}

std::uint8_t paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return static_cast<std::uint8_t>(a);
    if (pb <= pc) return static_cast<std::uint8_t>(b);
    return static_cast<std::uint8_t>(c);
}

}  // namespace

void write_rgb(const std::string& path, const Image& img) {
    if (img.rgb.size() != img.width * img.height * 3)
        throw std::invalid_argument("png: pixel buffer size mismatch");
    const std::size_t stride = img.width * 3;
    std::vector<std::uint8_t> raw;
    raw.reserve((stride + 1) * img.height);
    for (std::size_t y = 0; y < img.height; ++y) {
        raw.push_back(0);  // filter: none
        raw.insert(raw.end(), img.rgb.begin() + y * stride, img.rgb.begin() + (y + 1) * stride);
    }
    std::vector<std::uint8_t> ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(img.width));
    put_u32(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: truecolor
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);

    std::vector<std::uint8_t> out(kSig, kSig + 8);
    put_chunk(out, "IHDR", ihdr);
    put_chunk(out, "IDAT", deflate_all(raw));
    put_chunk(out, "IEND", {});

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("png: cannot open for writing: " + path);
    os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!os) throw std::runtime_error("png: write failed: " + path);
}

Image read_rgb(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("png: cannot open: " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
    if (buf.size() < 8 || std::memcmp(buf.data(), kSig, 8) != 0)
        throw std::runtime_error("png: bad signature");

    Image img;
    std::vector<std::uint8_t> idat;
    std::size_t pos = 8;
    while (pos + 8 <= buf.size()) {
        const std::uint32_t len = get_u32(buf.data() + pos);
        if (pos + 12 + len > buf.size()) throw std::runtime_error("png: truncated chunk");
        const char* type = reinterpret_cast<const char*>(buf.data() + pos + 4);
        const std::uint8_t* data = buf.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            img.width = get_u32(data);
            img.height = get_u32(data + 4);
            if (data[8] != 8 || data[9] != 2 || data[12] != 0)
                throw std::runtime_error("png: only 8-bit non-interlaced RGB supported");
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (img.width == 0 || img.height == 0) throw std::runtime_error("png: missing IHDR");

    const std::size_t stride = img.width * 3;
    const auto raw = inflate_all(idat, (stride + 1) * img.height);
    img.rgb.assign(stride * img.height, 0);
    for (std::size_t y = 0; y < img.height; ++y) {
        const std::uint8_t filter = raw[y * (stride + 1)];
        const std::uint8_t* src = raw.data() + y * (stride + 1) + 1;
        std::uint8_t* dst = img.rgb.data() + y * stride;
        const std::uint8_t* up = y > 0 ? dst - stride : nullptr;
        for (std::size_t x = 0; x < stride; ++x) {
            const int left = x >= 3 ? dst[x - 3] : 0;
            const int above = up ? up[x] : 0;
            const int corner = (up && x >= 3) ? up[x - 3] : 0;
            int v = src[x];
            switch (filter) {
                case 0: break;
                case 1: v += left; break;
                case 2: v += above; break;
                case 3: v += (left + above) / 2; break;
                case 4: v += paeth(left, above, corner); break;
                default: throw std::runtime_error("png: bad filter byte");
            }
            dst[x] = static_cast<std::uint8_t>(v & 0xff);
        }
    }
    return img;
}

}  // namespace svitt::png
