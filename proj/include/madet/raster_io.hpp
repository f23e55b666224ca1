#pragma once

#include <png.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "madet/field.hpp"
#include "madet/util.hpp"

namespace madet {

namespace detail {

inline std::string lower_ext(const std::string& path) {
    auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string e = path.substr(dot + 1);
    for (auto& c : e) c = char(std::tolower(static_cast<unsigned char>(c)));
    return e;
}

// Reads one whitespace-delimited token, skipping '#' comments (PNM headers).
inline std::string pnm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
        } else if (!std::isspace(c)) {
            tok.push_back(char(c));
            while ((c = in.get()) != EOF && !std::isspace(c)) tok.push_back(char(c));
            return tok;
        }
    }
    return tok;
}

}  // namespace detail

// ---- PNG (8-bit RGB via libpng's simplified API) ---------------------------

inline RgbImage load_png(const std::string& path) {
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str()))
        throw input_error("cannot read PNG " + path + ": " + png.message);
    png.format = PNG_FORMAT_RGB;
    RgbImage img{int(png.width), int(png.height)};
    if (!png_image_finish_read(&png, nullptr, img.rgb.data(), 0, nullptr)) {
        std::string msg = png.message;
        png_image_free(&png);
        throw input_error("cannot decode PNG " + path + ": " + msg);
    }
    return img;
}

inline void save_png(const std::string& path, const RgbImage& img) {
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    png.width = png_uint_32(img.width);
    png.height = png_uint_32(img.height);
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, img.rgb.data(), 0, nullptr))
        throw input_error("cannot write PNG " + path + ": " + png.message);
}

// ---- binary PNM (P6 colour, P5 grayscale, maxval 255) ----------------------

inline RgbImage load_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open " + path);
    std::string magic = detail::pnm_token(in);
    bool color = magic == "P6";
    if (!color && magic != "P5")
        throw input_error(path + ": unsupported PNM magic '" + magic + "'");
    long long w = parse_int(detail::pnm_token(in), path);
    long long h = parse_int(detail::pnm_token(in), path);
    long long maxval = parse_int(detail::pnm_token(in), path);
    require_input(w > 0 && h > 0 && w < 100000 && h < 100000,
                  path + ": bad PNM dimensions");
    require_input(maxval == 255, path + ": only maxval 255 is supported");
    RgbImage img{int(w), int(h)};
    std::size_t n = std::size_t(w) * h;
    if (color) {
        in.read(reinterpret_cast<char*>(img.rgb.data()), std::streamsize(n * 3));
        require_input(std::size_t(in.gcount()) == n * 3, path + ": truncated PNM");
    } else {
        std::vector<std::uint8_t> gray(n);
        in.read(reinterpret_cast<char*>(gray.data()), std::streamsize(n));
        require_input(std::size_t(in.gcount()) == n, path + ": truncated PNM");
        for (std::size_t i = 0; i < n; ++i)
            img.rgb[3 * i] = img.rgb[3 * i + 1] = img.rgb[3 * i + 2] = gray[i];
    }
    return img;
}

inline void save_ppm(const std::string& path, const RgbImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.rgb.data()),
              std::streamsize(img.rgb.size()));
    if (!out) throw input_error("write failed: " + path);
}

inline RgbImage load_image(const std::string& path) {
    std::string ext = detail::lower_ext(path);
    if (ext == "png") return load_png(path);
    if (ext == "ppm" || ext == "pgm") return load_pnm(path);
    throw input_error(path + ": unsupported image extension '" + ext + "'");
}

inline void save_image(const std::string& path, const RgbImage& img) {
    std::string ext = detail::lower_ext(path);
    if (ext == "png") return save_png(path, img);
    if (ext == "ppm") return save_ppm(path, img);
    throw input_error(path + ": unsupported image extension '" + ext + "'");
}

// ---- raw field dump --------------------------------------------------------
// 16-byte header: magic "LCFF", u32 width, u32 height, u32 reserved (zero),
// all little endian, followed by width*height float32 values in row-major
// order. Masks round-trip as 0/1-valued fields.

inline void save_field(const std::string& path, const ScalarField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path);
    const char magic[4] = {'L', 'C', 'F', 'F'};
    std::uint32_t header[3] = {std::uint32_t(f.width), std::uint32_t(f.height), 0};
    out.write(magic, 4);
    out.write(reinterpret_cast<const char*>(header), 12);
    std::vector<float> data(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) data[i] = float(f.v[i]);
    out.write(reinterpret_cast<const char*>(data.data()),
              std::streamsize(data.size() * sizeof(float)));
    if (!out) throw input_error("write failed: " + path);
}

inline ScalarField load_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open " + path);
    char magic[4];
    std::uint32_t header[3];
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(header), 12);
    require_input(bool(in) && std::memcmp(magic, "LCFF", 4) == 0,
                  path + ": not a field dump (bad magic)");
    require_input(header[0] > 0 && header[1] > 0 &&
                      header[0] < 100000 && header[1] < 100000,
                  path + ": bad field dimensions");
    ScalarField f{int(header[0]), int(header[1])};
    std::vector<float> data(f.size());
    in.read(reinterpret_cast<char*>(data.data()),
            std::streamsize(data.size() * sizeof(float)));
    require_input(std::size_t(in.gcount()) == data.size() * sizeof(float),
                  path + ": truncated field dump");
    for (std::size_t i = 0; i < f.size(); ++i) f.v[i] = data[i];
    return f;
}

inline void save_mask(const std::string& path, const BinaryMask& m) {
    ScalarField f(m.width, m.height);
    for (std::size_t i = 0; i < m.m.size(); ++i) f.v[i] = m.m[i] ? 1.0 : 0.0;
    save_field(path, f);
}

inline BinaryMask load_mask(const std::string& path) {
    ScalarField f = load_field(path);
    BinaryMask m(f.width, f.height);
    for (std::size_t i = 0; i < f.v.size(); ++i) m.m[i] = f.v[i] > 0.5 ? 1 : 0;
    return m;
}

}  // namespace madet
