#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "madet/util.hpp"

namespace madet {

// Row-major scalar raster. x indexes columns, y indexes rows; idx = y*width+x.
// mask marks pixels that belong to the region of interest (field of view).
struct ScalarField {
    int width = 0;
    int height = 0;
    std::vector<double> v;
    std::vector<std::uint8_t> mask;

    ScalarField() = default;
    ScalarField(int w, int h, double fill = 0.0, std::uint8_t m = 1)
        : width(w), height(h), v(std::size_t(w) * h, fill),
          mask(std::size_t(w) * h, m) {
        require(w >= 0 && h >= 0, "ScalarField: negative size");
    }

    bool inside(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    std::size_t idx(int x, int y) const { return std::size_t(y) * width + x; }
    double& at(int x, int y) { return v[idx(x, y)]; }
    double at(int x, int y) const { return v[idx(x, y)]; }
    bool masked(int x, int y) const { return mask[idx(x, y)] != 0; }
    std::size_t size() const { return v.size(); }
};

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> m;

    BinaryMask() = default;
    BinaryMask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), m(std::size_t(w) * h, fill) {}

    bool inside(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    std::uint8_t& at(int x, int y) { return m[std::size_t(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return m[std::size_t(y) * width + x]; }
    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : m) n += (b != 0);
        return n;
    }
};

// Interleaved 8-bit RGB, same layout as ScalarField.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    RgbImage() = default;
    RgbImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), rgb(std::size_t(w) * h * 3, fill) {}

    std::uint8_t& at(int x, int y, int c) {
        return rgb[3 * (std::size_t(y) * width + x) + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return rgb[3 * (std::size_t(y) * width + x) + c];
    }
};

// Green channel scaled to [0,1]; full mask (the field of view is applied later).
inline ScalarField green_channel(const RgbImage& img) {
    ScalarField f(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            f.at(x, y) = img.at(x, y, 1) / 255.0;
    return f;
}

inline bool all_finite(const ScalarField& f) {
    for (double x : f.v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace madet
