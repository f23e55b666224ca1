#pragma once

#include <cstdint>
#include <vector>

#include "madet/field.hpp"
#include "madet/util.hpp"

namespace madet {

// Connected-component labels: 0 = background, components numbered 1..count in
// raster-scan order of their first pixel (deterministic).
struct Labeling {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> label;
    int count = 0;

    std::int32_t at(int x, int y) const { return label[std::size_t(y) * width + x]; }
};

template <typename FgFn>
Labeling label_components(int width, int height, int connectivity, FgFn&& is_fg) {
    require(connectivity == 4 || connectivity == 8, "label_components: connectivity");
    Labeling out;
    out.width = width;
    out.height = height;
    out.label.assign(std::size_t(width) * height, 0);
    static const int dx8[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static const int dy8[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    const int ndirs = connectivity == 4 ? 4 : 8;
    std::vector<std::int32_t> stack;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            std::size_t i = std::size_t(y) * width + x;
            if (out.label[i] != 0 || !is_fg(x, y)) continue;
            const std::int32_t id = ++out.count;
            out.label[i] = id;
            stack.push_back(std::int32_t(i));
            while (!stack.empty()) {
                std::int32_t p = stack.back();
                stack.pop_back();
                int px = p % width, py = p / width;
                for (int d = 0; d < ndirs; ++d) {
                    int nx = px + dx8[d], ny = py + dy8[d];
                    if (nx < 0 || nx >= width || ny < 0 || ny >= height) continue;
                    std::size_t ni = std::size_t(ny) * width + nx;
                    if (out.label[ni] == 0 && is_fg(nx, ny)) {
                        out.label[ni] = id;
                        stack.push_back(std::int32_t(ni));
                    }
                }
            }
        }
    }
    return out;
}

inline Labeling label_mask(const BinaryMask& m, int connectivity) {
    return label_components(m.width, m.height, connectivity,
                            [&](int x, int y) { return m.at(x, y) != 0; });
}

}  // namespace madet
