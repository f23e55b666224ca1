#pragma once

#include <vector>

#include "madet/field.hpp"
#include "madet/labeling.hpp"
#include "madet/util.hpp"

namespace madet {

struct FovConfig {
    double threshold = 0.06;  // mean channel intensity, on the [0,1] scale
};

// Field-of-view mask: threshold the channel mean, keep the largest 4-connected
// component, fill enclosed holes. Result is one component without holes.
inline BinaryMask fov_mask(const RgbImage& img, const FovConfig& cfg = {}) {
    require_input(img.width > 0 && img.height > 0, "fov_mask: empty image");
    BinaryMask m(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double mean = (img.at(x, y, 0) + img.at(x, y, 1) + img.at(x, y, 2)) /
                          (3.0 * 255.0);
            m.at(x, y) = mean > cfg.threshold ? 1 : 0;
        }
    }

    Labeling lab = label_mask(m, 4);
    if (lab.count == 0) return m;  // nothing above threshold
    std::vector<std::size_t> area(lab.count + 1, 0);
    for (auto l : lab.label) ++area[l];
    area[0] = 0;
    int best = 1;
    for (int l = 2; l <= lab.count; ++l)
        if (area[l] > area[best]) best = l;  // ties keep the first in scan order
    for (std::size_t i = 0; i < m.m.size(); ++i)
        m.m[i] = lab.label[i] == best ? 1 : 0;

    // Background components that do not touch the border are holes.
    Labeling bg = label_components(m.width, m.height, 4,
                                   [&](int x, int y) { return m.at(x, y) == 0; });
    std::vector<std::uint8_t> touches_border(bg.count + 1, 0);
    for (int x = 0; x < m.width; ++x) {
        if (bg.at(x, 0)) touches_border[bg.at(x, 0)] = 1;
        if (bg.at(x, m.height - 1)) touches_border[bg.at(x, m.height - 1)] = 1;
    }
    for (int y = 0; y < m.height; ++y) {
        if (bg.at(0, y)) touches_border[bg.at(0, y)] = 1;
        if (bg.at(m.width - 1, y)) touches_border[bg.at(m.width - 1, y)] = 1;
    }
    for (std::size_t i = 0; i < m.m.size(); ++i)
        if (bg.label[i] != 0 && !touches_border[bg.label[i]]) m.m[i] = 1;
    return m;
}

// Longest side of the mask's bounding box; used to scale size parameters that
// are quoted for a reference field-of-view diameter.
inline int fov_diameter(const BinaryMask& m) {
    int minx = m.width, maxx = -1, miny = m.height, maxy = -1;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(x, y)) {
                if (x < minx) minx = x;
                if (x > maxx) maxx = x;
                if (y < miny) miny = y;
                if (y > maxy) maxy = y;
            }
    if (maxx < 0) return 0;
    return std::max(maxx - minx + 1, maxy - miny + 1);
}

}  // namespace madet
