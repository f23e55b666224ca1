#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <unordered_map>
#include <vector>

#include "madet/labeling.hpp"
#include "madet/util.hpp"

namespace madet {

struct Pixel {
    int x = 0;
    int y = 0;
    friend bool operator==(const Pixel&, const Pixel&) = default;
};

struct RegionProps {
    int area = 0;
    int convex_area = 0;
    double solidity = 0.0;
    double extent = 0.0;
    double perimeter = 0.0;
    double equiv_diameter = 0.0;
    double major_axis = 0.0;
    double minor_axis = 0.0;
    double eccentricity = 0.0;
    int euler = 0;
    double cx = 0.0, cy = 0.0;
    int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

namespace detail {

inline std::int64_t cross(const Pixel& o, const Pixel& a, const Pixel& b) {
    return std::int64_t(a.x - o.x) * (b.y - o.y) -
           std::int64_t(a.y - o.y) * (b.x - o.x);
}

// Monotone chain over pixel centers. With y growing downward the returned
// order keeps the interior on the cross >= 0 side of every edge.
inline std::vector<Pixel> convex_hull(std::vector<Pixel> pts) {
    std::sort(pts.begin(), pts.end(), [](const Pixel& a, const Pixel& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Pixel> hull(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

}  // namespace detail

// Shape measurements of one connected pixel set (8-connected foreground,
// 4-connected background). Conventions follow the usual blob-analysis ones:
// axes and eccentricity come from normalized second central moments with the
// 1/12 per-pixel correction, convex area counts pixel centers on or inside
// the hull, the perimeter is the exterior Moore-boundary tour length, and the
// Euler number is 1 minus the number of enclosed holes.
inline RegionProps region_props(const std::vector<Pixel>& pixels) {
    require(!pixels.empty(), "region_props: empty region");
    RegionProps p;
    p.area = int(pixels.size());

    p.min_x = p.max_x = pixels[0].x;
    p.min_y = p.max_y = pixels[0].y;
    double sx = 0.0, sy = 0.0;
    for (const Pixel& px : pixels) {
        p.min_x = std::min(p.min_x, px.x);
        p.max_x = std::max(p.max_x, px.x);
        p.min_y = std::min(p.min_y, px.y);
        p.max_y = std::max(p.max_y, px.y);
        sx += px.x;
        sy += px.y;
    }
    p.cx = sx / p.area;
    p.cy = sy / p.area;
    const int bw = p.max_x - p.min_x + 1;
    const int bh = p.max_y - p.min_y + 1;
    p.extent = double(p.area) / (double(bw) * bh);
    p.equiv_diameter = std::sqrt(4.0 * p.area / std::numbers::pi);

    // moments
    double uxx = 0.0, uyy = 0.0, uxy = 0.0;
    for (const Pixel& px : pixels) {
        double dx = px.x - p.cx, dy = px.y - p.cy;
        uxx += dx * dx;
        uyy += dy * dy;
        uxy += dx * dy;
    }
    uxx = uxx / p.area + 1.0 / 12.0;
    uyy = uyy / p.area + 1.0 / 12.0;
    uxy /= p.area;
    double common = std::sqrt((uxx - uyy) * (uxx - uyy) + 4.0 * uxy * uxy);
    p.major_axis = 2.0 * std::numbers::sqrt2 * std::sqrt(uxx + uyy + common);
    p.minor_axis =
        2.0 * std::numbers::sqrt2 * std::sqrt(std::max(0.0, uxx + uyy - common));
    double ratio = p.major_axis > 0.0 ? p.minor_axis / p.major_axis : 1.0;
    p.eccentricity = std::sqrt(std::max(0.0, 1.0 - ratio * ratio));

    // convex hull area
    auto hull = detail::convex_hull(pixels);
    if (hull.size() < 3) {
        p.convex_area = p.area;  // degenerate (collinear) region
    } else {
        int count = 0;
        for (int y = p.min_y; y <= p.max_y; ++y)
            for (int x = p.min_x; x <= p.max_x; ++x) {
                bool in = true;
                for (std::size_t e = 0; e < hull.size() && in; ++e)
                    in = detail::cross(hull[e], hull[(e + 1) % hull.size()],
                                       Pixel{x, y}) >= 0;
                count += in;
            }
        p.convex_area = count;
    }
    p.solidity = double(p.area) / double(p.convex_area);

    // local bitmap with a one-pixel margin, for the boundary walk and holes
    std::vector<std::uint8_t> bmp(std::size_t(bw + 2) * (bh + 2), 0);
    auto bit = [&](int x, int y) -> std::uint8_t& {
        return bmp[std::size_t(y + 1) * (bw + 2) + (x + 1)];
    };
    for (const Pixel& px : pixels) bit(px.x - p.min_x, px.y - p.min_y) = 1;

    // Euler number: with the margin the outer background is one component, so
    // every further 4-connected background component is a hole.
    Labeling fg = label_components(bw + 2, bh + 2, 8,
                                   [&](int x, int y) { return bmp[std::size_t(y) * (bw + 2) + x] != 0; });
    Labeling bg = label_components(bw + 2, bh + 2, 4,
                                   [&](int x, int y) { return bmp[std::size_t(y) * (bw + 2) + x] == 0; });
    p.euler = fg.count - (bg.count - 1);

    // Moore boundary tracing from the raster-first pixel; the tour closes when
    // the (pixel, backtrack) state repeats, and its step lengths (1 or sqrt 2)
    // sum to the perimeter.
    static const int dx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
    static const int dy[8] = {0, 1, 1, 1, 0, -1, -1, -1};
    static const double step[8] = {1.0, std::numbers::sqrt2, 1.0,
                                   std::numbers::sqrt2, 1.0, std::numbers::sqrt2,
                                   1.0, std::numbers::sqrt2};
    int sx0 = 0, sy0 = 0;
    bool found = false;
    for (int y = 0; y < bh && !found; ++y)
        for (int x = 0; x < bw && !found; ++x)
            if (bit(x, y)) {
                sx0 = x;
                sy0 = y;
                found = true;
            }
    auto fgq = [&](int x, int y) {
        return x >= -1 && x <= bw && y >= -1 && y <= bh && bit(x, y) != 0;
    };
    int cx0 = sx0, cy0 = sy0;
    int backdir = 4;  // arrived from the west
    std::unordered_map<std::int64_t, double> seen;  // state -> length when seen
    double length = 0.0;
    p.perimeter = 0.0;
    for (long long guard = 8LL * bw * bh + 64; guard > 0; --guard) {
        std::int64_t state =
            ((std::int64_t(cy0 + 1) * (bw + 2) + (cx0 + 1)) << 3) | backdir;
        auto it = seen.find(state);
        if (it != seen.end()) {
            p.perimeter = length - it->second;
            break;
        }
        seen.emplace(state, length);
        int d = (backdir + 1) % 8;
        int scanned = 0;
        while (scanned < 8 && !fgq(cx0 + dx[d], cy0 + dy[d])) {
            backdir = d;
            d = (d + 1) % 8;
            ++scanned;
        }
        if (scanned == 8) break;  // isolated pixel: no boundary tour
        length += step[d];
        cx0 += dx[d];
        cy0 += dy[d];
        // the last background scanned sits one step counter-clockwise of d,
        // relative to the pixel just left; re-express it from the new pixel
        int bx = (cx0 - dx[d]) + dx[(d + 7) % 8];
        int by = (cy0 - dy[d]) + dy[(d + 7) % 8];
        backdir = -1;
        for (int k = 0; k < 8; ++k)
            if (cx0 + dx[k] == bx && cy0 + dy[k] == by) {
                backdir = k;
                break;
            }
        require(backdir >= 0, "region_props: boundary walk lost its backtrack");
    }
    return p;
}

// Splits a labeling into per-component pixel lists (component ids 1..count).
inline std::vector<std::vector<Pixel>> component_pixels(const Labeling& lab) {
    std::vector<std::vector<Pixel>> out(lab.count);
    for (int y = 0; y < lab.height; ++y)
        for (int x = 0; x < lab.width; ++x) {
            std::int32_t l = lab.at(x, y);
            if (l > 0) out[l - 1].push_back(Pixel{x, y});
        }
    return out;
}

}  // namespace madet
