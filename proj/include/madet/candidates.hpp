#pragma once

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <vector>

#include "madet/field.hpp"
#include "madet/labeling.hpp"
#include "madet/regionprops.hpp"
#include "madet/util.hpp"

namespace madet {

struct ExtractionConfig {
    double t_start = 0.1;
    double t_end = 1.0;
    double t_step = 0.05;
    int max_area = 300;              // keep area < max_area
    double max_eccentricity = 0.9;   // keep eccentricity < max_eccentricity
    int max_euler = 0;               // keep euler <= max_euler (has a hole)
    double max_extent = 0.3;         // keep extent < max_extent
    bool per_scale_normalization = true;

    std::vector<double> thresholds() const {
        require_input(t_step > 0.0 && t_end >= t_start, "extraction: bad threshold range");
        std::vector<double> t;
        int n = int(std::llround((t_end - t_start) / t_step)) + 1;
        for (int k = 0; k < n; ++k) t.push_back(t_start + k * t_step);
        return t;
    }
};

struct Candidate {
    int id = 0;
    double cx = 0.0, cy = 0.0;
    std::vector<Pixel> pixels;  // sorted by (y, x)
    double source_scale = 0.0;
    double source_threshold = 0.0;
    RegionProps props;
};

inline bool passes_shape_predicates(const RegionProps& p,
                                    const ExtractionConfig& cfg) {
    return p.area < cfg.max_area && p.eccentricity < cfg.max_eccentricity &&
           p.euler <= cfg.max_euler && p.extent < cfg.max_extent;
}

namespace detail {

struct RawRegion {
    std::vector<Pixel> pixels;
    int area = 0;
    double scale = 0.0;
    double threshold = 0.0;
};

struct UnionFind {
    std::vector<int> parent;
    int make() {
        parent.push_back(int(parent.size()));
        return parent.back();
    }
    int find(int i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    }
    void merge(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);  // keep older root
    }
};

}  // namespace detail

// Iterative-thresholding candidate extraction. Per scale the orientation-sum
// field is affinely rescaled to [0,1] over the mask, binarized under each
// threshold (value < t, inside the mask), and 8-connected components passing
// all four shape predicates are collected. Regions sharing at least one pixel
// across thresholds or scales merge transitively; the merged candidate keeps
// the (scale, threshold) of its largest contributor. Output is sorted by
// centroid y then x.
inline std::vector<Candidate> extract_candidates(
    const std::vector<ScalarField>& wo_per_scale,
    const std::vector<double>& scale_values, const BinaryMask& fov,
    const ExtractionConfig& cfg = {}) {
    require_input(wo_per_scale.size() == scale_values.size() && !wo_per_scale.empty(),
                  "extract_candidates: scale fields and values must align");
    const int w = wo_per_scale[0].width, h = wo_per_scale[0].height;
    require_input(fov.width == w && fov.height == h,
                  "extract_candidates: mask size mismatch");
    const auto thresholds = cfg.thresholds();

    std::vector<detail::RawRegion> regions;
    std::vector<std::uint8_t> bin(std::size_t(w) * h);
    for (std::size_t s = 0; s < wo_per_scale.size(); ++s) {
        const ScalarField& wo = wo_per_scale[s];
        require_input(wo.width == w && wo.height == h,
                      "extract_candidates: field size mismatch");
        double lo = 0.0, hi = 0.0;
        bool any = false;
        for (std::size_t i = 0; i < wo.size(); ++i) {
            if (!fov.m[i]) continue;
            if (!any || wo.v[i] < lo) lo = any ? std::min(lo, wo.v[i]) : wo.v[i];
            hi = any ? std::max(hi, wo.v[i]) : wo.v[i];
            any = true;
        }
        if (!any) continue;
        const double span = hi - lo;
        std::vector<double> norm(wo.v);
        if (cfg.per_scale_normalization)
            for (double& v : norm) v = span > 0.0 ? (v - lo) / span : 0.0;
        for (double t : thresholds) {
            for (std::size_t i = 0; i < norm.size(); ++i)
                bin[i] = (fov.m[i] && norm[i] < t) ? 1 : 0;
            Labeling lab = label_components(
                w, h, 8, [&](int x, int y) { return bin[std::size_t(y) * w + x] != 0; });
            auto comps = component_pixels(lab);
            for (auto& px : comps) {
                if (int(px.size()) >= cfg.max_area) continue;  // cheap reject
                RegionProps p = region_props(px);
                if (!passes_shape_predicates(p, cfg)) continue;
                regions.push_back({std::move(px), p.area, scale_values[s], t});
            }
        }
    }

    // transitive overlap merge via a pixel -> region-set map
    detail::UnionFind uf;
    std::unordered_map<std::int64_t, int> claimed;
    claimed.reserve(regions.size() * 8);
    for (std::size_t r = 0; r < regions.size(); ++r) {
        int id = uf.make();
        for (const Pixel& px : regions[r].pixels) {
            std::int64_t key = std::int64_t(px.y) * w + px.x;
            auto [it, inserted] = claimed.try_emplace(key, id);
            if (!inserted) uf.merge(it->second, id);
        }
    }

    std::unordered_map<int, std::vector<int>> groups;
    for (std::size_t r = 0; r < regions.size(); ++r)
        groups[uf.find(int(r))].push_back(int(r));

    std::vector<Candidate> out;
    out.reserve(groups.size());
    for (auto& [root, members] : groups) {
        Candidate c;
        std::vector<Pixel> pool;
        int best = members.front();  // members ascend, so ties keep emission order
        for (int r : members) {
            pool.insert(pool.end(), regions[r].pixels.begin(), regions[r].pixels.end());
            if (regions[r].area > regions[best].area) best = r;
        }
        std::sort(pool.begin(), pool.end(), [](const Pixel& a, const Pixel& b) {
            return a.y != b.y ? a.y < b.y : a.x < b.x;
        });
        pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
        c.pixels = std::move(pool);
        c.source_scale = regions[best].scale;
        c.source_threshold = regions[best].threshold;
        c.props = region_props(c.pixels);
        c.cx = c.props.cx;
        c.cy = c.props.cy;
        out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
        if (a.cy != b.cy) return a.cy < b.cy;
        if (a.cx != b.cx) return a.cx < b.cx;
        return a.pixels.size() < b.pixels.size();
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].id = int(i);
    return out;
}

}  // namespace madet
