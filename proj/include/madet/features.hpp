#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "madet/candidates.hpp"
#include "madet/convergence.hpp"
#include "madet/csv.hpp"
#include "madet/field.hpp"
#include "madet/util.hpp"

namespace madet {

inline constexpr int kNumFeatures = 29;

// Canonical feature names, in the fixed order used by every file format and
// model in this project. Indices are zero-based, so names()[0] describes f1.
inline const std::array<const char*, kNumFeatures>& feature_names() {
    static const std::array<const char*, kNumFeatures> names = {
        "Gc",    "Gmean", "Gmax",  "Gmin",  "GNmean", "GNmax", "GNmin",
        "SArea", "SConA", "SSol",  "SExt",  "SPer",   "SCirD", "SAxiA",
        "SAxiB", "SEcc",  "SEul",  "FNARF", "FNSBF",  "FNSEF", "RNARF",
        "RNSBF", "RGSEF", "FWARF", "FWSBF", "FWSEF",  "RWARF", "RWSBF",
        "RWSEF"};
    return names;
}

using FeatureVector = std::array<double, kNumFeatures>;

struct FeatureRow {
    int id = 0;
    double cx = 0.0, cy = 0.0;
    int label = 0;  // +1 lesion, -1 non-lesion, 0 unlabeled
    FeatureVector f{};
};

struct NormStats {
    std::array<double, kNumFeatures> mean{};
    std::array<double, kNumFeatures> stddev{};

    NormStats() { stddev.fill(1.0); }  // identity transform until trained
};

struct FeatureMatrix {
    std::vector<FeatureRow> rows;
    NormStats stats;
    bool normalized = false;
};

// f1..f7: center intensity, candidate-pixel statistics, and statistics over a
// centroid-centered square whose area is three times the candidate's. Even
// side lengths extend one pixel less on the right and bottom; the square is
// clipped to the image.
inline std::array<double, 7> intensity_features(const ScalarField& img,
                                                const Candidate& c) {
    require(!c.pixels.empty(), "intensity_features: candidate has no pixels");
    const int cx = int(std::lround(c.cx));
    const int cy = int(std::lround(c.cy));
    require(cx >= 0 && cx < img.width && cy >= 0 && cy < img.height,
            "intensity_features: centroid outside the image");
    std::array<double, 7> f{};
    f[0] = img.at(cx, cy);

    double sum = 0.0, mx = img.at(c.pixels[0].x, c.pixels[0].y), mn = mx;
    for (const Pixel& p : c.pixels) {
        double v = img.at(p.x, p.y);
        sum += v;
        mx = std::max(mx, v);
        mn = std::min(mn, v);
    }
    f[1] = sum / double(c.pixels.size());
    f[2] = mx;
    f[3] = mn;

    const int side = std::max(3, int(std::lround(std::sqrt(3.0 * c.props.area))));
    const int x0 = std::max(0, cx - (side - 1) / 2);
    const int y0 = std::max(0, cy - (side - 1) / 2);
    const int x1 = std::min(img.width - 1, cx - (side - 1) / 2 + side - 1);
    const int y1 = std::min(img.height - 1, cy - (side - 1) / 2 + side - 1);
    double nsum = 0.0, nmx = img.at(x0, y0), nmn = nmx;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double v = img.at(x, y);
            nsum += v;
            nmx = std::max(nmx, v);
            nmn = std::min(nmn, v);
        }
    f[4] = nsum / (double(x1 - x0 + 1) * double(y1 - y0 + 1));
    f[5] = nmx;
    f[6] = nmn;
    return f;
}

// f8..f17: the candidate's region properties in fixed order.
inline std::array<double, 10> shape_features(const Candidate& c) {
    const RegionProps& p = c.props;
    return {double(p.area), double(p.convex_area), p.solidity,    p.extent,
            p.perimeter,    p.equiv_diameter,      p.major_axis,  p.minor_axis,
            p.eccentricity, double(p.euler)};
}

// Shared state for extracting features from many candidates of one image:
// both gradient fields are built once and reused per query point.
class FeatureExtractor {
  public:
    FeatureExtractor(ScalarField normalized, ScalarField weighted,
                     const SupportConfig& cfg)
        : norm_(std::move(normalized)),
          weighted_(std::move(weighted)),
          filters_(cfg),
          g_norm_(gradient_field(norm_, cfg.gradient_sigma, cfg.truncation,
                                 cfg.gain)),
          g_weighted_(gradient_field(weighted_, cfg.gradient_sigma,
                                     cfg.truncation, cfg.gain)) {
        require_input(norm_.width == weighted_.width &&
                          norm_.height == weighted_.height,
                      "features: normalized and weighted images differ in size");
    }

    // f18..f29: filter responses and radii at the candidate centroid, first on
    // the normalized image, then on the gradient-weighted one.
    std::array<double, 12> lcf_features(const Candidate& c) const {
        const int cx = int(std::lround(c.cx));
        const int cy = int(std::lround(c.cy));
        require_input(norm_.inside(cx, cy) && norm_.masked(cx, cy),
                      "lcf_features: candidate centroid outside the mask");
        auto n = filters_.all_at(g_norm_, c.cx, c.cy);
        auto w = filters_.all_at(g_weighted_, c.cx, c.cy);
        return {n.f_arf, n.f_sbf, n.f_sef, n.r_arf, n.r_sbf, n.r_sef,
                w.f_arf, w.f_sbf, w.f_sef, w.r_arf, w.r_sbf, w.r_sef};
    }

    FeatureVector features(const Candidate& c) const {
        FeatureVector f{};
        auto intensity = intensity_features(norm_, c);
        auto shape = shape_features(c);
        auto lcf = lcf_features(c);
        std::copy(intensity.begin(), intensity.end(), f.begin());
        std::copy(shape.begin(), shape.end(), f.begin() + 7);
        std::copy(lcf.begin(), lcf.end(), f.begin() + 17);
        for (double v : f)
            require(std::isfinite(v), "features: non-finite feature value");
        return f;
    }

  private:
    ScalarField norm_;
    ScalarField weighted_;
    ConvergenceFilters filters_;
    GradientField g_norm_;
    GradientField g_weighted_;
};

// Single-candidate convenience wrapper; batch callers should keep one
// FeatureExtractor per image instead.
inline std::array<double, 12> lcf_features(const ScalarField& normalized,
                                           const ScalarField& weighted,
                                           const Candidate& c,
                                           const SupportConfig& cfg) {
    return FeatureExtractor(normalized, weighted, cfg).lcf_features(c);
}

inline FeatureMatrix extract_features(const ScalarField& normalized,
                                      const ScalarField& weighted,
                                      const std::vector<Candidate>& candidates,
                                      const SupportConfig& cfg) {
    FeatureExtractor ex(normalized, weighted, cfg);
    FeatureMatrix m;
    m.rows.resize(candidates.size());
    parallel_for(candidates.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const Candidate& c = candidates[i];
            m.rows[i].id = c.id;
            m.rows[i].cx = c.cx;
            m.rows[i].cy = c.cy;
            m.rows[i].f = ex.features(c);
        }
    });
    return m;
}

// Column-wise z-scoring with the sample standard deviation. A constant column
// keeps stddev 1 and maps to exact zeros. The stats are stored on the matrix
// so a model can replay them on unseen candidates.
inline void normalize_features(FeatureMatrix& m) {
    require_input(m.rows.size() >= 2,
                  "normalize_features: need at least two rows");
    const double n = double(m.rows.size());
    for (int j = 0; j < kNumFeatures; ++j) {
        double lo = m.rows[0].f[j], hi = lo, sum = 0.0;
        for (const FeatureRow& r : m.rows) {
            lo = std::min(lo, r.f[j]);
            hi = std::max(hi, r.f[j]);
            sum += r.f[j];
        }
        if (lo == hi) {
            m.stats.mean[j] = lo;
            m.stats.stddev[j] = 1.0;
            continue;
        }
        const double mean = sum / n;
        double ss = 0.0;
        for (const FeatureRow& r : m.rows)
            ss += (r.f[j] - mean) * (r.f[j] - mean);
        m.stats.mean[j] = mean;
        m.stats.stddev[j] = std::sqrt(ss / (n - 1.0));
    }
    for (FeatureRow& r : m.rows)
        for (int j = 0; j < kNumFeatures; ++j)
            r.f[j] = (r.f[j] - m.stats.mean[j]) / m.stats.stddev[j];
    m.normalized = true;
}

inline void apply_normalization(FeatureVector& f, const NormStats& s) {
    for (int j = 0; j < kNumFeatures; ++j)
        f[j] = (f[j] - s.mean[j]) / s.stddev[j];
}

// Named feature subsets (zero-based indices). The 12-feature sets are the
// top-importance selections under each split criterion.
inline std::vector<int> feature_subset(const std::string& name) {
    auto range = [](int lo, int hi) {
        std::vector<int> out;
        for (int i = lo; i <= hi; ++i) out.push_back(i);
        return out;
    };
    if (name == "all") return range(0, 28);
    if (name == "intensity") return range(0, 6);
    if (name == "shape") return range(7, 16);
    if (name == "lcf") return range(17, 28);
    if (name == "intensity+lcf") {
        auto out = range(0, 6);
        auto lcf = range(17, 28);
        out.insert(out.end(), lcf.begin(), lcf.end());
        return out;
    }
    if (name == "gini12")
        return {1, 3, 4, 5, 6, 12, 20, 21, 24, 25, 27, 28};
    if (name == "deviance12")
        return {0, 1, 3, 4, 6, 16, 20, 21, 24, 25, 27, 28};
    if (name == "twoing12")
        return {1, 3, 4, 6, 9, 20, 21, 23, 24, 25, 27, 28};
    throw input_error(
        "unknown feature subset '" + name +
        "' (expected all, gini12, deviance12, twoing12, intensity, shape, "
        "lcf, intensity+lcf)");
}

// ---- CSV interchange -------------------------------------------------------

inline void write_feature_csv(const std::string& path, const FeatureMatrix& m) {
    std::vector<std::string> header = {"id", "cx", "cy", "label"};
    for (const char* n : feature_names()) header.push_back(n);
    std::vector<std::vector<std::string>> rows;
    rows.reserve(m.rows.size());
    for (const FeatureRow& r : m.rows) {
        std::vector<std::string> cells = {std::to_string(r.id),
                                          format_double(r.cx),
                                          format_double(r.cy),
                                          std::to_string(r.label)};
        for (double v : r.f) cells.push_back(format_double(v));
        rows.push_back(std::move(cells));
    }
    write_csv(path, header, rows);
}

inline FeatureMatrix read_feature_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    const int ci = t.require_column("id", path);
    const int cx = t.require_column("cx", path);
    const int cy = t.require_column("cy", path);
    const int cl = t.require_column("label", path);
    std::array<int, kNumFeatures> cols{};
    for (int j = 0; j < kNumFeatures; ++j)
        cols[j] = t.require_column(feature_names()[j], path);
    FeatureMatrix m;
    m.rows.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        FeatureRow r;
        r.id = int(parse_int(row.at(ci), path));
        r.cx = parse_double(row.at(cx), path);
        r.cy = parse_double(row.at(cy), path);
        r.label = int(parse_int(row.at(cl), path));
        for (int j = 0; j < kNumFeatures; ++j)
            r.f[j] = parse_double(row.at(cols[j]), path);
        m.rows.push_back(std::move(r));
    }
    return m;
}

}  // namespace madet
