#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "madet/field.hpp"
#include "madet/gradient.hpp"
#include "madet/util.hpp"

namespace madet {

enum class BlobShape { gaussian, annulus, ellipse };
enum class SceneBackground { flat, gradient, speckle };

// Planted lesion. `radius` is the gaussian scale radius, the ring's inner rim
// radius, or the ellipse major semi-axis depending on shape.
struct SceneBlob {
    double x = 0.0, y = 0.0;
    double radius = 3.0;
    double depth = 0.5;
    BlobShape shape = BlobShape::gaussian;
    double ratio = 1.0;  // ellipse minor/major semi-axis ratio
    double angle = 0.0;  // ellipse major-axis angle, radians
};

struct SceneVessel {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    double width = 3.0;
    double depth = 0.3;
};

struct SceneSpec {
    int width = 128, height = 128;
    SceneBackground background = SceneBackground::flat;
    double base = 0.7;         // background level
    double tilt = 0.2;         // gradient background: total diagonal drop
    double speckle_amp = 0.05; // speckle background: noise amplitude pre-smoothing
    std::vector<SceneBlob> blobs;
    std::vector<SceneVessel> vessels;
    std::uint64_t seed = 1;
};

struct TruthBlob {
    double x = 0.0, y = 0.0, radius = 0.0;
};

struct SceneResult {
    RgbImage image;
    std::vector<TruthBlob> truth;
};

inline void validate(const SceneSpec& s) {
    require_input(s.width >= 8 && s.height >= 8, "scene: size below 8 px");
    require_input(s.base > 0.0 && s.base <= 1.0, "scene: background level outside (0,1]");
    require_input(s.speckle_amp >= 0.0, "scene: negative speckle amplitude");
    for (const SceneBlob& b : s.blobs) {
        require_input(b.x >= 0.0 && b.x < s.width && b.y >= 0.0 && b.y < s.height,
                      "scene: blob center outside image");
        require_input(b.depth > 0.0 && b.depth <= 1.0, "scene: blob depth outside (0,1]");
        require_input(b.radius > 0.0, "scene: blob radius not positive");
        require_input(b.ratio > 0.0 && b.ratio <= 1.0,
                      "scene: ellipse ratio outside (0,1]");
    }
    for (const SceneVessel& v : s.vessels) {
        require_input(v.width > 0.0, "scene: vessel width not positive");
        require_input(v.depth > 0.0 && v.depth <= 1.0,
                      "scene: vessel depth outside (0,1]");
    }
}

namespace detail {

inline double blob_profile(const SceneBlob& b, double px, double py) {
    double dx = px - b.x, dy = py - b.y;
    switch (b.shape) {
        case BlobShape::gaussian: {
            double s = b.radius / 2.0;
            return std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
        }
        case BlobShape::annulus: {
            double d = std::hypot(dx, dy);
            double rise = std::clamp(d - (b.radius - 0.5), 0.0, 1.0);
            double fall = std::clamp((b.radius + 2.5) - d, 0.0, 1.0);
            return std::min(rise, fall);
        }
        case BlobShape::ellipse: {
            double ca = std::cos(b.angle), sa = std::sin(b.angle);
            double u = ca * dx + sa * dy, v = -sa * dx + ca * dy;
            double a = b.radius, bb = b.radius * b.ratio;
            double q = std::hypot(u / a, v / bb);
            // approximate signed distance to the outline, one-pixel soft rim
            return std::clamp((1.0 - q) * bb + 0.5, 0.0, 1.0);
        }
    }
    return 0.0;
}

inline double segment_distance(double px, double py, const SceneVessel& v) {
    double ex = v.x1 - v.x0, ey = v.y1 - v.y0;
    double len2 = ex * ex + ey * ey;
    double t = len2 <= 0.0
                   ? 0.0
                   : std::clamp(((px - v.x0) * ex + (py - v.y0) * ey) / len2, 0.0, 1.0);
    return std::hypot(px - (v.x0 + t * ex), py - (v.y0 + t * ey));
}

}  // namespace detail

inline SceneResult render(const SceneSpec& spec) {
    validate(spec);
    const int w = spec.width, h = spec.height;
    ScalarField f(w, h, spec.base);

    if (spec.background == SceneBackground::gradient) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                f.at(x, y) += spec.tilt * (double(x + y) / double(w + h - 2) - 0.5);
    } else if (spec.background == SceneBackground::speckle) {
        std::mt19937_64 rng(spec.seed);
        std::uniform_real_distribution<double> u(-spec.speckle_amp, spec.speckle_amp);
        ScalarField noise(w, h);
        for (double& n : noise.v) n = u(rng);
        auto s = smoothing_factor(1.0, 4.0);
        noise = correlate_cols(correlate_rows(noise, s), s);
        for (std::size_t i = 0; i < f.v.size(); ++i) f.v[i] += noise.v[i];
    }

    for (const SceneVessel& v : spec.vessels) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double d = detail::segment_distance(x, y, v);
                double p = std::clamp(v.width / 2.0 + 0.5 - d, 0.0, 1.0);
                f.at(x, y) -= v.depth * p;
            }
    }
    for (const SceneBlob& b : spec.blobs) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                f.at(x, y) -= b.depth * detail::blob_profile(b, x, y);
    }

    SceneResult out;
    out.image = RgbImage(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double v = std::clamp(f.at(x, y), 0.0, 1.0);
            auto byte = std::uint8_t(std::lround(v * 255.0));
            out.image.at(x, y, 0) = byte;
            out.image.at(x, y, 1) = byte;
            out.image.at(x, y, 2) = byte;
        }
    out.truth.reserve(spec.blobs.size());
    for (const SceneBlob& b : spec.blobs) out.truth.push_back({b.x, b.y, b.radius});
    return out;
}

inline SceneSpec scene_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("scene: bad json: ") + e.what());
    }
    static const std::vector<std::string> top{
        "width", "height", "background", "base",    "tilt",
        "speckle_amp", "seed",   "blobs",      "vessels"};
    for (auto it = j.begin(); it != j.end(); ++it)
        require_input(std::find(top.begin(), top.end(), it.key()) != top.end(),
                      "scene: unknown key " + it.key());
    SceneSpec s;
    try {
        s.width = j.value("width", s.width);
        s.height = j.value("height", s.height);
        if (j.contains("background")) {
            std::string b = j["background"];
            if (b == "flat") s.background = SceneBackground::flat;
            else if (b == "gradient") s.background = SceneBackground::gradient;
            else if (b == "speckle") s.background = SceneBackground::speckle;
            else throw input_error("scene: unknown background " + b);
        }
        s.base = j.value("base", s.base);
        s.tilt = j.value("tilt", s.tilt);
        s.speckle_amp = j.value("speckle_amp", s.speckle_amp);
        s.seed = j.value("seed", s.seed);
        for (const auto& bj : j.value("blobs", nlohmann::json::array())) {
            SceneBlob b;
            b.x = bj.at("x");
            b.y = bj.at("y");
            b.radius = bj.value("radius", b.radius);
            b.depth = bj.value("depth", b.depth);
            if (bj.contains("shape")) {
                std::string sh = bj["shape"];
                if (sh == "gaussian") b.shape = BlobShape::gaussian;
                else if (sh == "annulus") b.shape = BlobShape::annulus;
                else if (sh == "ellipse") b.shape = BlobShape::ellipse;
                else throw input_error("scene: unknown shape " + sh);
            }
            b.ratio = bj.value("ratio", b.ratio);
            b.angle = bj.value("angle", b.angle);
            s.blobs.push_back(b);
        }
        for (const auto& vj : j.value("vessels", nlohmann::json::array())) {
            SceneVessel v;
            v.x0 = vj.at("x0");
            v.y0 = vj.at("y0");
            v.x1 = vj.at("x1");
            v.y1 = vj.at("y1");
            v.width = vj.value("width", v.width);
            v.depth = vj.value("depth", v.depth);
            s.vessels.push_back(v);
        }
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("scene: bad field: ") + e.what());
    }
    validate(s);
    return s;
}

}  // namespace madet
