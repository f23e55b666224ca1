#pragma once

#include <cmath>
#include <vector>

#include "madet/field.hpp"
#include "madet/util.hpp"

namespace madet {

struct PreprocessConfig {
    int window_radius = 50;   // square window half-side; quoted for ~2000 px FOV
    double epsilon = 1e-4;    // std floor for flat neighbourhoods
    double clip = 3.0;        // z-scores clamp to +-clip before rescaling
};

// Local z-score normalization over a square window restricted to the mask,
// clamped and affinely rescaled so the output lies in [0,1]. Pixels outside
// the mask take the neutral value 0.5. Integral images keep this O(W*H).
inline ScalarField normalize_illumination(const ScalarField& in,
                                          const PreprocessConfig& cfg = {}) {
    require_input(cfg.window_radius >= 1, "normalize: window_radius must be >= 1");
    require_input(cfg.epsilon > 0.0 && cfg.clip > 0.0,
                  "normalize: epsilon and clip must be positive");
    const int w = in.width, h = in.height;
    ScalarField out(w, h, 0.5);
    out.mask = in.mask;

    // (w+1)x(h+1) integrals of value, value^2 and mask count over masked pixels.
    std::vector<double> s1(std::size_t(w + 1) * (h + 1), 0.0);
    std::vector<double> s2(std::size_t(w + 1) * (h + 1), 0.0);
    std::vector<std::int64_t> cnt(std::size_t(w + 1) * (h + 1), 0);
    for (int y = 0; y < h; ++y) {
        double row1 = 0.0, row2 = 0.0;
        std::int64_t rowc = 0;
        for (int x = 0; x < w; ++x) {
            if (in.masked(x, y)) {
                double val = in.at(x, y);
                row1 += val;
                row2 += val * val;
                ++rowc;
            }
            std::size_t here = std::size_t(y + 1) * (w + 1) + (x + 1);
            std::size_t above = std::size_t(y) * (w + 1) + (x + 1);
            s1[here] = s1[above] + row1;
            s2[here] = s2[above] + row2;
            cnt[here] = cnt[above] + rowc;
        }
    }
    auto box = [&](const auto& tab, int x0, int y0, int x1, int y1) {
        // inclusive box sums; caller guarantees clipped coordinates
        return tab[std::size_t(y1 + 1) * (w + 1) + (x1 + 1)] -
               tab[std::size_t(y0) * (w + 1) + (x1 + 1)] -
               tab[std::size_t(y1 + 1) * (w + 1) + x0] +
               tab[std::size_t(y0) * (w + 1) + x0];
    };

    const int r = cfg.window_radius;
    parallel_for(std::size_t(h), [&](std::size_t ylo, std::size_t yhi) {
        for (std::size_t y = ylo; y < yhi; ++y) {
            int y0 = std::max(0, int(y) - r), y1 = std::min(h - 1, int(y) + r);
            for (int x = 0; x < w; ++x) {
                if (!in.masked(x, int(y))) continue;
                int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
                std::int64_t n = box(cnt, x0, int(y0), x1, int(y1));
                double sum = box(s1, x0, int(y0), x1, int(y1));
                double sumsq = box(s2, x0, int(y0), x1, int(y1));
                double mean = sum / double(n);
                double var = sumsq / double(n) - mean * mean;
                double sd = std::sqrt(std::max(0.0, var));
                double z = (in.at(x, int(y)) - mean) / std::max(sd, cfg.epsilon);
                z = std::clamp(z, -cfg.clip, cfg.clip);
                out.at(x, int(y)) = (z + cfg.clip) / (2.0 * cfg.clip);
            }
        }
    });
    return out;
}

}  // namespace madet
