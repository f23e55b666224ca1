#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "madet/field.hpp"
#include "madet/util.hpp"

namespace madet {

struct GradientConfig {
    std::vector<double> scales{1, 2, 3, 4, 5};
    std::vector<double> orientations = default_orientations(7);
    double truncation = 4.0;  // kernel half-width = ceil(truncation * sigma)
    double gain = 1.0;        // scales the 1/sqrt(2*pi*sigma^2) kernel prefactor

    static std::vector<double> default_orientations(int n) {
        require(n >= 1, "orientations: need at least one");
        std::vector<double> t(n);
        for (int i = 0; i < n; ++i)
            t[i] = n == 1 ? 0.0
                          : (std::numbers::pi / 2.0) * double(i) / double(n - 1);
        return t;
    }
};

inline int kernel_half_width(double sigma, double truncation) {
    require_input(sigma > 0.0 && truncation >= 3.0,
                  "kernel: sigma must be positive and truncation >= 3");
    return std::max(1, int(std::ceil(truncation * sigma)));
}

// 1-D factors of the first-order Gaussian derivative kernel. The x-derivative
// kernel is derivative_factor(x) * smoothing_factor(y); the prefactor
// 1/sqrt(2*pi*sigma^2) rides on the derivative factor. Taps are stored for
// offsets -h..h and applied as a sliding inner product, so a rising ramp
// yields a positive derivative.
inline std::vector<double> smoothing_factor(double sigma, double truncation) {
    int h = kernel_half_width(sigma, truncation);
    std::vector<double> k(2 * h + 1);
    for (int t = -h; t <= h; ++t)
        k[t + h] = std::exp(-double(t) * t / (2.0 * sigma * sigma));
    return k;
}

inline std::vector<double> derivative_factor(double sigma, double truncation,
                                             double gain = 1.0) {
    int h = kernel_half_width(sigma, truncation);
    double c = gain / std::sqrt(2.0 * std::numbers::pi * sigma * sigma);
    std::vector<double> k(2 * h + 1);
    for (int t = -h; t <= h; ++t)
        k[t + h] = (double(t) / (sigma * sigma)) * c *
                   std::exp(-double(t) * t / (2.0 * sigma * sigma));
    return k;
}

// Mirror with edge duplication: ..., v[1], v[0] | v[0], v[1], ...
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

inline ScalarField correlate_rows(const ScalarField& in,
                                  const std::vector<double>& k) {
    const int h = int(k.size() / 2);
    ScalarField out(in.width, in.height);
    out.mask = in.mask;
    parallel_for(std::size_t(in.height), [&](std::size_t ylo, std::size_t yhi) {
        for (std::size_t y = ylo; y < yhi; ++y) {
            const double* row = &in.v[std::size_t(y) * in.width];
            double* orow = &out.v[std::size_t(y) * in.width];
            for (int x = 0; x < in.width; ++x) {
                double acc = 0.0;
                for (int t = -h; t <= h; ++t)
                    acc += k[t + h] * row[reflect_index(x + t, in.width)];
                orow[x] = acc;
            }
        }
    });
    return out;
}

inline ScalarField correlate_cols(const ScalarField& in,
                                  const std::vector<double>& k) {
    const int h = int(k.size() / 2);
    ScalarField out(in.width, in.height);
    out.mask = in.mask;
    parallel_for(std::size_t(in.height), [&](std::size_t ylo, std::size_t yhi) {
        for (std::size_t y = ylo; y < yhi; ++y) {
            for (int x = 0; x < in.width; ++x) {
                double acc = 0.0;
                for (int t = -h; t <= h; ++t)
                    acc += k[t + h] * in.at(x, reflect_index(int(y) + t, in.height));
                out.at(x, int(y)) = acc;
            }
        }
    });
    return out;
}

struct GradientField {
    int width = 0;
    int height = 0;
    std::vector<double> gx, gy;

    GradientField() = default;
    GradientField(int w, int h)
        : width(w), height(h), gx(std::size_t(w) * h, 0.0),
          gy(std::size_t(w) * h, 0.0) {}

    std::size_t idx(int x, int y) const { return std::size_t(y) * width + x; }
};

inline GradientField gradient_field(const ScalarField& in, double sigma,
                                    double truncation = 4.0, double gain = 1.0) {
    auto d = derivative_factor(sigma, truncation, gain);
    auto s = smoothing_factor(sigma, truncation);
    ScalarField dx = correlate_cols(correlate_rows(in, d), s);
    ScalarField dy = correlate_cols(correlate_rows(in, s), d);
    GradientField g(in.width, in.height);
    g.gx = std::move(dx.v);
    g.gy = std::move(dy.v);
    return g;
}

// Norm of the responses to the theta-rotated derivative kernel pair. First
// derivatives of an isotropic Gaussian steer exactly, so the rotated responses
// are plane rotations of the axis-aligned ones.
inline ScalarField gradient_magnitude(const ScalarField& in, double sigma,
                                      double theta,
                                      const GradientConfig& cfg = {}) {
    GradientField g = gradient_field(in, sigma, cfg.truncation, cfg.gain);
    const double ct = std::cos(theta), st = std::sin(theta);
    ScalarField out(in.width, in.height);
    out.mask = in.mask;
    for (std::size_t i = 0; i < out.size(); ++i) {
        double a = ct * g.gx[i] + st * g.gy[i];
        double b = -st * g.gx[i] + ct * g.gy[i];
        out.v[i] = std::sqrt(a * a + b * b);
    }
    return out;
}

// (1 - m^2) / (1 + m^2): 1 on flat regions, 0 at unit gradient, -> -1 as the
// gradient grows. Output range (-1, 1].
inline ScalarField weight_transform(const ScalarField& m) {
    ScalarField out(m.width, m.height);
    out.mask = m.mask;
    for (std::size_t i = 0; i < m.size(); ++i) {
        double q = m.v[i] * m.v[i];
        out.v[i] = (1.0 - q) / (1.0 + q);
    }
    return out;
}

struct AggregateResult {
    std::vector<ScalarField> wo;  // per scale, summed over orientations
    ScalarField wos;              // summed over scales
};

// Orientation-summed, then scale-summed gradient weights. Per scale the two
// axis responses are computed once and steered per orientation; the per-pixel
// arithmetic matches weight_transform(gradient_magnitude(...)) exactly.
inline AggregateResult aggregate_weights(const ScalarField& in,
                                         const GradientConfig& cfg = {}) {
    require_input(!cfg.scales.empty() && !cfg.orientations.empty(),
                  "aggregate: need at least one scale and orientation");
    AggregateResult res;
    res.wos = ScalarField(in.width, in.height, 0.0);
    res.wos.mask = in.mask;
    for (double sigma : cfg.scales) {
        GradientField g = gradient_field(in, sigma, cfg.truncation, cfg.gain);
        ScalarField wo(in.width, in.height, 0.0);
        wo.mask = in.mask;
        for (double theta : cfg.orientations) {
            const double ct = std::cos(theta), st = std::sin(theta);
            parallel_for(wo.size(), [&](std::size_t lo, std::size_t hi) {
                for (std::size_t i = lo; i < hi; ++i) {
                    double a = ct * g.gx[i] + st * g.gy[i];
                    double b = -st * g.gx[i] + ct * g.gy[i];
                    double m = std::sqrt(a * a + b * b);
                    double q = m * m;
                    wo.v[i] += (1.0 - q) / (1.0 + q);
                }
            });
        }
        for (std::size_t i = 0; i < wo.size(); ++i) res.wos.v[i] += wo.v[i];
        res.wo.push_back(std::move(wo));
    }
    return res;
}

}  // namespace madet
