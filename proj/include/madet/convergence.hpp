#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "madet/field.hpp"
#include "madet/gradient.hpp"
#include "madet/util.hpp"

namespace madet {

// Sampling support shared by the three convergence filters: num_lines radial
// directions, a sliding band band_width samples deep, band start radii between
// r_min and r_max (the shared-radius filter starts at 0 instead).
struct SupportConfig {
    int num_lines = 16;       // divisible by 4
    int band_width = 2;
    int r_min = 1;
    int r_max = 15;           // quoted for ~2000 px FOV
    double gradient_sigma = 1.0;
    double truncation = 4.0;
    double gain = 1.0;

    void validate() const {
        require_input(num_lines >= 8 && num_lines % 4 == 0,
                      "support: num_lines must be a multiple of 4, at least 8");
        require_input(band_width >= 1, "support: band_width must be >= 1");
        require_input(r_min >= 0 && r_min < r_max, "support: need 0 <= r_min < r_max");
        require_input(gradient_sigma > 0.0, "support: gradient_sigma must be positive");
    }
};

struct FilterPoint {
    double response = 0.0;
    double radius = 0.0;
};

struct FilterOutput {
    ScalarField response;
    ScalarField radius;
};

namespace detail {

// Gradient sampled off-grid; samples outside [0,w-1]x[0,h-1] are invalid and
// contribute zero while still counting toward the normalization.
inline bool sample_gradient(const GradientField& g, double sx, double sy,
                            double& gx, double& gy) {
    if (!(sx >= 0.0 && sx <= g.width - 1 && sy >= 0.0 && sy <= g.height - 1))
        return false;
    int x0 = std::min(int(sx), g.width - 2 >= 0 ? g.width - 2 : 0);
    int y0 = std::min(int(sy), g.height - 2 >= 0 ? g.height - 2 : 0);
    int x1 = std::min(x0 + 1, g.width - 1);
    int y1 = std::min(y0 + 1, g.height - 1);
    double tx = sx - x0, ty = sy - y0;
    std::size_t i00 = g.idx(x0, y0), i10 = g.idx(x1, y0);
    std::size_t i01 = g.idx(x0, y1), i11 = g.idx(x1, y1);
    double w00 = (1 - tx) * (1 - ty), w10 = tx * (1 - ty);
    double w01 = (1 - tx) * ty, w11 = tx * ty;
    gx = w00 * g.gx[i00] + w10 * g.gx[i10] + w01 * g.gx[i01] + w11 * g.gx[i11];
    gy = w00 * g.gy[i00] + w10 * g.gy[i10] + w01 * g.gy[i01] + w11 * g.gy[i11];
    return true;
}

// Per-point sampling workspace: band sums over every line and start radius.
// Convergence cosine: angle between the sampled gradient and the ray pointing
// back at the query point, so an inward-pointing gradient scores +1.
struct SupportSums {
    int num_lines = 0;
    int radii = 0;  // r_max + band_width samples per line
    std::vector<double> prefix;  // (radii+1) per line

    void compute(const GradientField& g, double px, double py,
                 const SupportConfig& cfg, const std::vector<double>& dir_sin,
                 const std::vector<double>& dir_cos) {
        num_lines = cfg.num_lines;
        radii = cfg.r_max + cfg.band_width;
        prefix.assign(std::size_t(num_lines) * (radii + 1), 0.0);
        for (int i = 0; i < num_lines; ++i) {
            const double s = dir_sin[i], c = dir_cos[i];
            double* pre = &prefix[std::size_t(i) * (radii + 1)];
            double acc = 0.0;
            pre[0] = 0.0;
            for (int m = 0; m < radii; ++m) {
                double gx, gy;
                double value = 0.0;
                if (sample_gradient(g, px + m * s, py + m * c, gx, gy)) {
                    double norm2 = gx * gx + gy * gy;
                    if (norm2 >= 1e-24)
                        value = -(gx * s + gy * c) / std::sqrt(norm2);
                }
                acc += value;
                pre[m + 1] = acc;
            }
        }
    }

    double band(int line, int r, int width) const {
        const double* pre = &prefix[std::size_t(line) * (radii + 1)];
        return pre[r + width] - pre[r];
    }
};

}  // namespace detail

class ConvergenceFilters {
public:
    explicit ConvergenceFilters(const SupportConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        dir_sin_.resize(cfg_.num_lines);
        dir_cos_.resize(cfg_.num_lines);
        for (int i = 0; i < cfg_.num_lines; ++i) {
            double theta = 2.0 * std::numbers::pi * i / cfg_.num_lines;
            dir_sin_[i] = std::sin(theta);
            dir_cos_[i] = std::cos(theta);
        }
    }

    const SupportConfig& config() const { return cfg_; }

    // Shared-radius filter: one band start for all lines, searched from 0.
    FilterPoint arf_at(const GradientField& g, double px, double py) const {
        detail::SupportSums sums;
        sums.compute(g, px, py, cfg_, dir_sin_, dir_cos_);
        return arf_from(sums);
    }

    // Sliding band: every line maximizes its own band start in [r_min, r_max].
    FilterPoint sbf_at(const GradientField& g, double px, double py) const {
        detail::SupportSums sums;
        sums.compute(g, px, py, cfg_, dir_sin_, dir_cos_);
        return sbf_from(sums);
    }

    // Elliptical variant: for each orientation, two opposite-line axis pairs
    // and the four-fold mirrored line groups each share one band start.
    FilterPoint sef_at(const GradientField& g, double px, double py) const {
        detail::SupportSums sums;
        sums.compute(g, px, py, cfg_, dir_sin_, dir_cos_);
        return sef_from(sums);
    }

    struct PointValues {
        double f_arf = 0, f_sbf = 0, f_sef = 0;
        double r_arf = 0, r_sbf = 0, r_sef = 0;
    };

    // Per-direction band argmax radii of the sliding band filter.
    std::vector<double> sbf_direction_radii(const GradientField& g, double px,
                                            double py) const {
        detail::SupportSums sums;
        sums.compute(g, px, py, cfg_, dir_sin_, dir_cos_);
        const int d = cfg_.band_width;
        std::vector<double> radii(cfg_.num_lines);
        for (int i = 0; i < cfg_.num_lines; ++i) {
            double best = 0.0;
            int best_r = 0;
            for (int r = cfg_.r_min; r <= cfg_.r_max; ++r) {
                double b = sums.band(i, r, d);
                if (r == cfg_.r_min || b > best) {
                    best = b;
                    best_r = r;
                }
            }
            radii[i] = best_r;
        }
        return radii;
    }

    PointValues all_at(const GradientField& g, double px, double py) const {
        detail::SupportSums sums;
        sums.compute(g, px, py, cfg_, dir_sin_, dir_cos_);
        FilterPoint a = arf_from(sums), s = sbf_from(sums), e = sef_from(sums);
        return {a.response, s.response, e.response, a.radius, s.radius, e.radius};
    }

    FilterOutput arf(const GradientField& g) const { return dense(g, 0); }
    FilterOutput sbf(const GradientField& g) const { return dense(g, 1); }
    FilterOutput sef(const GradientField& g) const { return dense(g, 2); }

private:
    FilterOutput dense(const GradientField& g, int which) const {
        FilterOutput out;
        out.response = ScalarField(g.width, g.height);
        out.radius = ScalarField(g.width, g.height);
        parallel_for(std::size_t(g.height), [&](std::size_t ylo, std::size_t yhi) {
            detail::SupportSums sums;
            for (std::size_t y = ylo; y < yhi; ++y)
                for (int x = 0; x < g.width; ++x) {
                    sums.compute(g, x, double(y), cfg_, dir_sin_, dir_cos_);
                    FilterPoint p = which == 0   ? arf_from(sums)
                                    : which == 1 ? sbf_from(sums)
                                                 : sef_from(sums);
                    out.response.at(x, int(y)) = p.response;
                    out.radius.at(x, int(y)) = p.radius;
                }
        });
        return out;
    }

    FilterPoint arf_from(const detail::SupportSums& sums) const {
        const int d = cfg_.band_width;
        double best = 0.0;
        int best_r = 0;
        for (int r = 0; r <= cfg_.r_max; ++r) {
            double total = 0.0;
            for (int i = 0; i < cfg_.num_lines; ++i) total += sums.band(i, r, d);
            if (r == 0 || total > best) {
                best = total;
                best_r = r;
            }
        }
        return finish(best / (double(cfg_.num_lines) * d), double(best_r));
    }

    FilterPoint sbf_from(const detail::SupportSums& sums) const {
        const int d = cfg_.band_width;
        double total = 0.0;
        double radius_sum = 0.0;
        for (int i = 0; i < cfg_.num_lines; ++i) {
            double best = 0.0;
            int best_r = 0;
            for (int r = cfg_.r_min; r <= cfg_.r_max; ++r) {
                double b = sums.band(i, r, d);
                if (r == cfg_.r_min || b > best) {
                    best = b;
                    best_r = r;
                }
            }
            total += best;
            radius_sum += best_r;
        }
        return finish(total / (double(cfg_.num_lines) * d),
                      radius_sum / cfg_.num_lines);
    }

    FilterPoint sef_from(const detail::SupportSums& sums) const {
        const int d = cfg_.band_width;
        const int n = cfg_.num_lines;
        const int quarter = n / 4, half = n / 2;
        double best_score = 0.0;
        double best_major = 0.0, best_minor = 0.0;
        for (int j = 0; j < quarter; ++j) {
            double major_r = 0.0, minor_r = 0.0;
            double score = 0.0;
            // two axis pairs, then the mirrored four-line groups
            for (int axis = 0; axis < 2; ++axis) {
                int a = (j + axis * quarter) % n;
                int b = (a + half) % n;
                double best = 0.0;
                int best_r = 0;
                for (int r = cfg_.r_min; r <= cfg_.r_max; ++r) {
                    double v = sums.band(a, r, d) + sums.band(b, r, d);
                    if (r == cfg_.r_min || v > best) {
                        best = v;
                        best_r = r;
                    }
                }
                score += best;
                (axis == 0 ? major_r : minor_r) = best_r;
            }
            for (int i = 1; i < quarter; ++i) {
                int g0 = (j + i) % n;
                int g1 = ((j - i + half) % n + n) % n;
                int g2 = (j + i + half) % n;
                int g3 = ((j - i + n) % n + n) % n;
                double best = 0.0;
                for (int r = cfg_.r_min; r <= cfg_.r_max; ++r) {
                    double v = sums.band(g0, r, d) + sums.band(g1, r, d) +
                               sums.band(g2, r, d) + sums.band(g3, r, d);
                    if (r == cfg_.r_min || v > best) best = v;
                }
                score += best;
            }
            if (j == 0 || score > best_score) {
                best_score = score;
                best_major = major_r;
                best_minor = minor_r;
            }
        }
        return finish(best_score / (double(n) * d), (best_major + best_minor) / 2.0);
    }

    FilterPoint finish(double response, double radius) const {
        require(response > -1.0 - 1e-9 && response < 1.0 + 1e-9,
                "convergence: response outside [-1, 1]");
        return {response, radius};
    }

    SupportConfig cfg_;
    std::vector<double> dir_sin_, dir_cos_;
};

struct PointXY {
    double x = 0.0;
    double y = 0.0;
};

// Convenience path: gradient field from the image, then all three filters at
// the given (possibly fractional) points.
inline std::vector<ConvergenceFilters::PointValues> lcf_at_points(
    const ScalarField& img, const std::vector<PointXY>& points,
    const SupportConfig& cfg) {
    for (const PointXY& p : points)
        require_input(p.x >= 0.0 && p.x <= img.width - 1 && p.y >= 0.0 &&
                          p.y <= img.height - 1,
                      "lcf_at_points: query point outside the image");
    ConvergenceFilters filters(cfg);
    GradientField g = gradient_field(img, cfg.gradient_sigma, cfg.truncation, cfg.gain);
    std::vector<ConvergenceFilters::PointValues> out(points.size());
    parallel_for(points.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            out[i] = filters.all_at(g, points[i].x, points[i].y);
    });
    return out;
}

}  // namespace madet
