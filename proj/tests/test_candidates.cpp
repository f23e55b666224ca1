#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "madet/candidates.hpp"
#include "madet/gradient.hpp"

using namespace madet;

namespace {

// paints a 1-px-thick rectangle outline with the given value
void paint_outline(ScalarField& f, int x0, int y0, int w, int h, double v) {
    for (int x = x0; x < x0 + w; ++x) {
        f.at(x, y0) = v;
        f.at(x, y0 + h - 1) = v;
    }
    for (int y = y0; y < y0 + h; ++y) {
        f.at(x0, y) = v;
        f.at(x0 + w - 1, y) = v;
    }
}

BinaryMask full_mask(int w, int h) { return BinaryMask(w, h, 1); }

}  // namespace

TEST_CASE("thin ring survives the shape predicates as one candidate", "[candidates]") {
    ScalarField wo(40, 40, 1.0);
    paint_outline(wo, 10, 10, 15, 15, 0.0);  // area 56, extent 0.249, euler 0
    auto cands = extract_candidates({wo}, {2.0}, full_mask(40, 40));
    REQUIRE(cands.size() == 1);
    const Candidate& c = cands[0];
    CHECK(c.id == 0);
    CHECK(c.pixels.size() == 56);
    CHECK(c.cx == Catch::Approx(17.0));
    CHECK(c.cy == Catch::Approx(17.0));
    CHECK(c.source_scale == 2.0);
    // present at every threshold with equal area, so the earliest one wins
    CHECK(c.source_threshold == Catch::Approx(0.1));
    CHECK(c.props.euler == 0);
    CHECK(c.props.extent < 0.3);
}

TEST_CASE("solid blob without a hole is rejected", "[candidates]") {
    ScalarField wo(40, 40, 1.0);
    for (int y = 12; y < 20; ++y)
        for (int x = 12; x < 20; ++x) wo.at(x, y) = 0.0;
    auto cands = extract_candidates({wo}, {1.0}, full_mask(40, 40));
    CHECK(cands.empty());
}

TEST_CASE("elongated outline fails eccentricity and extent", "[candidates]") {
    ScalarField wo(120, 20, 1.0);
    paint_outline(wo, 5, 6, 100, 6, 0.0);  // area 208, extent 0.347, ecc near 1
    auto cands = extract_candidates({wo}, {1.0}, full_mask(120, 20));
    CHECK(cands.empty());
}

TEST_CASE("overlapping regions merge and keep the largest contributor source", "[candidates]") {
    const int n = 44;
    ScalarField a(n, n, 1.0), b(n, n, 1.0);
    paint_outline(a, 10, 10, 15, 15, 0.0);  // area 56
    paint_outline(b, 10, 10, 19, 19, 0.0);  // area 72, shares the corner pixel
    auto cands = extract_candidates({a, b}, {1.0, 2.0}, full_mask(n, n));
    REQUIRE(cands.size() == 1);
    const Candidate& c = cands[0];
    CHECK(c.source_scale == 2.0);  // bigger ring dominates
    // union minus the shared top row and left column
    CHECK(c.pixels.size() == 56 + 72 - 15 - 14);
    // pixel list is sorted and duplicate free
    for (std::size_t i = 1; i < c.pixels.size(); ++i) {
        bool ordered = c.pixels[i - 1].y < c.pixels[i].y ||
                       (c.pixels[i - 1].y == c.pixels[i].y &&
                        c.pixels[i - 1].x < c.pixels[i].x);
        REQUIRE(ordered);
    }
}

TEST_CASE("disjoint rings come back sorted by centroid", "[candidates]") {
    ScalarField wo(60, 60, 1.0);
    paint_outline(wo, 30, 32, 15, 15, 0.0);  // lower ring
    paint_outline(wo, 5, 5, 15, 15, 0.0);    // upper ring
    auto cands = extract_candidates({wo}, {1.0}, full_mask(60, 60));
    REQUIRE(cands.size() == 2);
    CHECK(cands[0].id == 0);
    CHECK(cands[0].cy == Catch::Approx(12.0));
    CHECK(cands[1].id == 1);
    CHECK(cands[1].cy == Catch::Approx(39.0));
    CHECK(cands[1].cx == Catch::Approx(37.0));
}

TEST_CASE("mask cutting a ring open removes the hole and the candidate", "[candidates]") {
    ScalarField wo(40, 40, 1.0);
    paint_outline(wo, 10, 10, 15, 15, 0.0);
    BinaryMask m = full_mask(40, 40);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 18; ++x) m.at(x, y) = 0;  // open the left side
    CHECK(extract_candidates({wo}, {1.0}, m).empty());

    // masking an unrelated corner changes nothing
    BinaryMask m2 = full_mask(40, 40);
    for (int y = 35; y < 40; ++y)
        for (int x = 35; x < 40; ++x) m2.at(x, y) = 0;
    CHECK(extract_candidates({wo}, {1.0}, m2).size() == 1);
}

TEST_CASE("per scale normalization makes thresholds affine invariant", "[candidates]") {
    ScalarField wo(40, 40, 7.0);
    paint_outline(wo, 10, 10, 15, 15, 5.0);  // raw values far above 1
    auto with_norm = extract_candidates({wo}, {1.0}, full_mask(40, 40));
    REQUIRE(with_norm.size() == 1);
    CHECK(with_norm[0].pixels.size() == 56);

    ExtractionConfig raw;
    raw.per_scale_normalization = false;
    CHECK(extract_candidates({wo}, {1.0}, full_mask(40, 40), raw).empty());
}

TEST_CASE("narrowing the threshold range keeps early candidates", "[candidates]") {
    ScalarField wo(40, 40, 1.0);
    paint_outline(wo, 10, 10, 15, 15, 0.0);
    ExtractionConfig cfg;
    cfg.t_end = 0.5;
    auto cands = extract_candidates({wo}, {1.0}, full_mask(40, 40), cfg);
    REQUIRE(cands.size() == 1);
    CHECK(cands[0].pixels.size() == 56);
}

TEST_CASE("dark dot produces one ring candidate around its center", "[candidates]") {
    // end to end: image -> weight aggregation -> extraction. The dot needs a
    // sharp rim: a soft blob spreads its gradient over a band whose annulus is
    // too filled to pass the extent test.
    const int n = 64, c = 32;
    ScalarField img(n, n, 0.7);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double r = std::hypot(x - c, y - c);
            img.at(x, y) -= 0.5 * std::clamp(4.5 - r, 0.0, 1.0);
        }
    GradientConfig gcfg;
    gcfg.scales = {1.0, 2.0};
    AggregateResult agg = aggregate_weights(img, gcfg);
    auto cands = extract_candidates(agg.wo, gcfg.scales, full_mask(n, n));
    REQUIRE(cands.size() == 1);
    const Candidate& cand = cands[0];
    CHECK(cand.cx == Catch::Approx(c).margin(1.0));
    CHECK(cand.cy == Catch::Approx(c).margin(1.0));
    CHECK(cand.props.min_x < c);
    CHECK(cand.props.max_x > c);
    CHECK(cand.props.min_y < c);
    CHECK(cand.props.max_y > c);
    CHECK(cand.props.euler <= 0);
    CHECK(cand.source_scale == 1.0);
    CHECK(cand.pixels.size() >= 20);
    CHECK(cand.pixels.size() <= 40);
}
