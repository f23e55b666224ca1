#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "madet/gradient.hpp"
#include "reference.hpp"
#include "test_support.hpp"

using namespace madet;

TEST_CASE("derivative kernel carries the printed prefactor", "[gradient]") {
    double sigma = 2.0;
    auto d = derivative_factor(sigma, 4.0);
    int h = kernel_half_width(sigma, 4.0);
    REQUIRE(int(d.size()) == 2 * h + 1);
    CHECK(d[h] == 0.0);  // odd kernel
    double c = 1.0 / std::sqrt(2.0 * std::numbers::pi * sigma * sigma);
    double expect = (1.0 / (sigma * sigma)) * c * std::exp(-1.0 / (2.0 * sigma * sigma));
    CHECK(d[h + 1] == Catch::Approx(expect).epsilon(1e-12));
    CHECK(d[h - 1] == Catch::Approx(-expect).epsilon(1e-12));
    // gain scales the prefactor
    auto d2 = derivative_factor(sigma, 4.0, 2.0);
    CHECK(d2[h + 1] == Catch::Approx(2.0 * expect).epsilon(1e-12));
}

TEST_CASE("reflect index mirrors with edge duplication", "[gradient]") {
    CHECK(reflect_index(0, 5) == 0);
    CHECK(reflect_index(-1, 5) == 0);
    CHECK(reflect_index(-2, 5) == 1);
    CHECK(reflect_index(4, 5) == 4);
    CHECK(reflect_index(5, 5) == 4);
    CHECK(reflect_index(7, 5) == 2);
    CHECK(reflect_index(-6, 5) == 4);  // double fold
}

TEST_CASE("gradient of a rising ramp is positive along x", "[gradient]") {
    ScalarField f(40, 30);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) f.at(x, y) = 0.01 * x;
    GradientField g = gradient_field(f, 1.0);
    CHECK(g.gx[f.idx(20, 15)] > 0.005);
    CHECK(std::abs(g.gy[f.idx(20, 15)]) < 1e-9);
}

TEST_CASE("magnitude is consistent across rotation angles", "[gradient]") {
    // isotropic Gaussian blob: the response norm must not depend on theta
    ScalarField f(48, 48);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x)
            f.at(x, y) = std::exp(-((x - 24.0) * (x - 24.0) + (y - 24.0) * (y - 24.0)) / 18.0);
    ScalarField m0 = gradient_magnitude(f, 2.0, 0.0);
    ScalarField m45 = gradient_magnitude(f, 2.0, std::numbers::pi / 4.0);
    for (std::size_t i = 0; i < m0.size(); ++i)
        CHECK(m0.v[i] == Catch::Approx(m45.v[i]).margin(1e-6));
}

TEST_CASE("weight transform spot values", "[gradient]") {
    ScalarField m(5, 1);
    m.v = {0.0, 1.0, 3.0, 0.5, 2.0};
    ScalarField w = weight_transform(m);
    CHECK(w.v[0] == 1.0);
    CHECK(w.v[1] == 0.0);
    CHECK(w.v[2] == Catch::Approx(-0.8).epsilon(1e-12));
    CHECK(w.v[3] == Catch::Approx(0.6).epsilon(1e-12));
    CHECK(w.v[4] == Catch::Approx(-0.6).epsilon(1e-12));
    for (double v : w.v) {
        CHECK(v <= 1.0);
        CHECK(v > -1.0);
    }
}

TEST_CASE("constant image has zero magnitude and weight one", "[gradient]") {
    ScalarField f(20, 20, 0.42);
    ScalarField m = gradient_magnitude(f, 3.0, 0.3);
    for (double v : m.v) CHECK(std::abs(v) < 1e-12);
    ScalarField w = weight_transform(m);
    for (double v : w.v) CHECK(v == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("single scale and orientation aggregate equals the composition exactly", "[gradient]") {
    Rng rng(21);
    ScalarField f = testsup::random_field(30, 26, rng);
    GradientConfig cfg;
    cfg.scales = {2.0};
    cfg.orientations = {0.7};
    AggregateResult agg = aggregate_weights(f, cfg);
    ScalarField ref = weight_transform(gradient_magnitude(f, 2.0, 0.7, cfg));
    REQUIRE(agg.wo.size() == 1);
    for (std::size_t i = 0; i < ref.size(); ++i) {
        CHECK(agg.wo[0].v[i] == ref.v[i]);  // bit-exact: same arithmetic
        CHECK(agg.wos.v[i] == ref.v[i]);
    }
}

TEST_CASE("orientation sum is bounded by the orientation count", "[gradient]") {
    Rng rng(22);
    ScalarField f = testsup::random_field(40, 40, rng);
    GradientConfig cfg;  // 5 scales, 7 orientations
    AggregateResult agg = aggregate_weights(f, cfg);
    REQUIRE(agg.wo.size() == 5);
    for (const auto& wo : agg.wo)
        for (double v : wo.v) {
            CHECK(v <= 7.0 + 1e-12);
            CHECK(v >= -7.0 - 1e-12);
        }
    for (double v : agg.wos.v) {
        CHECK(v <= 35.0 + 1e-12);
        CHECK(v >= -35.0 - 1e-12);
    }
}

TEST_CASE("default orientation set spans 0..pi/2 in seven steps", "[gradient]") {
    GradientConfig cfg;
    REQUIRE(cfg.orientations.size() == 7);
    CHECK(cfg.orientations.front() == 0.0);
    CHECK(cfg.orientations.back() == Catch::Approx(std::numbers::pi / 2.0));
    CHECK(cfg.orientations[1] == Catch::Approx(std::numbers::pi / 12.0));
}

TEST_CASE("dark dot turns into a donut in the aggregated weights", "[gradient]") {
    // dark Gaussian dot, sigma 2: the weight field dips in a ring around the
    // dot and recovers at its center
    const int n = 61, c = 30;
    ScalarField f(n, n, 0.8);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            f.at(x, y) -= 0.55 * std::exp(-((x - c) * (x - c) + (y - c) * (y - c)) / (2.0 * 2.0 * 2.0));
    GradientConfig cfg;
    AggregateResult agg = aggregate_weights(f, cfg);
    double center = agg.wos.at(c, c);
    double at_sigma = std::min(std::min(agg.wos.at(c + 2, c), agg.wos.at(c - 2, c)),
                               std::min(agg.wos.at(c, c + 2), agg.wos.at(c, c - 2)));
    double far = agg.wos.at(5, 5);
    CHECK(at_sigma < center);  // the donut dip
    CHECK(center < far + 1.0);
}

TEST_CASE("kernel truncation below three is rejected", "[gradient]") {
    CHECK_THROWS_AS(kernel_half_width(1.0, 2.0), input_error);
    CHECK_THROWS_AS(kernel_half_width(-1.0, 4.0), input_error);
}

TEST_CASE("separable passes match dense sampled kernels", "[gradient]") {
    // the row/column factorization must reproduce a literal 2d correlation
    // with pointwise-sampled steered kernels, for every scale and orientation
    Rng rng(1234);
    ScalarField img = testsup::random_field(64, 64, rng);
    GradientConfig cfg;
    for (double sigma : cfg.scales) {
        for (double theta : cfg.orientations) {
            ScalarField fast = gradient_magnitude(img, sigma, theta, cfg);
            ScalarField slow = reference::dense_gradient_magnitude(
                img, sigma, theta, cfg.truncation, cfg.gain);
            double worst = 0.0;
            for (std::size_t i = 0; i < fast.v.size(); ++i)
                worst = std::max(worst, std::abs(fast.v[i] - slow.v[i]));
            INFO("sigma " << sigma << " theta " << theta);
            CHECK(worst < 1e-5);
        }
    }
}

TEST_CASE("axis gradients match dense sampled kernels", "[gradient]") {
    Rng rng(4321);
    ScalarField img = testsup::random_field(48, 48, rng);
    GradientField fast = gradient_field(img, 1.5);
    GradientField slow = reference::dense_gradient(img, 1.5);
    double worst = 0.0;
    for (std::size_t i = 0; i < fast.gx.size(); ++i) {
        worst = std::max(worst, std::abs(fast.gx[i] - slow.gx[i]));
        worst = std::max(worst, std::abs(fast.gy[i] - slow.gy[i]));
    }
    CHECK(worst < 1e-5);
}
