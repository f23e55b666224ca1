#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "madet/features.hpp"
#include "madet/gradient.hpp"
#include "madet/preprocess.hpp"
#include "madet/synthetic.hpp"
#include "test_support.hpp"

using namespace madet;

namespace {

Candidate make_candidate(std::vector<Pixel> pixels, int id = 1) {
    std::sort(pixels.begin(), pixels.end(), [](const Pixel& a, const Pixel& b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    Candidate c;
    c.id = id;
    c.pixels = std::move(pixels);
    c.props = region_props(c.pixels);
    c.cx = c.props.cx;
    c.cy = c.props.cy;
    return c;
}

std::vector<Pixel> disk_pixels(int cx, int cy, double radius) {
    std::vector<Pixel> out;
    int r = int(std::ceil(radius));
    for (int y = cy - r; y <= cy + r; ++y)
        for (int x = cx - r; x <= cx + r; ++x)
            if (std::hypot(x - cx, y - cy) <= radius) out.push_back({x, y});
    return out;
}

}  // namespace

TEST_CASE("feature names are canonical", "[features]") {
    const auto& names = feature_names();
    REQUIRE(names.size() == 29);
    CHECK(std::string(names[0]) == "Gc");
    CHECK(std::string(names[6]) == "GNmin");
    CHECK(std::string(names[7]) == "SArea");
    CHECK(std::string(names[16]) == "SEul");
    CHECK(std::string(names[17]) == "FNARF");
    CHECK(std::string(names[22]) == "RGSEF");
    CHECK(std::string(names[23]) == "FWARF");
    CHECK(std::string(names[28]) == "RWSEF");
    std::set<std::string> uniq(names.begin(), names.end());
    CHECK(uniq.size() == 29);
}

TEST_CASE("constant field collapses the intensity features", "[features]") {
    ScalarField img(32, 32, 0.6);
    Candidate c = make_candidate(disk_pixels(16, 16, 3.0));
    auto f = intensity_features(img, c);
    // The means accumulate rounding crumbs; extrema and center are exact.
    for (int i : {0, 2, 3, 5, 6}) CHECK(f[i] == 0.6);
    CHECK(f[1] == Catch::Approx(0.6).margin(1e-12));
    CHECK(f[4] == Catch::Approx(0.6).margin(1e-12));
}

TEST_CASE("dark disk on a bright background", "[features]") {
    ScalarField img(64, 64, 0.8);
    auto pixels = disk_pixels(20, 20, 3.0);
    for (const Pixel& p : pixels) img.at(p.x, p.y) = 0.2;
    Candidate c = make_candidate(pixels);
    auto f = intensity_features(img, c);
    CHECK(f[0] == 0.2);  // Gc
    CHECK(f[1] == Catch::Approx(0.2).margin(1e-15));
    CHECK(f[2] == 0.2);  // Gmax: every candidate pixel is dark
    CHECK(f[3] == 0.2);  // Gmin
    CHECK(f[5] == 0.8);  // GNmax: the square outgrows the disk
    CHECK(f[6] == 0.2);  // GNmin
    CHECK(f[4] > 0.2);
    CHECK(f[4] < 0.8);

    // The neighborhood mean, recomputed by a direct scan of the documented
    // square: side round(sqrt(3 * area)), centered on the rounded centroid.
    int side = std::max(3, int(std::lround(std::sqrt(3.0 * c.props.area))));
    int x0 = 20 - (side - 1) / 2, y0 = 20 - (side - 1) / 2;
    double sum = 0.0;
    int count = 0;
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) {
            sum += img.at(x, y);
            ++count;
        }
    CHECK(f[4] == Catch::Approx(sum / count).margin(1e-12));
}

TEST_CASE("corner candidate gets a clipped neighborhood", "[features]") {
    ScalarField img(64, 64, 0.5);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) img.at(x, y) = 0.1 + 0.01 * x + 0.02 * y;
    std::vector<Pixel> pixels;
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 5; ++x) pixels.push_back({x, y});
    Candidate c = make_candidate(pixels);
    auto f = intensity_features(img, c);
    for (double v : f) CHECK(std::isfinite(v));

    // Brute scan of the clipped square: side 5 around the rounded centroid
    // (2, 1), truncated at the top edge.
    int side = std::max(3, int(std::lround(std::sqrt(30.0))));
    REQUIRE(side == 5);
    double sum = 0.0, mx = -1e9, mn = 1e9;
    int count = 0;
    for (int y = std::max(0, 1 - 2); y <= 1 + 2; ++y)
        for (int x = std::max(0, 2 - 2); x <= 2 + 2; ++x) {
            sum += img.at(x, y);
            mx = std::max(mx, img.at(x, y));
            mn = std::min(mn, img.at(x, y));
            ++count;
        }
    REQUIRE(count == 20);
    CHECK(f[4] == Catch::Approx(sum / count).margin(1e-12));
    CHECK(f[5] == mx);
    CHECK(f[6] == mn);
}

TEST_CASE("shape features copy the region properties in order", "[features]") {
    std::vector<Pixel> square;
    for (int y = 5; y < 15; ++y)
        for (int x = 5; x < 15; ++x) square.push_back({x, y});
    Candidate c = make_candidate(square);
    auto f = shape_features(c);
    CHECK(f[0] == 100.0);                                 // SArea
    CHECK(f[2] == 1.0);                                   // SSol: convex
    CHECK(f[3] == 1.0);                                   // SExt
    CHECK(f[5] == Catch::Approx(11.2838).margin(1e-3));   // SCirD
    CHECK(f[9] == 1.0);                                   // SEul

    std::vector<Pixel> ring;
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            if (x < 2 || x >= 6 || y < 2 || y >= 6) ring.push_back({x, y});
    auto g = shape_features(make_candidate(ring));
    CHECK(g[9] == 0.0);  // one hole
}

TEST_CASE("filter features respond to a synthetic lesion", "[features]") {
    SceneSpec spec;
    spec.width = 96;
    spec.height = 96;
    spec.blobs.push_back({48.0, 48.0, 4.0, 0.5, BlobShape::gaussian, 1.0, 0.0});
    ScalarField green = green_channel(render(spec).image);
    PreprocessConfig pcfg;
    pcfg.window_radius = 16;
    ScalarField norm = normalize_illumination(green, pcfg);
    ScalarField wos = aggregate_weights(green).wos;

    // The illumination-normalized halo peaks outside the blob, so its
    // convergent outer slope needs a search range past the blob radius.
    SupportConfig cfg;
    cfg.r_max = 12;
    FeatureExtractor ex(norm, wos, cfg);
    Candidate lesion = make_candidate(disk_pixels(48, 48, 3.0));
    Candidate background = make_candidate(disk_pixels(72, 20, 3.0), 2);
    auto fl = ex.lcf_features(lesion);
    auto fb = ex.lcf_features(background);

    for (int i : {0, 1, 2, 6, 7, 8}) {
        CHECK(fl[i] >= -1.0);
        CHECK(fl[i] <= 1.0);
    }
    CHECK(fl[3] >= 0.0);  // shared-radius argmax may sit at zero
    for (int i : {4, 5, 9, 10, 11}) {
        CHECK(fl[i] >= cfg.r_min);
        CHECK(fl[i] <= cfg.r_max);
    }
    // The lesion shows convergence on both images; flat background does not.
    CHECK(fl[0] > 0.9);
    CHECK(fl[6] > 0.9);
    CHECK(fl[6] > fb[6] + 0.2);

    auto both = ex.features(lesion);
    CHECK(both[17] == fl[0]);
    CHECK(both[28] == fl[11]);
    CHECK(both[0] == intensity_features(norm, lesion)[0]);

    ScalarField holed = norm;
    holed.mask[holed.idx(48, 48)] = 0;
    FeatureExtractor ex2(holed, wos, cfg);
    CHECK_THROWS_AS(ex2.lcf_features(lesion), input_error);
}

TEST_CASE("features are unchanged under integer translation", "[features]") {
    auto build = [](double bx, double by) {
        SceneSpec spec;
        spec.width = 96;
        spec.height = 96;
        spec.blobs.push_back({bx, by, 3.0, 0.5, BlobShape::gaussian, 1.0, 0.0});
        return green_channel(render(spec).image);
    };
    ScalarField a = build(44.0, 40.0);
    ScalarField b = build(49.0, 43.0);

    PreprocessConfig pcfg;
    pcfg.window_radius = 16;
    SupportConfig cfg;
    cfg.r_max = 8;
    FeatureExtractor ea(normalize_illumination(a, pcfg),
                        aggregate_weights(a).wos, cfg);
    FeatureExtractor eb(normalize_illumination(b, pcfg),
                        aggregate_weights(b).wos, cfg);
    auto fa = ea.features(make_candidate(disk_pixels(44, 40, 3.5)));
    auto fb = eb.features(make_candidate(disk_pixels(49, 43, 3.5)));
    for (int j = 0; j < kNumFeatures; ++j) {
        INFO("feature " << feature_names()[j]);
        CHECK(fa[j] == Catch::Approx(fb[j]).margin(1e-9));
    }
}

TEST_CASE("extraction is deterministic", "[features]") {
    SceneSpec spec;
    spec.width = 64;
    spec.height = 64;
    spec.background = SceneBackground::speckle;
    spec.seed = 7;
    spec.blobs.push_back({30.0, 30.0, 3.0, 0.5, BlobShape::gaussian, 1.0, 0.0});
    ScalarField green = green_channel(render(spec).image);
    ScalarField norm = normalize_illumination(green, {16, 1e-4, 3.0});
    ScalarField wos = aggregate_weights(green).wos;
    SupportConfig cfg;
    cfg.r_max = 6;
    std::vector<Candidate> cands = {make_candidate(disk_pixels(30, 30, 2.5), 1),
                                    make_candidate(disk_pixels(44, 18, 2.0), 2)};
    FeatureMatrix m1 = extract_features(norm, wos, cands, cfg);
    FeatureMatrix m2 = extract_features(norm, wos, cands, cfg);
    REQUIRE(m1.rows.size() == 2);
    CHECK(m1.rows[0].id == 1);
    CHECK(m1.rows[1].cx == cands[1].cx);
    for (std::size_t i = 0; i < m1.rows.size(); ++i)
        for (int j = 0; j < kNumFeatures; ++j)
            CHECK(m1.rows[i].f[j] == m2.rows[i].f[j]);
}

TEST_CASE("normalization z-scores each column", "[features]") {
    Rng rng(99);
    FeatureMatrix m;
    for (int i = 0; i < 5; ++i) {
        FeatureRow r;
        r.id = i;
        for (int j = 0; j < kNumFeatures; ++j) r.f[j] = rng.uniform(-3.0, 9.0);
        r.f[1] = 0.37;             // constant column
        r.f[2] = double(i) * 2.0;  // strictly increasing column
        m.rows.push_back(r);
    }
    FeatureMatrix raw = m;
    normalize_features(m);
    REQUIRE(m.normalized);

    for (const FeatureRow& r : m.rows) CHECK(r.f[1] == 0.0);
    CHECK(m.stats.mean[1] == 0.37);
    CHECK(m.stats.stddev[1] == 1.0);

    for (int j = 0; j < kNumFeatures; ++j) {
        if (j == 1) continue;
        double sum = 0.0;
        for (const FeatureRow& r : m.rows) sum += r.f[j];
        double mean = sum / 5.0;
        double ss = 0.0;
        for (const FeatureRow& r : m.rows) ss += (r.f[j] - mean) * (r.f[j] - mean);
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(std::sqrt(ss / 4.0) - 1.0) < 1e-9);
    }

    // Replaying the stored stats on the raw rows reproduces the matrix.
    for (std::size_t i = 0; i < raw.rows.size(); ++i) {
        FeatureVector f = raw.rows[i].f;
        apply_normalization(f, m.stats);
        for (int j = 0; j < kNumFeatures; ++j) CHECK(f[j] == m.rows[i].f[j]);
    }
}

TEST_CASE("two-point column lands on +-1/sqrt(2)", "[features]") {
    FeatureMatrix m;
    m.rows.resize(2);
    m.rows[0].f[0] = 1.0;
    m.rows[1].f[0] = 3.0;
    normalize_features(m);
    CHECK(m.rows[0].f[0] == Catch::Approx(-0.7071067811865475).margin(1e-12));
    CHECK(m.rows[1].f[0] == Catch::Approx(0.7071067811865475).margin(1e-12));

    FeatureMatrix single;
    single.rows.resize(1);
    CHECK_THROWS_AS(normalize_features(single), input_error);
    FeatureMatrix empty;
    CHECK_THROWS_AS(normalize_features(empty), input_error);
}

TEST_CASE("feature csv round-trips exactly", "[features]") {
    testsup::TempDir tmp;
    Rng rng(4242);
    FeatureMatrix m;
    for (int i = 0; i < 7; ++i) {
        FeatureRow r;
        r.id = i + 10;
        r.cx = rng.uniform(0.0, 500.0);
        r.cy = rng.uniform(0.0, 500.0);
        r.label = (i % 2 == 0) ? 1 : -1;
        for (int j = 0; j < kNumFeatures; ++j)
            r.f[j] = rng.uniform(-1e3, 1e3) * std::pow(10.0, i - 3);
        m.rows.push_back(r);
    }
    std::string path = tmp.path() + "/features.csv";
    write_feature_csv(path, m);
    FeatureMatrix back = read_feature_csv(path);
    REQUIRE(back.rows.size() == m.rows.size());
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        CHECK(back.rows[i].id == m.rows[i].id);
        CHECK(back.rows[i].cx == m.rows[i].cx);
        CHECK(back.rows[i].cy == m.rows[i].cy);
        CHECK(back.rows[i].label == m.rows[i].label);
        for (int j = 0; j < kNumFeatures; ++j)
            CHECK(back.rows[i].f[j] == m.rows[i].f[j]);
    }

    CsvTable t = read_csv(path);
    REQUIRE(t.header.size() == 33);
    CHECK(t.header[0] == "id");
    CHECK(t.header[4] == "Gc");
    CHECK(t.header[32] == "RWSEF");

    // A file missing one feature column is rejected by name.
    t.header[32] = "Bogus";
    write_csv(tmp.path() + "/bad.csv", t.header, t.rows);
    CHECK_THROWS_AS(read_feature_csv(tmp.path() + "/bad.csv"), input_error);
}

TEST_CASE("feature subsets resolve to index lists", "[features]") {
    auto all = feature_subset("all");
    REQUIRE(all.size() == 29);
    CHECK(all.front() == 0);
    CHECK(all.back() == 28);

    auto intensity = feature_subset("intensity");
    CHECK(intensity == std::vector<int>{0, 1, 2, 3, 4, 5, 6});
    CHECK(feature_subset("shape").size() == 10);
    CHECK(feature_subset("lcf").size() == 12);
    CHECK(feature_subset("intensity+lcf").size() == 19);

    CHECK(feature_subset("gini12") ==
          std::vector<int>{1, 3, 4, 5, 6, 12, 20, 21, 24, 25, 27, 28});
    CHECK(feature_subset("deviance12") ==
          std::vector<int>{0, 1, 3, 4, 6, 16, 20, 21, 24, 25, 27, 28});
    CHECK(feature_subset("twoing12") ==
          std::vector<int>{1, 3, 4, 6, 9, 20, 21, 23, 24, 25, 27, 28});
    CHECK_THROWS_AS(feature_subset("best"), input_error);
}
