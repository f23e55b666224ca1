#pragma once

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "madet/candidates.hpp"
#include "madet/convergence.hpp"
#include "madet/ensemble.hpp"
#include "madet/evaluate.hpp"
#include "madet/features.hpp"
#include "madet/field.hpp"
#include "madet/fov.hpp"
#include "madet/gradient.hpp"
#include "madet/preprocess.hpp"
#include "madet/util.hpp"

namespace madet {

inline constexpr int kConfigVersion = 1;

// Aggregated stage settings. Sizes quoted in pixels refer to a field of view
// of reference_fov; detection rescales them to the measured FOV diameter
// when scale_with_fov is set.
struct PipelineConfig {
    FovConfig fov;
    PreprocessConfig preprocess;
    GradientConfig gradient;
    ExtractionConfig extraction;
    SupportConfig support;
    BoostConfig boost;
    std::string features = "all";  // named subset fed to training
    double reference_fov = 2000.0;
    bool scale_with_fov = true;
    double match_radius = 15.0;  // annotation radius overrides when larger
    int cv_repetitions = 1;

    void validate() const {
        require_input(fov.threshold > 0.0 && fov.threshold < 1.0,
                      "config: fov.threshold must lie in (0,1)");
        require_input(preprocess.window_radius >= 1,
                      "config: preprocess.window_radius must be >= 1");
        require_input(preprocess.epsilon > 0.0 && preprocess.clip > 0.0,
                      "config: preprocess.epsilon and clip must be positive");
        require_input(!gradient.scales.empty(), "config: no gradient scales");
        for (double s : gradient.scales)
            require_input(s > 0.0, "config: gradient scales must be positive");
        require_input(!gradient.orientations.empty(),
                      "config: no gradient orientations");
        require_input(gradient.truncation >= 3.0,
                      "config: gradient.truncation must be >= 3");
        extraction.thresholds();  // throws on a bad range
        require_input(extraction.max_area > 0, "config: extraction.max_area");
        support.validate();
        boost.validate();
        feature_subset(features);  // throws on an unknown name
        require_input(reference_fov > 0.0, "config: reference_fov");
        require_input(match_radius >= 0.0, "config: negative match_radius");
        require_input(cv_repetitions >= 1, "config: cv_repetitions must be >= 1");
    }
};

// ---- config file -----------------------------------------------------------

namespace detail {

inline std::string join_reals(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + format_double(v[i]);
    return s;
}

inline std::vector<double> split_reals(const std::string& s,
                                       const std::string& key) {
    std::vector<double> out;
    for (const std::string& tok : split(s, ','))
        out.push_back(parse_double(trim(tok), key));
    require_input(!out.empty(), key + ": empty list");
    return out;
}

inline bool parse_bool(const std::string& s, const std::string& key) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw input_error(key + ": expected true or false, got '" + s + "'");
}

inline long parse_long(const std::string& s, const std::string& key) {
    double v = parse_double(s, key);
    long n = std::lround(v);
    require_input(double(n) == v, key + ": expected an integer, got '" + s + "'");
    return n;
}

}  // namespace detail

inline std::string config_to_text(const PipelineConfig& c) {
    std::ostringstream out;
    out << "madet-config " << kConfigVersion << "\n";
    out << "fov.threshold = " << format_double(c.fov.threshold) << "\n";
    out << "preprocess.window_radius = " << c.preprocess.window_radius << "\n";
    out << "preprocess.epsilon = " << format_double(c.preprocess.epsilon) << "\n";
    out << "preprocess.clip = " << format_double(c.preprocess.clip) << "\n";
    out << "gradient.scales = " << detail::join_reals(c.gradient.scales) << "\n";
    out << "gradient.orientations = " << c.gradient.orientations.size() << "\n";
    out << "gradient.truncation = " << format_double(c.gradient.truncation)
        << "\n";
    out << "gradient.gain = " << format_double(c.gradient.gain) << "\n";
    out << "extraction.t_start = " << format_double(c.extraction.t_start) << "\n";
    out << "extraction.t_end = " << format_double(c.extraction.t_end) << "\n";
    out << "extraction.t_step = " << format_double(c.extraction.t_step) << "\n";
    out << "extraction.max_area = " << c.extraction.max_area << "\n";
    out << "extraction.max_eccentricity = "
        << format_double(c.extraction.max_eccentricity) << "\n";
    out << "extraction.max_euler = " << c.extraction.max_euler << "\n";
    out << "extraction.max_extent = " << format_double(c.extraction.max_extent)
        << "\n";
    out << "extraction.per_scale_normalization = "
        << (c.extraction.per_scale_normalization ? "true" : "false") << "\n";
    out << "support.num_lines = " << c.support.num_lines << "\n";
    out << "support.band_width = " << c.support.band_width << "\n";
    out << "support.r_min = " << c.support.r_min << "\n";
    out << "support.r_max = " << c.support.r_max << "\n";
    out << "support.gradient_sigma = " << format_double(c.support.gradient_sigma)
        << "\n";
    out << "support.truncation = " << format_double(c.support.truncation) << "\n";
    out << "boost.rounds = " << c.boost.num_rounds << "\n";
    out << "boost.max_splits = " << c.boost.max_splits << "\n";
    out << "boost.learning_rate = " << format_double(c.boost.learning_rate)
        << "\n";
    out << "boost.criterion = " << criterion_name(c.boost.criterion) << "\n";
    out << "boost.seed = " << c.boost.rng_seed << "\n";
    out << "boost.class_ratio = " << format_double(c.boost.class_ratio) << "\n";
    out << "features = " << c.features << "\n";
    out << "reference_fov = " << format_double(c.reference_fov) << "\n";
    out << "scale_with_fov = " << (c.scale_with_fov ? "true" : "false") << "\n";
    out << "match_radius = " << format_double(c.match_radius) << "\n";
    out << "cv_repetitions = " << c.cv_repetitions << "\n";
    return out.str();
}

// Parses the key = value form written by config_to_text. Comment lines start
// with '#'; unknown and repeated keys are rejected.
inline PipelineConfig config_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    bool header = false;
    PipelineConfig c;
    std::map<std::string, int> seen;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!header) {
            std::istringstream h(t);
            std::string magic;
            int version = -1;
            h >> magic >> version;
            require_input(magic == "madet-config",
                          "config: not a madet config file");
            require_input(version == kConfigVersion,
                          "config: unsupported version " + std::to_string(version));
            header = true;
            continue;
        }
        auto eq = t.find('=');
        require_input(eq != std::string::npos, "config: expected key = value: " + t);
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        require_input(seen.insert({key, 1}).second, "config: repeated key " + key);
        using detail::parse_bool;
        using detail::parse_long;
        if (key == "fov.threshold") c.fov.threshold = parse_double(val, key);
        else if (key == "preprocess.window_radius")
            c.preprocess.window_radius = int(parse_long(val, key));
        else if (key == "preprocess.epsilon")
            c.preprocess.epsilon = parse_double(val, key);
        else if (key == "preprocess.clip") c.preprocess.clip = parse_double(val, key);
        else if (key == "gradient.scales")
            c.gradient.scales = detail::split_reals(val, key);
        else if (key == "gradient.orientations")
            c.gradient.orientations =
                GradientConfig::default_orientations(int(parse_long(val, key)));
        else if (key == "gradient.truncation")
            c.gradient.truncation = parse_double(val, key);
        else if (key == "gradient.gain") c.gradient.gain = parse_double(val, key);
        else if (key == "extraction.t_start")
            c.extraction.t_start = parse_double(val, key);
        else if (key == "extraction.t_end")
            c.extraction.t_end = parse_double(val, key);
        else if (key == "extraction.t_step")
            c.extraction.t_step = parse_double(val, key);
        else if (key == "extraction.max_area")
            c.extraction.max_area = int(parse_long(val, key));
        else if (key == "extraction.max_eccentricity")
            c.extraction.max_eccentricity = parse_double(val, key);
        else if (key == "extraction.max_euler")
            c.extraction.max_euler = int(parse_long(val, key));
        else if (key == "extraction.max_extent")
            c.extraction.max_extent = parse_double(val, key);
        else if (key == "extraction.per_scale_normalization")
            c.extraction.per_scale_normalization = parse_bool(val, key);
        else if (key == "support.num_lines")
            c.support.num_lines = int(parse_long(val, key));
        else if (key == "support.band_width")
            c.support.band_width = int(parse_long(val, key));
        else if (key == "support.r_min") c.support.r_min = int(parse_long(val, key));
        else if (key == "support.r_max") c.support.r_max = int(parse_long(val, key));
        else if (key == "support.gradient_sigma")
            c.support.gradient_sigma = parse_double(val, key);
        else if (key == "support.truncation")
            c.support.truncation = parse_double(val, key);
        else if (key == "boost.rounds")
            c.boost.num_rounds = int(parse_long(val, key));
        else if (key == "boost.max_splits")
            c.boost.max_splits = int(parse_long(val, key));
        else if (key == "boost.learning_rate")
            c.boost.learning_rate = parse_double(val, key);
        else if (key == "boost.criterion")
            c.boost.criterion = criterion_from_name(val);
        else if (key == "boost.seed")
            c.boost.rng_seed = std::uint64_t(parse_long(val, key));
        else if (key == "boost.class_ratio")
            c.boost.class_ratio = parse_double(val, key);
        else if (key == "features") c.features = val;
        else if (key == "reference_fov") c.reference_fov = parse_double(val, key);
        else if (key == "scale_with_fov") c.scale_with_fov = parse_bool(val, key);
        else if (key == "match_radius") c.match_radius = parse_double(val, key);
        else if (key == "cv_repetitions")
            c.cv_repetitions = int(parse_long(val, key));
        else throw input_error("config: unknown key " + key);
    }
    require_input(header, "config: missing madet-config header");
    c.validate();
    return c;
}

inline void save_pipeline_config(const std::string& path,
                                 const PipelineConfig& c) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path);
    out << config_to_text(c);
    if (!out) throw input_error("write failed: " + path);
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_text(buf.str());
}

// ---- FOV scaling -----------------------------------------------------------

// Rescales pixel-sized settings from the reference FOV to the measured one.
// Areas and filter scale sets stay as configured.
inline PipelineConfig scaled_for_fov(const PipelineConfig& base, int diameter) {
    if (!base.scale_with_fov) return base;
    require_input(diameter > 0, "scaled_for_fov: empty field of view");
    PipelineConfig c = base;
    double f = double(diameter) / base.reference_fov;
    c.preprocess.window_radius =
        std::max(1, int(std::lround(base.preprocess.window_radius * f)));
    c.support.r_max = std::max({2, base.support.r_min + 1,
                                int(std::lround(base.support.r_max * f))});
    c.match_radius = base.match_radius * f;
    return c;
}

// ---- per-image stages ------------------------------------------------------

namespace detail {

template <typename F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const input_error& e) {
        throw input_error(std::string(name) + ": " + e.what());
    } catch (const internal_error& e) {
        throw internal_error(std::string(name) + ": " + e.what());
    }
}

}  // namespace detail

struct ImageFeatures {
    BinaryMask fov;
    int fov_diameter = 0;
    double match_radius = 0.0;  // effective for this image
    std::vector<Candidate> candidates;
    std::vector<FeatureVector> raw;  // per candidate, before normalization
};

// preprocess, weight, candidate extraction and feature computation for one
// image; classification and evaluation consume the result.
inline ImageFeatures image_features(const RgbImage& img,
                                    const PipelineConfig& base) {
    base.validate();
    ImageFeatures out;
    out.fov = detail::stage("fov", [&] { return fov_mask(img, base.fov); });
    require_input(out.fov.count() > 0, "fov: empty field of view mask");
    out.fov_diameter = fov_diameter(out.fov);
    const PipelineConfig cfg = scaled_for_fov(base, out.fov_diameter);
    out.match_radius = cfg.match_radius;

    ScalarField green = green_channel(img);
    green.mask = out.fov.m;
    ScalarField norm = detail::stage(
        "preprocess", [&] { return normalize_illumination(green, cfg.preprocess); });
    AggregateResult agg = detail::stage(
        "weight", [&] { return aggregate_weights(norm, cfg.gradient); });
    out.candidates = detail::stage("candidates", [&] {
        return extract_candidates(agg.wo, cfg.gradient.scales, out.fov,
                                  cfg.extraction);
    });
    detail::stage("features", [&] {
        FeatureExtractor ex(std::move(norm), std::move(agg.wos), cfg.support);
        out.raw.resize(out.candidates.size());
        for (std::size_t i = 0; i < out.candidates.size(); ++i)
            out.raw[i] = ex.features(out.candidates[i]);
        return 0;
    });
    return out;
}

struct ImageDetections {
    ImageFeatures stages;
    std::vector<double> scores;  // MA probability per candidate
};

inline ImageDetections detect_image(const RgbImage& img,
                                    const TrainedEnsemble& ens,
                                    const PipelineConfig& cfg) {
    ImageDetections out;
    out.stages = image_features(img, cfg);
    out.scores.resize(out.stages.candidates.size());
    detail::stage("predict", [&] {
        for (std::size_t i = 0; i < out.scores.size(); ++i) {
            FeatureVector f = out.stages.raw[i];
            apply_normalization(f, ens.stats);
            out.scores[i] = ma_probability(predict(ens, f));
        }
        return 0;
    });
    return out;
}

inline std::vector<Detection> to_detections(const std::string& image_id,
                                            const ImageDetections& d) {
    std::vector<Detection> out;
    for (std::size_t i = 0; i < d.scores.size(); ++i)
        out.push_back({image_id, d.stages.candidates[i].cx,
                       d.stages.candidates[i].cy, d.scores[i]});
    return out;
}

// Candidate training label: lesion when the centroid falls within the match
// radius of any annotation (annotation radius overrides when larger).
inline std::vector<int> label_candidates(const std::vector<Candidate>& cands,
                                         const std::vector<Annotation>& anns,
                                         double match_radius) {
    std::vector<int> labels(cands.size(), -1);
    for (std::size_t i = 0; i < cands.size(); ++i)
        for (const Annotation& a : anns) {
            double r = std::max(match_radius, a.radius);
            if (std::hypot(cands[i].cx - a.x, cands[i].cy - a.y) <= r) {
                labels[i] = 1;
                break;
            }
        }
    return labels;
}

// Copies candidate pixels into the red channel scaled by score; untouched
// pixels keep the source image. Data export, not a rendering of any figure.
inline RgbImage score_overlay(const RgbImage& img,
                              const std::vector<Candidate>& cands,
                              const std::vector<double>& scores) {
    require(cands.size() == scores.size(), "overlay: scores out of step");
    RgbImage out = img;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        double s = std::clamp(scores[i], 0.0, 1.0);
        for (const Pixel& p : cands[i].pixels) {
            out.at(p.x, p.y, 0) = std::uint8_t(std::lround(255.0 * s));
            out.at(p.x, p.y, 1) = std::uint8_t(out.at(p.x, p.y, 1) / 2);
            out.at(p.x, p.y, 2) = std::uint8_t(out.at(p.x, p.y, 2) / 2);
        }
    }
    return out;
}

// ---- cross-validation ------------------------------------------------------

struct DatasetImage {
    std::string image_id;
    RgbImage image;
    std::vector<Annotation> annotations;
};

struct Dataset {
    std::vector<DatasetImage> images;

    GroundTruthSet truth() const {
        GroundTruthSet t;
        for (const DatasetImage& d : images)
            t.images.push_back({d.image_id, d.annotations});
        return t;
    }
};

// Image-level fold ids: a shuffled deal so sizes differ by at most one.
inline std::vector<int> make_folds(int n_images, int k, Rng& rng) {
    require_input(k >= 2, "folds: need at least 2 folds");
    require_input(n_images >= k, "folds: fewer images than folds");
    const std::size_t n = std::size_t(n_images);
    std::vector<int> order(n);
    for (int i = 0; i < n_images; ++i) order[std::size_t(i)] = i;
    rng.shuffle(order);
    std::vector<int> fold(n);
    for (int i = 0; i < n_images; ++i) fold[std::size_t(order[std::size_t(i)])] = i % k;
    return fold;
}

struct CrossValFold {
    int repetition = 0;
    int fold = 0;
    std::vector<std::string> test_images;
    int train_pos = 0;
    int train_neg = 0;
    int test_candidates = 0;
};

struct CrossValResult {
    // One pooled report per repetition; detections aligned with reports.
    std::vector<EvalReport> reports;
    std::vector<std::vector<Detection>> detections;
    std::vector<CrossValFold> folds;
    double match_radius = 0.0;
    double mean_f_score = 0.0;
    double mean_f_auc = 0.0;
    double mean_image_auc = 0.0;
};

// Image-level k-fold: candidates of one image never straddle folds. Each
// fold trains on the others' candidates (normalization statistics from the
// training rows alone) and scores its own; pooled detections of a repetition
// drive one FROC.
inline CrossValResult cross_validate(const Dataset& data, int k,
                                     std::uint64_t seed,
                                     const PipelineConfig& cfg) {
    cfg.validate();
    const int n = int(data.images.size());
    require_input(k >= 2 && k <= n, "cross_validate: need 2 <= folds <= images");

    std::vector<ImageFeatures> feats(data.images.size());
    for (std::size_t i = 0; i < data.images.size(); ++i)
        feats[i] = image_features(data.images[i].image, cfg);

    double radius_sum = 0.0;
    for (const ImageFeatures& f : feats) radius_sum += f.match_radius;
    const double match_radius = radius_sum / double(n);

    std::vector<std::vector<int>> labels(feats.size());
    for (std::size_t i = 0; i < feats.size(); ++i)
        labels[i] = label_candidates(feats[i].candidates,
                                     data.images[i].annotations,
                                     feats[i].match_radius);

    const std::vector<int> subset = feature_subset(cfg.features);
    GroundTruthSet truth = data.truth();

    CrossValResult res;
    res.match_radius = match_radius;
    for (int rep = 0; rep < cfg.cv_repetitions; ++rep) {
        Rng fold_rng(mix_seed(seed, std::uint64_t(rep)));
        std::vector<int> fold = make_folds(n, k, fold_rng);
        std::vector<Detection> pooled;
        for (int f = 0; f < k; ++f) {
            CrossValFold rec;
            rec.repetition = rep;
            rec.fold = f;
            FeatureMatrix train;
            for (std::size_t i = 0; i < feats.size(); ++i) {
                if (fold[i] == f) continue;
                for (std::size_t c = 0; c < feats[i].candidates.size(); ++c) {
                    FeatureRow row;
                    row.id = int(train.rows.size());
                    row.cx = feats[i].candidates[c].cx;
                    row.cy = feats[i].candidates[c].cy;
                    row.label = labels[i][c];
                    row.f = feats[i].raw[c];
                    (row.label > 0 ? rec.train_pos : rec.train_neg) += 1;
                    train.rows.push_back(std::move(row));
                }
            }
            normalize_features(train);
            BoostConfig bc = cfg.boost;
            bc.rng_seed = mix_seed(seed, std::uint64_t(rep) * 8192 + 64 +
                                             std::uint64_t(f));
            bc.split_features = subset;
            TrainedEnsemble ens = rusboost_train(train, bc);
            for (std::size_t i = 0; i < feats.size(); ++i) {
                if (fold[i] != f) continue;
                rec.test_images.push_back(data.images[i].image_id);
                rec.test_candidates += int(feats[i].candidates.size());
                for (std::size_t c = 0; c < feats[i].candidates.size(); ++c) {
                    FeatureVector x = feats[i].raw[c];
                    apply_normalization(x, ens.stats);
                    pooled.push_back({data.images[i].image_id,
                                      feats[i].candidates[c].cx,
                                      feats[i].candidates[c].cy,
                                      ma_probability(predict(ens, x))});
                }
            }
            res.folds.push_back(std::move(rec));
        }
        res.reports.push_back(evaluate_detections(pooled, truth, match_radius));
        res.detections.push_back(std::move(pooled));
    }

    for (const EvalReport& r : res.reports) {
        res.mean_f_score += r.f_score / double(res.reports.size());
        res.mean_f_auc += r.f_auc / double(res.reports.size());
        res.mean_image_auc += r.image_auc / double(res.reports.size());
    }
    return res;
}

}  // namespace madet
