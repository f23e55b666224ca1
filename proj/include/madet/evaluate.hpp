#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "madet/csv.hpp"
#include "madet/util.hpp"

namespace madet {

struct Annotation {
    double x = 0.0, y = 0.0;
    double radius = 0.0;  // 0 = unspecified, the match radius applies alone
};

// Every image under evaluation appears here, annotation-free images
// included; they widen the false-positive-per-image denominator.
struct ImageTruth {
    std::string image_id;
    std::vector<Annotation> annotations;
};

struct GroundTruthSet {
    std::vector<ImageTruth> images;

    int total_annotations() const {
        int n = 0;
        for (const ImageTruth& t : images) n += int(t.annotations.size());
        return n;
    }
};

struct Detection {
    std::string image_id;
    double x = 0.0, y = 0.0;
    double score = 0.0;
};

struct FrocPoint {
    double threshold = 0.0;
    double fpi = 0.0;
    double sensitivity = 0.0;
};

// Points ordered by descending threshold; FPI and sensitivity are
// non-decreasing along the list.
struct FrocCurve {
    std::vector<FrocPoint> points;
};

inline constexpr std::array<double, 7> kFpiTargets = {0.125, 0.25, 0.5, 1.0,
                                                      2.0,   4.0,  8.0};

// ---- matching --------------------------------------------------------------

struct MatchResult {
    // Aligned with the input detection list.
    std::vector<char> is_tp;
    // Aligned with truth.images and each image's annotation list.
    std::vector<std::vector<char>> truth_hit;
};

// Greedy one-to-one assignment in descending score order (input order breaks
// ties): a detection claims the nearest unhit annotation of its image within
// max(match_radius, annotation radius), inclusive.
inline MatchResult match(const std::vector<Detection>& detections,
                         const GroundTruthSet& truth, double match_radius) {
    require_input(match_radius >= 0.0, "match: negative match radius");
    std::map<std::string, std::size_t> image_index;
    for (std::size_t i = 0; i < truth.images.size(); ++i)
        image_index[truth.images[i].image_id] = i;

    MatchResult res;
    res.is_tp.assign(detections.size(), 0);
    res.truth_hit.resize(truth.images.size());
    for (std::size_t i = 0; i < truth.images.size(); ++i)
        res.truth_hit[i].assign(truth.images[i].annotations.size(), 0);

    std::vector<std::size_t> order(detections.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return detections[a].score > detections[b].score;
    });

    for (std::size_t i : order) {
        const Detection& d = detections[i];
        require_input(std::isfinite(d.score), "match: non-finite score");
        auto it = image_index.find(d.image_id);
        if (it == image_index.end()) continue;  // image outside the truth set
        const ImageTruth& img = truth.images[it->second];
        std::vector<char>& hit = res.truth_hit[it->second];
        int best = -1;
        double best_dist = 0.0;
        for (std::size_t a = 0; a < img.annotations.size(); ++a) {
            if (hit[a]) continue;
            const Annotation& ann = img.annotations[a];
            double dist = std::hypot(d.x - ann.x, d.y - ann.y);
            if (dist <= std::max(match_radius, ann.radius) &&
                (best < 0 || dist < best_dist)) {
                best = int(a);
                best_dist = dist;
            }
        }
        if (best >= 0) {
            hit[best] = 1;
            res.is_tp[i] = 1;
        }
    }
    return res;
}

// ---- FROC ------------------------------------------------------------------

// One point per distinct score, counting detections at or above it;
// sensitivity pools annotations over all images, FPI divides by the full
// image count.
inline FrocCurve froc(const std::vector<Detection>& detections,
                      const GroundTruthSet& truth, double match_radius) {
    require_input(!truth.images.empty(), "froc: no images in the truth set");
    const int total_ann = truth.total_annotations();
    require_input(total_ann > 0, "froc: truth set has no annotations");

    FrocCurve curve;
    if (detections.empty()) {
        curve.points.push_back({1.0, 0.0, 0.0});
        return curve;
    }

    std::map<std::string, int> known;
    for (const ImageTruth& img : truth.images) known[img.image_id] = 1;
    for (const Detection& d : detections)
        require_input(known.count(d.image_id) != 0,
                      "froc: detection on image '" + d.image_id +
                          "' absent from the truth set");

    MatchResult m = match(detections, truth, match_radius);
    std::vector<std::size_t> order(detections.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return detections[a].score > detections[b].score;
    });

    const double images = double(truth.images.size());
    int tp = 0, fp = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        (m.is_tp[order[k]] ? tp : fp) += 1;
        double score = detections[order[k]].score;
        if (k + 1 < order.size() && detections[order[k + 1]].score == score)
            continue;
        curve.points.push_back(
            {score, double(fp) / images, double(tp) / double(total_ann)});
    }
    return curve;
}

namespace detail {

// Piecewise-linear sensitivity over FPI: from (0,0) up to the first point,
// along the curve, constant past the last point.
inline double sensitivity_at(const FrocCurve& curve, double fpi) {
    const auto& p = curve.points;
    if (fpi >= p.back().fpi) return p.back().sensitivity;
    if (fpi <= p.front().fpi) {
        if (p.front().fpi <= 0.0) return p.front().sensitivity;
        return p.front().sensitivity * fpi / p.front().fpi;
    }
    std::size_t i = 0;
    for (std::size_t k = 1; k < p.size(); ++k)
        if (p[k].fpi <= fpi) i = k;
    double x0 = p[i].fpi, y0 = p[i].sensitivity;
    double x1 = p[i + 1].fpi, y1 = p[i + 1].sensitivity;
    if (x1 == x0) return std::max(y0, y1);
    return y0 + (y1 - y0) * (fpi - x0) / (x1 - x0);
}

}  // namespace detail

inline std::array<double, 7> froc_sensitivities(const FrocCurve& curve) {
    require_input(!curve.points.empty(), "froc_score: empty curve");
    std::array<double, 7> out{};
    for (std::size_t k = 0; k < kFpiTargets.size(); ++k)
        out[k] = detail::sensitivity_at(curve, kFpiTargets[k]);
    return out;
}

// Mean sensitivity at the seven benchmark FPI values.
inline double froc_score(const FrocCurve& curve) {
    auto s = froc_sensitivities(curve);
    double sum = 0.0;
    for (double v : s) sum += v;
    return sum / double(s.size());
}

// Trapezoidal area of the sensitivity polyline over FPI in [1/8, 8],
// normalized by the top of the range.
inline double froc_partial_auc(const FrocCurve& curve) {
    require_input(!curve.points.empty(), "froc_partial_auc: empty curve");
    const double lo = 0.125, hi = 8.0;
    // The polyline: (0,0), the curve points, then a flat tail to hi.
    std::vector<std::pair<double, double>> poly;
    poly.emplace_back(0.0, 0.0);
    for (const FrocPoint& p : curve.points)
        poly.emplace_back(p.fpi, p.sensitivity);
    if (poly.back().first < hi)
        poly.emplace_back(hi, poly.back().second);

    double area = 0.0;
    for (std::size_t k = 0; k + 1 < poly.size(); ++k) {
        double x0 = poly[k].first, y0 = poly[k].second;
        double x1 = poly[k + 1].first, y1 = poly[k + 1].second;
        double a = std::max(x0, lo), b = std::min(x1, hi);
        if (b <= a || x1 == x0) continue;
        double ya = y0 + (y1 - y0) * (a - x0) / (x1 - x0);
        double yb = y0 + (y1 - y0) * (b - x0) / (x1 - x0);
        area += 0.5 * (ya + yb) * (b - a);
    }
    return area / hi;
}

// Rank-statistic AUC of per-image scores, ties counting one half.
inline double image_roc_auc(const std::vector<double>& scores,
                            const std::vector<int>& labels) {
    require(scores.size() == labels.size(), "auc: scores and labels differ");
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < scores.size(); ++i)
        (labels[i] > 0 ? pos : neg).push_back(scores[i]);
    require_input(!pos.empty() && !neg.empty(),
                  "auc: both image labels must be present");
    double wins = 0.0;
    for (double p : pos)
        for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    return wins / (double(pos.size()) * double(neg.size()));
}

// ---- aggregated report -----------------------------------------------------

struct EvalReport {
    FrocCurve curve;
    std::array<double, 7> sensitivities{};
    double f_score = 0.0;
    double f_auc = 0.0;
    // Image-level AUC from max detection score per image, lesion images
    // against clean ones; NaN when only one kind is present.
    double image_auc = std::numeric_limits<double>::quiet_NaN();
    int total_images = 0;
    int total_annotations = 0;
    double match_radius = 0.0;
};

inline EvalReport evaluate_detections(const std::vector<Detection>& detections,
                                      const GroundTruthSet& truth,
                                      double match_radius) {
    EvalReport rep;
    rep.match_radius = match_radius;
    rep.total_images = int(truth.images.size());
    rep.total_annotations = truth.total_annotations();
    rep.curve = froc(detections, truth, match_radius);
    rep.sensitivities = froc_sensitivities(rep.curve);
    rep.f_score = froc_score(rep.curve);
    rep.f_auc = froc_partial_auc(rep.curve);

    std::map<std::string, double> image_score;
    for (const ImageTruth& img : truth.images) image_score[img.image_id] = 0.0;
    for (const Detection& d : detections) {
        auto it = image_score.find(d.image_id);
        if (it != image_score.end()) it->second = std::max(it->second, d.score);
    }
    std::vector<double> scores;
    std::vector<int> labels;
    bool has_pos = false, has_neg = false;
    for (const ImageTruth& img : truth.images) {
        scores.push_back(image_score[img.image_id]);
        labels.push_back(img.annotations.empty() ? -1 : 1);
        (img.annotations.empty() ? has_neg : has_pos) = true;
    }
    if (has_pos && has_neg) rep.image_auc = image_roc_auc(scores, labels);
    return rep;
}

inline nlohmann::json report_to_json(const EvalReport& rep) {
    nlohmann::json j;
    j["match_radius"] = rep.match_radius;
    j["total_images"] = rep.total_images;
    j["total_annotations"] = rep.total_annotations;
    j["f_score"] = rep.f_score;
    j["f_auc"] = rep.f_auc;
    j["image_auc"] = std::isnan(rep.image_auc)
                         ? nlohmann::json()
                         : nlohmann::json(rep.image_auc);
    j["fpi_targets"] = kFpiTargets;
    j["sensitivities"] = rep.sensitivities;
    nlohmann::json pts = nlohmann::json::array();
    for (const FrocPoint& p : rep.curve.points)
        pts.push_back({{"threshold", p.threshold},
                       {"fpi", p.fpi},
                       {"sensitivity", p.sensitivity}});
    j["curve"] = std::move(pts);
    return j;
}

inline void write_report_json(const std::string& path, const EvalReport& rep) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path);
    out << report_to_json(rep).dump(2) << "\n";
    if (!out) throw input_error("write failed: " + path);
}

// ---- CSV interchange -------------------------------------------------------

// Truth rows: image_id, x, y, radius (optional column). A row with blank
// x and y declares an annotation-free image so it can count toward FPI.
inline GroundTruthSet read_truth_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    int ci = t.require_column("image_id", path);
    int cx = t.require_column("x", path);
    int cy = t.require_column("y", path);
    int cr = t.column("radius");
    GroundTruthSet truth;
    std::map<std::string, std::size_t> index;
    for (const auto& row : t.rows) {
        const std::string& id = row.at(ci);
        require_input(!id.empty(), path + ": blank image_id");
        auto it = index.find(id);
        if (it == index.end()) {
            index[id] = truth.images.size();
            truth.images.push_back({id, {}});
            it = index.find(id);
        }
        if (row.at(cx).empty() && row.at(cy).empty()) continue;
        Annotation ann;
        ann.x = parse_double(row.at(cx), path);
        ann.y = parse_double(row.at(cy), path);
        if (cr >= 0 && !row.at(std::size_t(cr)).empty())
            ann.radius = parse_double(row.at(std::size_t(cr)), path);
        require_input(ann.radius >= 0.0, path + ": negative radius");
        truth.images[it->second].annotations.push_back(ann);
    }
    return truth;
}

inline void write_truth_csv(const std::string& path,
                            const GroundTruthSet& truth) {
    std::vector<std::vector<std::string>> rows;
    for (const ImageTruth& img : truth.images) {
        if (img.annotations.empty()) {
            rows.push_back({img.image_id, "", "", ""});
            continue;
        }
        for (const Annotation& a : img.annotations)
            rows.push_back({img.image_id, format_double(a.x), format_double(a.y),
                            format_double(a.radius)});
    }
    write_csv(path, {"image_id", "x", "y", "radius"}, rows);
}

inline std::vector<Detection> read_detections_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    int ci = t.require_column("image_id", path);
    int cx = t.require_column("x", path);
    int cy = t.require_column("y", path);
    int cs = t.require_column("score", path);
    std::vector<Detection> out;
    for (const auto& row : t.rows) {
        Detection d;
        d.image_id = row.at(ci);
        d.x = parse_double(row.at(cx), path);
        d.y = parse_double(row.at(cy), path);
        d.score = parse_double(row.at(cs), path);
        require_input(std::isfinite(d.score), path + ": non-finite score");
        out.push_back(std::move(d));
    }
    return out;
}

inline void write_detections_csv(const std::string& path,
                                 const std::vector<Detection>& detections) {
    std::vector<std::vector<std::string>> rows;
    for (const Detection& d : detections)
        rows.push_back({d.image_id, format_double(d.x), format_double(d.y),
                        format_double(d.score)});
    write_csv(path, {"image_id", "x", "y", "score"}, rows);
}

inline void write_curve_csv(const std::string& path, const FrocCurve& curve) {
    std::vector<std::vector<std::string>> rows;
    for (const FrocPoint& p : curve.points)
        rows.push_back({format_double(p.threshold), format_double(p.fpi),
                        format_double(p.sensitivity)});
    write_csv(path, {"threshold", "fpi", "sensitivity"}, rows);
}

}  // namespace madet
