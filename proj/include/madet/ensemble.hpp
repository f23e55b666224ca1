#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "madet/features.hpp"
#include "madet/util.hpp"

namespace madet {

enum class SplitCriterion { gini, deviance, twoing };

inline std::string criterion_name(SplitCriterion c) {
    switch (c) {
        case SplitCriterion::gini: return "gini";
        case SplitCriterion::deviance: return "deviance";
        case SplitCriterion::twoing: return "twoing";
    }
    throw internal_error("criterion_name: bad enum value");
}

inline SplitCriterion criterion_from_name(const std::string& s) {
    if (s == "gini") return SplitCriterion::gini;
    if (s == "deviance") return SplitCriterion::deviance;
    if (s == "twoing") return SplitCriterion::twoing;
    throw input_error("unknown split criterion '" + s +
                      "' (expected gini, deviance, twoing)");
}

struct BoostConfig {
    int num_rounds = 1000;
    int max_splits = 100;
    double learning_rate = 0.5;
    SplitCriterion criterion = SplitCriterion::gini;
    std::uint64_t rng_seed = 1;
    // Undersampled majority:minority count ratio; infinity keeps the full set.
    double class_ratio = 1.0;
    std::vector<int> split_features;  // empty = every feature

    void validate() const {
        require_input(num_rounds >= 1, "boost: num_rounds must be >= 1");
        require_input(max_splits >= 1, "boost: max_splits must be >= 1");
        require_input(learning_rate > 0.0 && learning_rate <= 1.0,
                      "boost: learning_rate must be in (0, 1]");
        require_input(class_ratio > 0.0, "boost: class_ratio must be positive");
        for (int f : split_features)
            require_input(f >= 0 && f < kNumFeatures,
                          "boost: split feature index out of range");
    }
};

// ---- impurities ------------------------------------------------------------

// Node impurities take the two class fractions; a pure node scores 0.
inline double gini_index(double p1, double p2) { return 1.0 - p1 * p1 - p2 * p2; }

inline double deviance_index(double p1, double p2) {
    auto plogp = [](double p) { return p > 0.0 ? p * std::log(p) : 0.0; };
    return -plogp(p1) - plogp(p2);
}

// Split-gain form: fractions of node weight going left and right, then the
// class fractions within each child. Identical children score 0.
inline double twoing_rule(double frac_left, double frac_right, double l1,
                          double l2, double r1, double r2) {
    double diff = std::abs(l1 - r1) + std::abs(l2 - r2);
    return frac_left * frac_right * diff * diff;
}

// Vote weight for a round with pseudo-loss eps, before shrinkage. Loss 0 is
// capped to keep the weight finite while preserving its dominance.
inline double alpha_from_loss(double eps) {
    eps = std::clamp(eps, 1e-10, 1.0 - 1e-10);
    return 0.5 * std::log((1.0 - eps) / eps);
}

// ---- decision trees --------------------------------------------------------

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double gain = 0.0;   // risk reduction recorded when the split was made
    double value = 0.0;  // leaf vote, -1 or +1
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    double predict(const FeatureVector& f) const {
        int i = 0;
        while (nodes[i].feature >= 0)
            i = f[nodes[i].feature] < nodes[i].threshold ? nodes[i].left
                                                         : nodes[i].right;
        return nodes[i].value;
    }

    int branch_count() const {
        int n = 0;
        for (const TreeNode& node : nodes) n += node.feature >= 0;
        return n;
    }
};

namespace detail {

struct SplitChoice {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

struct ClassWeights {
    double pos = 0.0, neg = 0.0;
    double total() const { return pos + neg; }
};

// Weighted risk of a node: total weight times its impurity. Twoing has no
// node form; its gain is evaluated directly on the children.
inline double node_risk(SplitCriterion c, const ClassWeights& w) {
    double W = w.total();
    if (W <= 0.0) return 0.0;
    double p1 = w.pos / W, p2 = w.neg / W;
    return c == SplitCriterion::deviance ? W * deviance_index(p1, p2)
                                         : W * gini_index(p1, p2);
}

inline double split_gain(SplitCriterion c, const ClassWeights& parent,
                         const ClassWeights& left, const ClassWeights& right) {
    if (left.total() <= 0.0 || right.total() <= 0.0) return 0.0;
    if (c == SplitCriterion::twoing) {
        double W = parent.total();
        return W * twoing_rule(left.total() / W, right.total() / W,
                               left.pos / left.total(), left.neg / left.total(),
                               right.pos / right.total(),
                               right.neg / right.total());
    }
    return node_risk(c, parent) - node_risk(c, left) - node_risk(c, right);
}

// Best threshold for one feature by an ascending sweep over the node samples.
// Thresholds are midpoints of consecutive distinct values; a midpoint that
// rounds onto the lower value cannot route samples consistently and is
// skipped.
inline SplitChoice best_split_on_feature(
    const FeatureMatrix& m, const std::vector<double>& weights,
    const std::vector<int>& samples, int feature, SplitCriterion criterion,
    const ClassWeights& parent) {
    struct Entry {
        double value, weight;
        int label;
    };
    std::vector<Entry> order;
    order.reserve(samples.size());
    for (int i : samples)
        order.push_back({m.rows[i].f[feature], weights[i], m.rows[i].label});
    std::sort(order.begin(), order.end(),
              [](const Entry& a, const Entry& b) { return a.value < b.value; });

    SplitChoice best;
    best.feature = feature;
    ClassWeights left;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        (order[k].label > 0 ? left.pos : left.neg) += order[k].weight;
        if (order[k].value == order[k + 1].value) continue;
        double thr = (order[k].value + order[k + 1].value) / 2.0;
        if (!(thr > order[k].value)) continue;
        ClassWeights right{parent.pos - left.pos, parent.neg - left.neg};
        double gain = split_gain(criterion, parent, left, right);
        if (gain > best.gain) {
            best.gain = gain;
            best.threshold = thr;
        }
    }
    return best;
}

inline SplitChoice best_split(const FeatureMatrix& m,
                              const std::vector<double>& weights,
                              const std::vector<int>& samples,
                              const std::vector<int>& features,
                              SplitCriterion criterion,
                              const ClassWeights& parent) {
    std::vector<SplitChoice> per_feature(features.size());
    parallel_for(features.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            per_feature[i] = best_split_on_feature(m, weights, samples,
                                                   features[i], criterion, parent);
    });
    SplitChoice best;
    for (const SplitChoice& c : per_feature)
        if (c.gain > best.gain) best = c;
    return best;
}

}  // namespace detail

// Greedy best-first CART growth on weighted samples: the pending leaf with
// the largest positive gain is split until max_splits is reached or no split
// improves. Leaves vote the weighted majority class, ties voting +1.
inline DecisionTree train_tree(const FeatureMatrix& m,
                               const std::vector<double>& weights,
                               const std::vector<int>& samples,
                               const std::vector<int>& features,
                               int max_splits, SplitCriterion criterion) {
    require_input(!samples.empty(), "train_tree: no samples");
    require(weights.size() == m.rows.size(),
            "train_tree: weight vector does not match the matrix");
    for (int i : samples)
        require_input(m.rows[i].label == 1 || m.rows[i].label == -1,
                      "train_tree: labels must be +1 or -1");

    struct Pending {
        int node = 0;
        std::vector<int> samples;
        detail::ClassWeights counts;
        detail::SplitChoice split;
    };
    auto make_pending = [&](int node, std::vector<int>&& idx) {
        Pending p;
        p.node = node;
        p.samples = std::move(idx);
        for (int i : p.samples)
            (m.rows[i].label > 0 ? p.counts.pos : p.counts.neg) += weights[i];
        p.split = detail::best_split(m, weights, p.samples, features, criterion,
                                     p.counts);
        return p;
    };

    DecisionTree tree;
    tree.nodes.push_back({});
    std::vector<Pending> open;
    open.push_back(make_pending(0, std::vector<int>(samples)));
    // Leaf votes stay current so stopping at any point leaves a valid tree.
    tree.nodes[0].value = open[0].counts.pos >= open[0].counts.neg ? 1.0 : -1.0;

    for (int s = 0; s < max_splits && !open.empty(); ++s) {
        std::size_t pick = 0;
        for (std::size_t i = 1; i < open.size(); ++i)
            if (open[i].split.gain > open[pick].split.gain) pick = i;
        if (!(open[pick].split.gain > 0.0)) break;

        Pending parent = std::move(open[pick]);
        open.erase(open.begin() + long(pick));
        std::vector<int> left_idx, right_idx;
        for (int i : parent.samples)
            (m.rows[i].f[parent.split.feature] < parent.split.threshold
                 ? left_idx
                 : right_idx)
                .push_back(i);

        int li = int(tree.nodes.size());
        tree.nodes.push_back({});
        int ri = int(tree.nodes.size());
        tree.nodes.push_back({});
        TreeNode& b = tree.nodes[parent.node];
        b.feature = parent.split.feature;
        b.threshold = parent.split.threshold;
        b.left = li;
        b.right = ri;
        b.gain = parent.split.gain;
        b.value = 0.0;

        Pending lp = make_pending(li, std::move(left_idx));
        Pending rp = make_pending(ri, std::move(right_idx));
        tree.nodes[li].value = lp.counts.pos >= lp.counts.neg ? 1.0 : -1.0;
        tree.nodes[ri].value = rp.counts.pos >= rp.counts.neg ? 1.0 : -1.0;
        open.push_back(std::move(lp));
        open.push_back(std::move(rp));
    }
    return tree;
}

// ---- boosting --------------------------------------------------------------

struct TrainedEnsemble {
    BoostConfig config;
    NormStats stats;
    std::vector<DecisionTree> trees;
    std::vector<double> alphas;  // after shrinkage
};

// Optional per-round training record, for tests and diagnostics.
struct BoostTrace {
    std::vector<double> eps;         // pseudo-loss on the full set
    std::vector<double> weight_sum;  // after renormalization
    std::vector<std::vector<double>> weights;
};

namespace detail {

// Weighted sampling without replacement via exponential race keys: each
// majority sample draws one variate regardless of the outcome, so the stream
// position is independent of the weights.
inline std::vector<int> undersample_majority(
    const std::vector<int>& majority, const std::vector<int>& minority,
    const std::vector<double>& weights, double ratio, Rng& rng) {
    std::size_t want = majority.size();
    if (std::isfinite(ratio)) {
        double target = ratio * double(minority.size());
        if (target < double(majority.size()))
            want = std::size_t(std::llround(std::floor(target)));
    }
    std::vector<int> chosen;
    if (want >= majority.size()) {
        chosen = majority;
    } else {
        std::vector<std::pair<double, int>> keys;
        keys.reserve(majority.size());
        for (int i : majority) {
            double u = rng.uniform01();
            keys.emplace_back(-std::log(u) / weights[i], i);
        }
        std::sort(keys.begin(), keys.end());
        for (std::size_t k = 0; k < want; ++k) chosen.push_back(keys[k].second);
    }
    chosen.insert(chosen.end(), minority.begin(), minority.end());
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

}  // namespace detail

// Boosting with per-round majority undersampling. The pseudo-loss and weight
// update always run over the full set; the learning rate shrinks both the
// vote and the update exponent. A round whose loss reaches 0.5 is redrawn a
// bounded number of times, then kept with a zero vote.
inline TrainedEnsemble rusboost_train(const FeatureMatrix& m,
                                      const BoostConfig& cfg,
                                      BoostTrace* trace = nullptr) {
    cfg.validate();
    const std::size_t n = m.rows.size();
    require_input(n >= 2, "rusboost: need at least two samples");
    std::vector<int> positives, negatives;
    for (std::size_t i = 0; i < n; ++i) {
        int l = m.rows[i].label;
        require_input(l == 1 || l == -1, "rusboost: labels must be +1 or -1");
        (l == 1 ? positives : negatives).push_back(int(i));
    }
    require_input(!positives.empty() && !negatives.empty(),
                  "rusboost: both classes must be present");
    const bool pos_minority = positives.size() <= negatives.size();
    const std::vector<int>& minority = pos_minority ? positives : negatives;
    const std::vector<int>& majority = pos_minority ? negatives : positives;

    std::vector<int> features = cfg.split_features;
    if (features.empty())
        for (int f = 0; f < kNumFeatures; ++f) features.push_back(f);

    TrainedEnsemble ens;
    ens.config = cfg;
    ens.config.split_features = features;
    ens.stats = m.stats;

    std::vector<double> w(n, 1.0 / double(n));
    std::vector<double> votes(n);
    Rng rng(cfg.rng_seed);
    const int max_redraws = 5;

    for (int t = 0; t < cfg.num_rounds; ++t) {
        DecisionTree tree;
        double eps = 0.0;
        for (int attempt = 0;; ++attempt) {
            std::vector<int> subset = detail::undersample_majority(
                majority, minority, w, cfg.class_ratio, rng);
            tree = train_tree(m, w, subset, features, cfg.max_splits,
                              cfg.criterion);
            eps = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                votes[i] = tree.predict(m.rows[i].f);
                if (votes[i] * m.rows[i].label < 0.0) eps += w[i];
            }
            if (eps < 0.5 || attempt >= max_redraws) break;
        }
        double alpha =
            eps < 0.5 ? cfg.learning_rate * alpha_from_loss(eps) : 0.0;

        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] *= std::exp(-alpha * m.rows[i].label * votes[i]);
            sum += w[i];
        }
        for (double& wi : w) wi /= sum;

        ens.trees.push_back(std::move(tree));
        ens.alphas.push_back(alpha);
        if (trace) {
            trace->eps.push_back(eps);
            double check = 0.0;
            for (double wi : w) check += wi;
            trace->weight_sum.push_back(check);
            trace->weights.push_back(w);
        }
    }
    return ens;
}

// Normalized vote in [-1, 1]. An ensemble whose votes all carry zero weight
// abstains with 0.
inline double predict(const TrainedEnsemble& ens, const FeatureVector& f) {
    require(ens.trees.size() == ens.alphas.size(),
            "predict: trees and alphas out of step");
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < ens.trees.size(); ++t) {
        num += ens.alphas[t] * ens.trees[t].predict(f);
        den += ens.alphas[t];
    }
    return den > 0.0 ? num / den : 0.0;
}

inline double ma_probability(double vote) { return (vote + 1.0) / 2.0; }

// Mean risk reduction per branch node, accumulated per feature over all
// trees. A feature no tree splits on scores exactly 0.
inline std::array<double, kNumFeatures> feature_importance(
    const TrainedEnsemble& ens) {
    std::array<double, kNumFeatures> imp{};
    for (const DecisionTree& tree : ens.trees) {
        int branches = tree.branch_count();
        if (branches == 0) continue;
        for (const TreeNode& node : tree.nodes)
            if (node.feature >= 0)
                imp[node.feature] += node.gain / double(branches);
    }
    return imp;
}

// ---- model file ------------------------------------------------------------
// Versioned text document; every real is written in hexfloat so that a
// save/load/save cycle is byte-identical.

inline constexpr int kModelVersion = 1;

inline void save_model(const std::string& path, const TrainedEnsemble& ens) {
    require(ens.trees.size() == ens.alphas.size(),
            "save_model: trees and alphas out of step");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path);
    out << "madet-model " << kModelVersion << "\n";
    out << "criterion " << criterion_name(ens.config.criterion) << "\n";
    out << "rounds " << ens.config.num_rounds << "\n";
    out << "max_splits " << ens.config.max_splits << "\n";
    out << "learning_rate " << format_double_exact(ens.config.learning_rate)
        << "\n";
    out << "seed " << ens.config.rng_seed << "\n";
    out << "class_ratio " << format_double_exact(ens.config.class_ratio) << "\n";
    out << "split_features " << ens.config.split_features.size();
    for (int f : ens.config.split_features) out << " " << f;
    out << "\n";
    out << "norm_mean";
    for (double v : ens.stats.mean) out << " " << format_double_exact(v);
    out << "\nnorm_std";
    for (double v : ens.stats.stddev) out << " " << format_double_exact(v);
    out << "\ntrees " << ens.trees.size() << "\n";
    for (std::size_t t = 0; t < ens.trees.size(); ++t) {
        const DecisionTree& tree = ens.trees[t];
        out << "tree " << t << " " << tree.nodes.size() << "\n";
        for (const TreeNode& n : tree.nodes) {
            if (n.feature >= 0)
                out << "split " << n.feature << " "
                    << format_double_exact(n.threshold) << " " << n.left << " "
                    << n.right << " " << format_double_exact(n.gain) << "\n";
            else
                out << "leaf " << (n.value > 0 ? 1 : -1) << "\n";
        }
        out << "alpha " << format_double_exact(ens.alphas[t]) << "\n";
    }
    out << "end\n";
    if (!out) throw input_error("write failed: " + path);
}

namespace detail {

struct TokenReader {
    std::ifstream in;
    std::string path;

    TokenReader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw input_error("cannot open " + p);
    }
    std::string next(const std::string& what) {
        std::string tok;
        if (!(in >> tok))
            throw input_error(path + ": truncated model file, expected " + what);
        return tok;
    }
    void expect(const std::string& keyword) {
        std::string tok = next(keyword);
        if (tok != keyword)
            throw input_error(path + ": expected '" + keyword + "', found '" +
                              tok + "'");
    }
    long long integer(const std::string& what) {
        return parse_int(next(what), path + ": " + what);
    }
    double real(const std::string& what) {
        return parse_double(next(what), path + ": " + what);
    }
};

}  // namespace detail

inline TrainedEnsemble load_model(const std::string& path) {
    detail::TokenReader r(path);
    r.expect("madet-model");
    long long version = r.integer("version");
    if (version != kModelVersion)
        throw input_error(path + ": unsupported model version " +
                          std::to_string(version));
    TrainedEnsemble ens;
    r.expect("criterion");
    ens.config.criterion = criterion_from_name(r.next("criterion"));
    r.expect("rounds");
    ens.config.num_rounds = int(r.integer("rounds"));
    r.expect("max_splits");
    ens.config.max_splits = int(r.integer("max_splits"));
    r.expect("learning_rate");
    ens.config.learning_rate = r.real("learning_rate");
    r.expect("seed");
    ens.config.rng_seed = std::uint64_t(r.integer("seed"));
    r.expect("class_ratio");
    ens.config.class_ratio = r.real("class_ratio");
    r.expect("split_features");
    long long nf = r.integer("split feature count");
    require_input(nf >= 0 && nf <= kNumFeatures,
                  path + ": bad split feature count");
    for (long long i = 0; i < nf; ++i)
        ens.config.split_features.push_back(int(r.integer("split feature")));
    r.expect("norm_mean");
    for (double& v : ens.stats.mean) v = r.real("norm mean");
    r.expect("norm_std");
    for (double& v : ens.stats.stddev) v = r.real("norm std");
    r.expect("trees");
    long long ntrees = r.integer("tree count");
    require_input(ntrees >= 0, path + ": bad tree count");
    for (long long t = 0; t < ntrees; ++t) {
        r.expect("tree");
        long long index = r.integer("tree index");
        require_input(index == t, path + ": tree indices out of order");
        long long nnodes = r.integer("node count");
        require_input(nnodes >= 1, path + ": empty tree");
        DecisionTree tree;
        for (long long k = 0; k < nnodes; ++k) {
            std::string kind = r.next("node kind");
            TreeNode n;
            if (kind == "split") {
                n.feature = int(r.integer("split feature"));
                require_input(n.feature >= 0 && n.feature < kNumFeatures,
                              path + ": split feature out of range");
                n.threshold = r.real("threshold");
                n.left = int(r.integer("left child"));
                n.right = int(r.integer("right child"));
                require_input(n.left > k && n.left < nnodes && n.right > k &&
                                  n.right < nnodes,
                              path + ": child index out of range");
                n.gain = r.real("gain");
            } else if (kind == "leaf") {
                long long v = r.integer("leaf value");
                require_input(v == 1 || v == -1, path + ": leaf must be +-1");
                n.value = double(v);
            } else {
                throw input_error(path + ": unknown node kind '" + kind + "'");
            }
            tree.nodes.push_back(n);
        }
        r.expect("alpha");
        ens.alphas.push_back(r.real("alpha"));
        ens.trees.push_back(std::move(tree));
    }
    r.expect("end");
    ens.config.validate();
    return ens;
}

}  // namespace madet
