#include "devfp/forest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <json.hpp>

#include "devfp/fpnum.hpp"
#include "devfp/parallel.hpp"
#include "devfp/rng.hpp"

namespace devfp {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

struct Builder {
    const std::vector<std::vector<double>>& X;
    const std::vector<int>& y;
    int n_classes;
    int n_features;
    int mtry;
    const ForestParams& prm;
    CounterRng rng;
    Tree tree;

    std::vector<double> distribution(const std::vector<int>& idx) const {
        std::vector<double> d(n_classes, 0.0);
        for (int i : idx) d[y[i]] += 1.0;
        for (double& v : d) v /= static_cast<double>(idx.size());
        return d;
    }

    static double gini(const std::vector<int>& counts, int n) {
        if (n == 0) return 0.0;
        double s = 0.0;
        for (int c : counts) s += static_cast<double>(c) * c;
        return 1.0 - s / (static_cast<double>(n) * n);
    }

    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double impurity = 0.0;
    };

    void consider(int f, double thr, const std::vector<int>& left, int nl, const std::vector<int>& right, int nr,
                  Split& best) const {
        if (nl < prm.min_leaf || nr < prm.min_leaf) return;
        const int n = nl + nr;
        double imp = (nl * gini(left, nl) + nr * gini(right, nr)) / n;
        if (best.feature < 0 || imp < best.impurity) {
            best.feature = f;
            best.threshold = thr;
            best.impurity = imp;
        }
    }

    // Most features are 0/1 scores: one candidate split, found by counting.
    // Returns false when the feature has three or more distinct values here.
    bool two_valued(int f, const std::vector<int>& idx, Split& best) const {
        const double lo0 = X[idx[0]][f];
        double hi = lo0;
        bool two = false;
        for (int i : idx) {
            const double x = X[i][f];
            if (x == lo0 || (two && x == hi)) continue;
            if (two) return false;
            hi = x;
            two = true;
        }
        if (!two) return true;  // constant: no split
        const double lo = std::min(lo0, hi);
        hi = std::max(lo0, hi);
        std::vector<int> left(n_classes, 0), right(n_classes, 0);
        int nl = 0;
        for (int i : idx) {
            if (X[i][f] == lo) {
                ++left[y[i]];
                ++nl;
            } else {
                ++right[y[i]];
            }
        }
        consider(f, 0.5 * (lo + hi), left, nl, right, static_cast<int>(idx.size()) - nl, best);
        return true;
    }

    // Updates best with this feature's best threshold, if it beats it.
    void best_on(int f, const std::vector<int>& idx, Split& best) const {
        if (two_valued(f, idx, best)) return;
        std::vector<std::pair<double, int>> v;
        v.reserve(idx.size());
        for (int i : idx) v.push_back({X[i][f], y[i]});
        std::sort(v.begin(), v.end());
        if (v.front().first == v.back().first) return;
        const int n = static_cast<int>(v.size());
        std::vector<int> left(n_classes, 0), right(n_classes, 0);
        for (auto& p : v) ++right[p.second];
        for (int k = 0; k + 1 < n; ++k) {
            ++left[v[k].second];
            --right[v[k].second];
            if (v[k].first == v[k + 1].first) continue;
            consider(f, 0.5 * (v[k].first + v[k + 1].first), left, k + 1, right, n - k - 1, best);
        }
    }

    int grow(const std::vector<int>& idx, int depth) {
        const int node = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        auto d = distribution(idx);
        const bool pure = *std::max_element(d.begin(), d.end()) >= 1.0;
        const bool too_small = static_cast<int>(idx.size()) < 2 * prm.min_leaf;
        const bool too_deep = prm.max_depth > 0 && depth >= prm.max_depth;
        if (pure || too_small || too_deep) {
            tree.nodes[node].dist = std::move(d);
            return node;
        }
        // Random feature order; the first mtry are the sampled subset. If none of
        // them splits, keep drawing from the rest.
        std::vector<int> feats(n_features);
        std::iota(feats.begin(), feats.end(), 0);
        Split best;
        for (int k = 0; k < n_features; ++k) {
            size_t j = k + rng.below(static_cast<uint64_t>(n_features - k));
            std::swap(feats[k], feats[j]);
            best_on(feats[k], idx, best);
            if (k + 1 >= mtry && best.feature >= 0) break;
        }
        if (best.feature < 0) {
            tree.nodes[node].dist = std::move(d);
            return node;
        }
        std::vector<int> l, r;
        for (int i : idx) (X[i][best.feature] <= best.threshold ? l : r).push_back(i);
        tree.nodes[node].feature = best.feature;
        tree.nodes[node].threshold = best.threshold;
        int li = grow(l, depth + 1);
        int ri = grow(r, depth + 1);
        tree.nodes[node].left = li;
        tree.nodes[node].right = ri;
        return node;
    }
};

}  // namespace

int Tree::leaf_class(const std::vector<double>& x) const {
    int n = 0;
    while (nodes[n].feature >= 0) n = x[nodes[n].feature] <= nodes[n].threshold ? nodes[n].left : nodes[n].right;
    const auto& d = nodes[n].dist;
    return static_cast<int>(std::max_element(d.begin(), d.end()) - d.begin());
}

ForestModel train_forest(const std::vector<std::vector<double>>& X, const std::vector<std::string>& y,
                         const std::string& axis, const ForestParams& params) {
    if (X.empty() || X.size() != y.size()) throw Error("training data is empty or ragged");
    const int nf = static_cast<int>(X[0].size());
    for (const auto& row : X)
        if (static_cast<int>(row.size()) != nf) throw Error("dimension mismatch");
    if (nf == 0) throw Error("training data has no features");
    if (params.n_trees < 1 || params.min_leaf < 1) throw Error("bad forest parameters");

    ForestModel m;
    m.axis = axis;
    m.classes = y;
    std::sort(m.classes.begin(), m.classes.end());
    m.classes.erase(std::unique(m.classes.begin(), m.classes.end()), m.classes.end());
    if (m.classes.size() < 2) throw Error("degenerate training set");
    m.n_features = nf;
    m.params = params;
    std::map<std::string, int> cls;
    for (size_t i = 0; i < m.classes.size(); ++i) cls[m.classes[i]] = static_cast<int>(i);
    std::vector<int> yi(y.size());
    for (size_t i = 0; i < y.size(); ++i) yi[i] = cls[y[i]];

    const int mtry = params.features_per_split > 0
                         ? std::min(params.features_per_split, nf)
                         : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(nf))));
    m.trees.resize(static_cast<size_t>(params.n_trees));
    parallel_for(m.trees.size(), params.threads, [&](size_t t) {
        const uint64_t tseed = params.seed + t;
        CounterRng boot(tseed, 0xB0075ull, 0);
        std::vector<int> idx(X.size());
        for (auto& i : idx) i = static_cast<int>(boot.below(X.size()));
        Builder b{X, yi, static_cast<int>(m.classes.size()), nf, mtry, params, CounterRng(tseed, 0x5EEDull, 0), {}};
        b.grow(idx, 0);
        m.trees[t] = std::move(b.tree);
    });
    return m;
}

ForestVote predict_votes(const ForestModel& m, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != m.n_features) throw Error("dimension mismatch");
    ForestVote v;
    v.votes.assign(m.classes.size(), 0);
    for (const auto& t : m.trees) ++v.votes[t.leaf_class(x)];
    // max_element keeps the first maximum: lowest index, i.e. lexicographic tie-break.
    size_t w = static_cast<size_t>(std::max_element(v.votes.begin(), v.votes.end()) - v.votes.begin());
    int runner = 0;
    for (size_t i = 0; i < v.votes.size(); ++i)
        if (i != w) runner = std::max(runner, v.votes[i]);
    v.label = m.classes[w];
    v.margin = v.votes[w] - runner;
    return v;
}

std::string predict(const ForestModel& m, const std::vector<double>& x) { return predict_votes(m, x).label; }

std::string ForestModel::to_json() const {
    json trees_j = json::array();
    for (const auto& t : trees) {
        json nodes = json::array();
        for (const auto& n : t.nodes) {
            if (n.feature < 0) nodes.push_back({{"leaf", n.dist}});
            else nodes.push_back({{"f", n.feature}, {"thr", n.threshold}, {"l", n.left}, {"r", n.right}});
        }
        trees_j.push_back(nodes);
    }
    json j = {{"format", "devfp-forest"},
              {"version", kFormatVersion},
              {"axis", axis},
              {"classes", classes},
              {"n_features", n_features},
              {"params",
               {{"n_trees", params.n_trees},
                {"max_depth", params.max_depth},
                {"min_leaf", params.min_leaf},
                {"features_per_split", params.features_per_split},
                {"seed", params.seed}}},
              {"trees", trees_j}};
    return j.dump();
}

ForestModel ForestModel::from_json(const std::string& text) {
    try {
        json j = json::parse(text);
        if (j.at("format") != "devfp-forest") throw Error("not a forest model");
        if (j.at("version").get<int>() != kFormatVersion) throw Error("unsupported forest model version");
        ForestModel m;
        m.axis = j.at("axis").get<std::string>();
        m.classes = j.at("classes").get<std::vector<std::string>>();
        m.n_features = j.at("n_features").get<int>();
        const json& p = j.at("params");
        m.params.n_trees = p.at("n_trees").get<int>();
        m.params.max_depth = p.at("max_depth").get<int>();
        m.params.min_leaf = p.at("min_leaf").get<int>();
        m.params.features_per_split = p.at("features_per_split").get<int>();
        m.params.seed = p.at("seed").get<uint64_t>();
        for (const auto& tj : j.at("trees")) {
            Tree t;
            for (const auto& nj : tj) {
                TreeNode n;
                if (nj.contains("leaf")) {
                    n.dist = nj.at("leaf").get<std::vector<double>>();
                } else {
                    n.feature = nj.at("f").get<int>();
                    n.threshold = nj.at("thr").get<double>();
                    n.left = nj.at("l").get<int>();
                    n.right = nj.at("r").get<int>();
                }
                t.nodes.push_back(std::move(n));
            }
            m.trees.push_back(std::move(t));
        }
        return m;
    } catch (const json::exception& e) {
        throw Error(std::string("bad forest model: ") + e.what());
    }
}

}  // namespace devfp
