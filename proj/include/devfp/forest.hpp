#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace devfp {

struct ForestParams {
    int n_trees = 100;
    int max_depth = 0;           // 0 = unbounded
    int min_leaf = 1;
    int features_per_split = 0;  // 0 = ceil(sqrt(N))
    uint64_t seed = 0;
    int threads = 1;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // go left when x <= threshold
    int left = -1, right = -1;
    std::vector<double> dist;  // leaf class distribution, sums to 1
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    int leaf_class(const std::vector<double>& x) const;
};

struct ForestModel {
    std::string axis;
    std::vector<std::string> classes;  // sorted, so index order is lexicographic
    int n_features = 0;
    ForestParams params;
    std::vector<Tree> trees;

    std::string to_json() const;
    static ForestModel from_json(const std::string& text);
};

struct ForestVote {
    std::string label;
    std::vector<int> votes;  // per class
    int margin = 0;          // winner votes minus runner-up votes
};

ForestModel train_forest(const std::vector<std::vector<double>>& X, const std::vector<std::string>& y,
                         const std::string& axis, const ForestParams& params = {});
ForestVote predict_votes(const ForestModel& m, const std::vector<double>& x);
std::string predict(const ForestModel& m, const std::vector<double>& x);

}  // namespace devfp
