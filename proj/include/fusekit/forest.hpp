// Discriminative model p(c|x): bagged decision trees with Shannon-entropy
// split scoring and normalized leaf class distributions.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fusekit/common.hpp"

namespace fusekit {

// Shannon entropy in bits of a count or probability vector.
double entropy(std::span<const double> dist);
double entropy(const std::vector<int>& labels, int n_classes);

// Score(split) = -(|l|/|n|) E(l) - (|r|/|n|) E(r); <= 0, and 0 iff both
// children are pure.
double split_score(const std::vector<int>& left_labels, const std::vector<int>& right_labels,
                   int n_classes);

struct TreeNode {
    // Internal node when feature >= 0, otherwise leaf.
    int feature = -1;
    double threshold = 0.0;
    int left = -1;   // index into the tree's node vector; goes with value < threshold
    int right = -1;  // value >= threshold
    std::vector<double> distribution;  // leaf only; sums to 1
    int support = 0;                   // leaf only; training samples reaching it

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    const TreeNode& root() const { return nodes.front(); }
};

struct Forest {
    int n_classes = 0;
    int dim = 0;
    int mtry = 0;
    int min_leaf = 1;
    std::uint64_t seed = 0;
    bool bootstrap = true;
    std::vector<Tree> trees;
};

struct ForestConfig {
    int n_trees = 1000;
    int mtry = 0;      // 0 = ceil(sqrt(d))
    int min_leaf = 1;  // minimum samples per child
    bool bootstrap = true;
    int threads = 1;
};

Forest forest_fit(const std::vector<std::vector<double>>& features, const std::vector<int>& labels,
                  int n_classes, const ForestConfig& config, std::uint64_t seed);

const TreeNode& tree_leaf_for(const Tree& tree, std::span<const double> x);

// Mean of the reached leaf distributions across trees.
std::vector<double> forest_posterior(const Forest& forest, std::span<const double> x);

Matrix forest_posterior_batch(const Forest& forest, const std::vector<std::vector<double>>& features,
                              int threads = 1);

void save_forest(const Forest& forest, const std::string& path);
Forest load_forest(const std::string& path);

}  // namespace fusekit
