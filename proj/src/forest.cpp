#include "fusekit/forest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fusekit/csv.hpp"

namespace fusekit {

double entropy(std::span<const double> dist) {
    return entropy_bits(dist);
}

double entropy(const std::vector<int>& labels, int n_classes) {
    if (labels.empty()) throw validation_error("entropy: empty label set");
    std::vector<double> counts(n_classes, 0.0);
    for (int label : labels) counts.at(label) += 1.0;
    return entropy_bits(counts);
}

double split_score(const std::vector<int>& left_labels, const std::vector<int>& right_labels,
                   int n_classes) {
    if (left_labels.empty() || right_labels.empty())
        throw validation_error("split_score: both children must be non-empty");
    const double nl = static_cast<double>(left_labels.size());
    const double nr = static_cast<double>(right_labels.size());
    const double n = nl + nr;
    return -(nl / n) * entropy(left_labels, n_classes) - (nr / n) * entropy(right_labels, n_classes);
}

namespace {

double entropy_of_counts(const std::vector<double>& counts, double total) {
    double e = 0.0;
    for (double c : counts)
        if (c > 0.0) e -= (c / total) * std::log2(c / total);
    return e;
}

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;  // Score(split); larger is better
};

class TreeBuilder {
public:
    TreeBuilder(const std::vector<std::vector<double>>& features, const std::vector<int>& labels,
                int n_classes, int mtry, int min_leaf)
        : features_(features), labels_(labels), n_classes_(n_classes), mtry_(mtry),
          min_leaf_(min_leaf) {}

    Tree build(std::vector<std::size_t> indices, std::mt19937_64& rng) {
        Tree tree;
        grow(tree, std::move(indices), rng);
        return tree;
    }

private:
    int grow(Tree& tree, std::vector<std::size_t> indices, std::mt19937_64& rng) {
        const int node_index = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        std::vector<double> counts(n_classes_, 0.0);
        for (std::size_t i : indices) counts[labels_[i]] += 1.0;
        const double total = static_cast<double>(indices.size());
        const double node_entropy = entropy_of_counts(counts, total);

        const bool pure = node_entropy == 0.0;
        const bool too_small = indices.size() < 2 * static_cast<std::size_t>(min_leaf_) ||
                               indices.size() < 2;
        SplitChoice choice;
        if (!pure && !too_small) choice = best_split(indices, counts, rng);
        // "No split improves the score" means zero information gain:
        // gain = node_entropy + score.
        if (choice.found && node_entropy + choice.score <= 1e-12) choice.found = false;

        if (!choice.found) {
            TreeNode& leaf = tree.nodes[node_index];
            leaf.support = static_cast<int>(indices.size());
            leaf.distribution.resize(n_classes_);
            for (int c = 0; c < n_classes_; ++c) leaf.distribution[c] = counts[c] / total;
            return node_index;
        }

        std::vector<std::size_t> left, right;
        left.reserve(indices.size());
        right.reserve(indices.size());
        for (std::size_t i : indices) {
            if (features_[i][choice.feature] < choice.threshold) left.push_back(i);
            else right.push_back(i);
        }
        indices.clear();
        indices.shrink_to_fit();

        const int left_index = grow(tree, std::move(left), rng);
        const int right_index = grow(tree, std::move(right), rng);
        TreeNode& node = tree.nodes[node_index];
        node.feature = choice.feature;
        node.threshold = choice.threshold;
        node.left = left_index;
        node.right = right_index;
        return node_index;
    }

    // Exhaustive search over mtry sampled features and midpoint thresholds.
    // Ties break toward the lowest feature index, then the lowest threshold.
    SplitChoice best_split(const std::vector<std::size_t>& indices, const std::vector<double>& counts,
                           std::mt19937_64& rng) {
        const int dim = static_cast<int>(features_[indices.front()].size());
        const std::vector<int> candidates = sample_without_replacement(mtry_, dim, rng);

        SplitChoice best;
        std::vector<std::pair<double, int>> values(indices.size());  // (value, label)
        std::vector<double> left_counts(n_classes_);

        for (int feature : candidates) {  // ascending feature order
            for (std::size_t i = 0; i < indices.size(); ++i)
                values[i] = {features_[indices[i]][feature], labels_[indices[i]]};
            std::sort(values.begin(), values.end());
            if (values.front().first == values.back().first) continue;  // constant feature

            std::fill(left_counts.begin(), left_counts.end(), 0.0);
            const double total = static_cast<double>(values.size());
            std::size_t left_n = 0;
            for (std::size_t i = 0; i + 1 < values.size(); ++i) {
                left_counts[values[i].second] += 1.0;
                ++left_n;
                if (values[i].first == values[i + 1].first) continue;  // not a boundary
                const std::size_t right_n = values.size() - left_n;
                if (left_n < static_cast<std::size_t>(min_leaf_) ||
                    right_n < static_cast<std::size_t>(min_leaf_))
                    continue;

                double right_entropy_counts = 0.0;
                {
                    double e = 0.0;
                    for (int c = 0; c < n_classes_; ++c) {
                        const double rc = counts[c] - left_counts[c];
                        if (rc > 0.0) e -= (rc / right_n) * std::log2(rc / right_n);
                    }
                    right_entropy_counts = e;
                }
                const double left_entropy = entropy_of_counts(left_counts, static_cast<double>(left_n));
                const double score = -(left_n / total) * left_entropy -
                                     (static_cast<double>(right_n) / total) * right_entropy_counts;
                if (!best.found || score > best.score) {
                    best.found = true;
                    best.feature = feature;
                    best.threshold = (values[i].first + values[i + 1].first) / 2.0;
                    best.score = score;
                }
            }
        }
        return best;
    }

    const std::vector<std::vector<double>>& features_;
    const std::vector<int>& labels_;
    const int n_classes_;
    const int mtry_;
    const int min_leaf_;
};

}  // namespace

Forest forest_fit(const std::vector<std::vector<double>>& features, const std::vector<int>& labels,
                  int n_classes, const ForestConfig& config, std::uint64_t seed) {
    if (features.empty() || features.size() != labels.size())
        throw validation_error("forest_fit: empty training set or label count mismatch");
    const int dim = static_cast<int>(features.front().size());
    for (const auto& row : features)
        if (static_cast<int>(row.size()) != dim)
            throw validation_error("forest_fit: ragged feature rows");
    for (int label : labels)
        if (label < 0 || label >= n_classes)
            throw validation_error("forest_fit: label outside [0, n_classes)");

    int mtry = config.mtry;
    if (mtry == 0) mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(dim))));
    if (mtry < 1 || mtry > dim)
        throw validation_error("forest_fit: mtry " + std::to_string(mtry) + " outside [1, " +
                               std::to_string(dim) + "]");
    if (config.min_leaf < 1) throw validation_error("forest_fit: min_leaf must be >= 1");
    if (config.n_trees < 1) throw validation_error("forest_fit: n_trees must be >= 1");

    Forest forest;
    forest.n_classes = n_classes;
    forest.dim = dim;
    forest.mtry = mtry;
    forest.min_leaf = config.min_leaf;
    forest.seed = seed;
    forest.bootstrap = config.bootstrap;
    forest.trees.resize(config.n_trees);

    TreeBuilder builder(features, labels, n_classes, mtry, config.min_leaf);
    parallel_for(config.n_trees, config.threads, [&](std::size_t t) {
        std::mt19937_64 rng(mix_seed(seed, t));
        std::vector<std::size_t> indices;
        if (config.bootstrap) {
            indices = bootstrap_indices(features.size(), rng);
        } else {
            indices.resize(features.size());
            for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
        }
        forest.trees[t] = builder.build(std::move(indices), rng);
    });
    return forest;
}

const TreeNode& tree_leaf_for(const Tree& tree, std::span<const double> x) {
    const TreeNode* node = &tree.root();
    while (!node->is_leaf())
        node = &tree.nodes[x[node->feature] < node->threshold ? node->left : node->right];
    return *node;
}

std::vector<double> forest_posterior(const Forest& forest, std::span<const double> x) {
    if (static_cast<int>(x.size()) != forest.dim)
        throw validation_error("forest_posterior: input dimension " + std::to_string(x.size()) +
                               " != " + std::to_string(forest.dim));
    std::vector<double> posterior(forest.n_classes, 0.0);
    for (const Tree& tree : forest.trees) {
        const TreeNode& leaf = tree_leaf_for(tree, x);
        for (int c = 0; c < forest.n_classes; ++c) posterior[c] += leaf.distribution[c];
    }
    const double b = static_cast<double>(forest.trees.size());
    for (double& p : posterior) p /= b;
    return posterior;
}

Matrix forest_posterior_batch(const Forest& forest, const std::vector<std::vector<double>>& features,
                              int threads) {
    Matrix out(features.size(), forest.n_classes);
    parallel_for(features.size(), threads, [&](std::size_t i) {
        out.set_row(i, forest_posterior(forest, features[i]));
    });
    return out;
}

void save_forest(const Forest& forest, const std::string& path) {
    std::ostringstream out;
    out << "fusekit-model forest v1\n";
    out << "n_classes " << forest.n_classes << '\n';
    out << "dim " << forest.dim << '\n';
    out << "n_trees " << forest.trees.size() << '\n';
    out << "mtry " << forest.mtry << '\n';
    out << "min_leaf " << forest.min_leaf << '\n';
    out << "seed " << forest.seed << '\n';
    out << "bootstrap " << (forest.bootstrap ? 1 : 0) << '\n';
    for (const Tree& tree : forest.trees) {
        out << "tree " << tree.nodes.size() << '\n';
        for (const TreeNode& node : tree.nodes) {
            if (node.is_leaf()) {
                out << "l " << node.support;
                for (double p : node.distribution) out << ' ' << format_double(p);
                out << '\n';
            } else {
                out << "i " << node.feature << ' ' << format_double(node.threshold) << ' '
                    << node.left << ' ' << node.right << '\n';
            }
        }
    }
    write_text_file(path, out.str());
}

Forest load_forest(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty() || lines[0] != "fusekit-model forest v1")
        throw validation_error(path + ": not a fusekit forest model file");

    auto field = [&](std::size_t row, const std::string& key) -> std::string {
        if (row >= lines.size() || lines[row].rfind(key + " ", 0) != 0)
            throw validation_error(path + ": expected '" + key + "' on line " + std::to_string(row + 1));
        return lines[row].substr(key.size() + 1);
    };

    Forest forest;
    forest.n_classes = static_cast<int>(parse_int(field(1, "n_classes"), path));
    forest.dim = static_cast<int>(parse_int(field(2, "dim"), path));
    const int n_trees = static_cast<int>(parse_int(field(3, "n_trees"), path));
    forest.mtry = static_cast<int>(parse_int(field(4, "mtry"), path));
    forest.min_leaf = static_cast<int>(parse_int(field(5, "min_leaf"), path));
    forest.seed = static_cast<std::uint64_t>(parse_int(field(6, "seed"), path));
    forest.bootstrap = parse_int(field(7, "bootstrap"), path) != 0;

    std::size_t row = 8;
    for (int t = 0; t < n_trees; ++t) {
        const std::size_t node_count = static_cast<std::size_t>(parse_int(field(row, "tree"), path));
        ++row;
        Tree tree;
        tree.nodes.reserve(node_count);
        for (std::size_t i = 0; i < node_count; ++i, ++row) {
            if (row >= lines.size()) throw validation_error(path + ": truncated tree");
            std::istringstream in(lines[row]);
            std::string kind;
            in >> kind;
            TreeNode node;
            if (kind == "i") {
                std::string threshold;
                in >> node.feature >> threshold >> node.left >> node.right;
                node.threshold = parse_double(threshold, path + " node threshold");
            } else if (kind == "l") {
                in >> node.support;
                node.distribution.resize(forest.n_classes);
                for (int c = 0; c < forest.n_classes; ++c) {
                    std::string value;
                    in >> value;
                    node.distribution[c] = parse_double(value, path + " leaf distribution");
                }
            } else {
                throw validation_error(path + ": bad node line " + std::to_string(row + 1));
            }
            if (!in) throw validation_error(path + ": bad node line " + std::to_string(row + 1));
            tree.nodes.push_back(std::move(node));
        }
        forest.trees.push_back(std::move(tree));
    }
    return forest;
}

}  // namespace fusekit
