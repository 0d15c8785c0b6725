#pragma once

#include <span>
#include <string>
#include <vector>

namespace reinitlab {

/// Gini impurity 1 - sum (n_c / n)^2 of a label count vector.
double gini(std::span<const int> label_counts);

struct TreeFeature {
  std::string name;
  bool categorical = false;
  /// Display names for category codes (categorical features encode values as
  /// indices into this list).
  std::vector<std::string> categories;
};

struct TreeConfig {
  int min_leaf = 7;
  int max_depth = 4;
};

struct TreeNode {
  int samples = 0;
  double gini = 0.0;
  std::vector<int> counts;  // per label
  int depth = 0;
  bool is_leaf = true;
  int feature = -1;
  double threshold = 0.0;  // numeric: x <= threshold goes left
  int category = -1;       // categorical: x == category goes left
  int left = -1;
  int right = -1;
};

struct DecisionTree {
  std::vector<TreeFeature> features;
  std::vector<std::string> labels;
  TreeConfig config;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  size_t leaf_count() const;
  int depth() const;
};

/// Greedy CART fit: at each node the split maximizing the Gini decrease over
/// numeric midpoints and one-vs-rest category tests, subject to both children
/// holding at least min_leaf rows and node depth < max_depth. Ties break on
/// (feature order, threshold/category value). Fewer than min_leaf rows yield
/// a single-leaf tree.
DecisionTree fit_tree(const std::vector<std::vector<double>>& rows,
                      const std::vector<int>& labels, std::vector<TreeFeature> features,
                      std::vector<std::string> label_names, TreeConfig config = {});

struct LeafSummary {
  int node = -1;
  int samples = 0;
  double gini = 0.0;
  /// Majority label for low-impurity leaves; for Gini > 0.5 every label at
  /// least as frequent as the runner-up.
  std::vector<std::string> top;
};

std::vector<LeafSummary> leaf_report(const DecisionTree& tree);

/// Indented text dump (one node per line: split or leaf label set).
std::string render_tree(const DecisionTree& tree);

}  // namespace reinitlab
