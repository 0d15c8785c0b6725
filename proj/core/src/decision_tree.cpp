#include "reinitlab/decision_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "reinitlab/errors.hpp"

namespace reinitlab {

double gini(std::span<const int> label_counts) {
  long total = 0;
  for (int c : label_counts) {
    if (c < 0) {
      throw ConfigError("gini: negative count");
    }
    total += c;
  }
  if (total == 0) {
    throw ConfigError("gini: empty node");
  }
  double s = 0.0;
  for (int c : label_counts) {
    const double f = static_cast<double>(c) / static_cast<double>(total);
    s += f * f;
  }
  return 1.0 - s;
}

size_t DecisionTree::leaf_count() const {
  size_t n = 0;
  for (const auto& node : nodes) {
    n += node.is_leaf ? 1 : 0;
  }
  return n;
}

int DecisionTree::depth() const {
  int d = 0;
  for (const auto& node : nodes) {
    d = std::max(d, node.depth);
  }
  return d;
}

namespace {

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  int category = -1;
  double decrease = 0.0;
};

std::vector<int> count_labels(const std::vector<int>& labels,
                              const std::vector<size_t>& rows, size_t n_labels) {
  std::vector<int> counts(n_labels, 0);
  for (size_t r : rows) {
    ++counts[static_cast<size_t>(labels[r])];
  }
  return counts;
}

struct FitState {
  const std::vector<std::vector<double>>* rows;
  const std::vector<int>* labels;
  const std::vector<TreeFeature>* features;
  size_t n_labels;
  TreeConfig config;
  DecisionTree* tree;
};

SplitChoice best_split(const FitState& st, const std::vector<size_t>& node_rows,
                       double node_gini) {
  SplitChoice best;
  const size_t n = node_rows.size();
  const size_t min_leaf = static_cast<size_t>(st.config.min_leaf);
  std::vector<int> left_counts(st.n_labels), right_counts(st.n_labels);

  auto consider = [&](int feature, double threshold, int category,
                      const std::vector<size_t>& rows_sorted_or_all) {
    std::fill(left_counts.begin(), left_counts.end(), 0);
    std::fill(right_counts.begin(), right_counts.end(), 0);
    size_t n_left = 0;
    for (size_t r : rows_sorted_or_all) {
      const double v = (*st.rows)[r][static_cast<size_t>(feature)];
      const bool left = category >= 0 ? static_cast<int>(v) == category : v <= threshold;
      if (left) {
        ++left_counts[static_cast<size_t>((*st.labels)[r])];
        ++n_left;
      } else {
        ++right_counts[static_cast<size_t>((*st.labels)[r])];
      }
    }
    const size_t n_right = n - n_left;
    if (n_left < min_leaf || n_right < min_leaf) {
      return;
    }
    const double weighted =
        (static_cast<double>(n_left) * gini(left_counts) +
         static_cast<double>(n_right) * gini(right_counts)) /
        static_cast<double>(n);
    const double decrease = node_gini - weighted;
    if (decrease <= 1e-12) {
      return;
    }
    // strict improvement wins; ties keep the earlier feature / smaller value
    if (!best.found || decrease > best.decrease) {
      best = {true, feature, threshold, category, decrease};
    }
  };

  for (size_t f = 0; f < st.features->size(); ++f) {
    const TreeFeature& feat = (*st.features)[f];
    if (feat.categorical) {
      std::set<int> cats;
      for (size_t r : node_rows) {
        cats.insert(static_cast<int>((*st.rows)[r][f]));
      }
      if (cats.size() < 2) continue;
      for (int c : cats) {
        consider(static_cast<int>(f), 0.0, c, node_rows);
      }
    } else {
      std::vector<double> values;
      values.reserve(node_rows.size());
      for (size_t r : node_rows) {
        values.push_back((*st.rows)[r][f]);
      }
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      for (size_t i = 0; i + 1 < values.size(); ++i) {
        consider(static_cast<int>(f), 0.5 * (values[i] + values[i + 1]), -1, node_rows);
      }
    }
  }
  return best;
}

int grow(FitState& st, const std::vector<size_t>& node_rows, int depth) {
  TreeNode node;
  node.samples = static_cast<int>(node_rows.size());
  node.counts = count_labels(*st.labels, node_rows, st.n_labels);
  node.gini = gini(node.counts);
  node.depth = depth;

  const int id = static_cast<int>(st.tree->nodes.size());
  st.tree->nodes.push_back(node);

  const bool pure = std::count_if(node.counts.begin(), node.counts.end(),
                                  [](int c) { return c > 0; }) <= 1;
  if (pure || depth >= st.config.max_depth ||
      node_rows.size() < 2 * static_cast<size_t>(st.config.min_leaf)) {
    return id;
  }
  const SplitChoice split = best_split(st, node_rows, node.gini);
  if (!split.found) {
    return id;
  }

  std::vector<size_t> left_rows, right_rows;
  for (size_t r : node_rows) {
    const double v = (*st.rows)[r][static_cast<size_t>(split.feature)];
    const bool left =
        split.category >= 0 ? static_cast<int>(v) == split.category : v <= split.threshold;
    (left ? left_rows : right_rows).push_back(r);
  }
  const int left_id = grow(st, left_rows, depth + 1);
  const int right_id = grow(st, right_rows, depth + 1);
  TreeNode& m = st.tree->nodes[static_cast<size_t>(id)];
  m.is_leaf = false;
  m.feature = split.feature;
  m.threshold = split.threshold;
  m.category = split.category;
  m.left = left_id;
  m.right = right_id;
  return id;
}

}  // namespace

DecisionTree fit_tree(const std::vector<std::vector<double>>& rows,
                      const std::vector<int>& labels, std::vector<TreeFeature> features,
                      std::vector<std::string> label_names, TreeConfig config) {
  if (rows.size() != labels.size()) {
    throw ConfigError("fit_tree: rows/labels size mismatch");
  }
  if (rows.empty()) {
    throw ConfigError("fit_tree: no rows");
  }
  if (config.min_leaf < 1 || config.max_depth < 0) {
    throw ConfigError("fit_tree: bad constraints");
  }
  for (const auto& r : rows) {
    if (r.size() != features.size()) {
      throw ConfigError("fit_tree: row width does not match feature list");
    }
  }
  for (int l : labels) {
    if (l < 0 || static_cast<size_t>(l) >= label_names.size()) {
      throw ConfigError("fit_tree: label id out of range");
    }
  }

  DecisionTree tree;
  tree.features = std::move(features);
  tree.labels = std::move(label_names);
  tree.config = config;

  FitState st{&rows, &labels, &tree.features, tree.labels.size(), config, &tree};
  std::vector<size_t> all(rows.size());
  std::iota(all.begin(), all.end(), 0);
  grow(st, all, 0);
  return tree;
}

std::vector<LeafSummary> leaf_report(const DecisionTree& tree) {
  std::vector<LeafSummary> out;
  for (size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& node = tree.nodes[i];
    if (!node.is_leaf) continue;
    LeafSummary s;
    s.node = static_cast<int>(i);
    s.samples = node.samples;
    s.gini = node.gini;
    if (node.gini <= 0.5) {
      // majority label, earliest on ties
      int best = 0;
      for (size_t l = 1; l < node.counts.size(); ++l) {
        if (node.counts[l] > node.counts[best]) {
          best = static_cast<int>(l);
        }
      }
      s.top.push_back(tree.labels[static_cast<size_t>(best)]);
    } else {
      // high impurity: everything at least as frequent as the runner-up
      std::vector<int> sorted = node.counts;
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      const int runner_up = sorted.size() > 1 ? sorted[1] : sorted[0];
      for (size_t l = 0; l < node.counts.size(); ++l) {
        if (node.counts[l] >= runner_up && node.counts[l] > 0) {
          s.top.push_back(tree.labels[l]);
        }
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

void render_node(const DecisionTree& tree, int id, int indent, std::ostringstream& os) {
  const TreeNode& node = tree.nodes[static_cast<size_t>(id)];
  const std::string pad(static_cast<size_t>(indent) * 2, ' ');
  os << pad;
  if (node.is_leaf) {
    LeafSummary s;
    for (const auto& leaf : leaf_report(tree)) {
      if (leaf.node == id) {
        s = leaf;
        break;
      }
    }
    os << "leaf gini=" << node.gini << " samples=" << node.samples << " labels={";
    for (size_t i = 0; i < s.top.size(); ++i) {
      os << (i ? ", " : "") << s.top[i];
    }
    os << "}\n";
    return;
  }
  const TreeFeature& feat = tree.features[static_cast<size_t>(node.feature)];
  os << "split " << feat.name;
  if (node.category >= 0) {
    const auto& cats = feat.categories;
    if (static_cast<size_t>(node.category) < cats.size()) {
      os << " == " << cats[static_cast<size_t>(node.category)];
    } else {
      os << " == " << node.category;
    }
  } else {
    os << " <= " << node.threshold;
  }
  os << " gini=" << node.gini << " samples=" << node.samples << "\n";
  render_node(tree, node.left, indent + 1, os);
  render_node(tree, node.right, indent + 1, os);
}

}  // namespace

std::string render_tree(const DecisionTree& tree) {
  std::ostringstream os;
  render_node(tree, 0, 0, os);
  return os.str();
}

}  // namespace reinitlab
