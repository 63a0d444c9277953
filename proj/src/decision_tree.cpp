#include "genrl/decision_tree.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace genrl {

std::size_t DecisionTree::predict(std::span<const double> x) const {
  if (nodes.empty()) throw ConsistencyError("empty decision tree");
  std::size_t n = 0;
  while (!nodes[n].leaf) {
    const Node& nd = nodes[n];
    if (nd.feature >= x.size()) throw InvalidInput("guard feature vector is too short");
    n = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[n].label;
}

std::size_t DecisionTree::depth() const {
  std::function<std::size_t(std::size_t)> d = [&](std::size_t n) -> std::size_t {
    if (nodes[n].leaf) return 0;
    return 1 + std::max(d(nodes[n].left), d(nodes[n].right));
  };
  return nodes.empty() ? 0 : d(0);
}

std::vector<std::size_t> DecisionTree::labels() const {
  std::set<std::size_t> s;
  for (const auto& n : nodes)
    if (n.leaf) s.insert(n.label);
  return {s.begin(), s.end()};
}

namespace {

double gini(const std::map<std::size_t, std::size_t>& counts, std::size_t total) {
  if (total == 0) return 0.0;
  double g = 1.0;
  for (const auto& [label, c] : counts) {
    double p = static_cast<double>(c) / static_cast<double>(total);
    g -= p * p;
  }
  return g;
}

std::size_t majority(const std::map<std::size_t, std::size_t>& counts) {
  std::size_t best = counts.begin()->first, best_count = 0;
  for (const auto& [label, c] : counts)
    if (c > best_count) {
      best = label;
      best_count = c;
    }
  return best;
}

class Builder {
 public:
  Builder(const std::vector<Vec>& x, const std::vector<std::size_t>& y, std::size_t max_depth)
      : x_(x), y_(y), max_depth_(max_depth) {}

  DecisionTree run() {
    std::vector<std::size_t> all(x_.size());
    std::iota(all.begin(), all.end(), 0);
    grow(all, 0);
    return std::move(tree_);
  }

 private:
  std::size_t grow(const std::vector<std::size_t>& rows, std::size_t depth) {
    std::size_t id = tree_.nodes.size();
    tree_.nodes.emplace_back();
    std::map<std::size_t, std::size_t> counts;
    for (auto r : rows) ++counts[y_[r]];
    tree_.nodes[id].label = majority(counts);
    double parent = gini(counts, rows.size());
    if (counts.size() <= 1 || depth >= max_depth_) return id;

    bool found = false;
    double best_score = parent;
    std::size_t best_feature = 0;
    double best_threshold = 0.0;
    std::size_t dims = x_[rows.front()].size();
    for (std::size_t f = 0; f < dims; ++f) {
      std::vector<std::size_t> order = rows;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return x_[a][f] < x_[b][f]; });
      std::map<std::size_t, std::size_t> left, right = counts;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        std::size_t lab = y_[order[k]];
        ++left[lab];
        if (--right[lab] == 0) right.erase(lab);
        double a = x_[order[k]][f], b = x_[order[k + 1]][f];
        if (!(a < b)) continue;
        std::size_t nl = k + 1, nr = order.size() - nl;
        double score = (static_cast<double>(nl) * gini(left, nl) +
                        static_cast<double>(nr) * gini(right, nr)) /
                       static_cast<double>(order.size());
        if (score < best_score - 1e-12) {
          found = true;
          best_score = score;
          best_feature = f;
          best_threshold = a + (b - a) / 2.0;
        }
      }
    }
    if (!found) return id;

    std::vector<std::size_t> lrows, rrows;
    for (auto r : rows) (x_[r][best_feature] <= best_threshold ? lrows : rrows).push_back(r);
    tree_.nodes[id].leaf = false;
    tree_.nodes[id].feature = best_feature;
    tree_.nodes[id].threshold = best_threshold;
    std::size_t l = grow(lrows, depth + 1);
    std::size_t r = grow(rrows, depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  const std::vector<Vec>& x_;
  const std::vector<std::size_t>& y_;
  std::size_t max_depth_;
  DecisionTree tree_;
};

}  // namespace

DecisionTree train_decision_tree(const std::vector<Vec>& x, const std::vector<std::size_t>& y,
                                 std::size_t max_depth) {
  if (x.empty() || x.size() != y.size()) throw InvalidInput("decision tree needs a non-empty labeled dataset");
  for (const auto& row : x)
    if (row.size() != x.front().size()) throw InvalidInput("feature rows differ in dimension");
  return Builder(x, y, max_depth).run();
}

std::string tree_expression(const DecisionTree& tree,
                            const std::function<std::string(std::size_t)>& feature_name,
                            const std::function<std::string(std::size_t)>& label_name,
                            bool integer_feature) {
  std::function<std::string(std::size_t, bool)> rec = [&](std::size_t n, bool nested) {
    const auto& nd = tree.nodes[n];
    if (nd.leaf) return label_name(nd.label);
    std::string thr = integer_feature ? format_double(std::floor(nd.threshold))
                                      : format_double(nd.threshold);
    std::string s = feature_name(nd.feature) + " <= " + thr + " ? " + rec(nd.left, true) + " : " +
                    rec(nd.right, true);
    return nested ? "(" + s + ")" : s;
  };
  if (tree.nodes.empty()) return "";
  return rec(0, false);
}

}  // namespace genrl
