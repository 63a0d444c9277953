#include <functional>
#include <map>
#include <random>
#include <set>

#include <doctest.h>

#include "genrl/decision_tree.hpp"

using namespace genrl;

namespace {

std::vector<Vec> column(std::initializer_list<double> xs) {
  std::vector<Vec> out;
  for (double x : xs) out.push_back({x});
  return out;
}

double accuracy(const DecisionTree& t, const std::vector<Vec>& x, const std::vector<std::size_t>& y) {
  std::size_t ok = 0;
  for (std::size_t k = 0; k < x.size(); ++k) ok += t.predict(x[k]) == y[k];
  return double(ok) / double(x.size());
}

std::vector<double> midpoints(const std::vector<Vec>& x, std::size_t f) {
  std::set<double> v;
  for (const auto& r : x) v.insert(r[f]);
  std::vector<double> s(v.begin(), v.end()), out;
  for (std::size_t k = 1; k < s.size(); ++k) out.push_back(0.5 * (s[k - 1] + s[k]));
  return out;
}

// Smallest depth of any threshold tree that fits the data exactly.
std::size_t min_fitting_depth(const std::vector<Vec>& x, const std::vector<std::size_t>& y,
                              std::size_t limit) {
  std::function<bool(const std::vector<std::size_t>&, std::size_t)> fits =
      [&](const std::vector<std::size_t>& idx, std::size_t d) {
        std::set<std::size_t> labels;
        for (auto k : idx) labels.insert(y[k]);
        if (labels.size() <= 1) return true;
        if (d == 0) return false;
        for (std::size_t f = 0; f < x[0].size(); ++f)
          for (double t : midpoints(x, f)) {
            std::vector<std::size_t> l, r;
            for (auto k : idx) (x[k][f] <= t ? l : r).push_back(k);
            if (l.empty() || r.empty()) continue;
            if (fits(l, d - 1) && fits(r, d - 1)) return true;
          }
        return false;
      };
  std::vector<std::size_t> all(x.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  for (std::size_t d = 0; d <= limit; ++d)
    if (fits(all, d)) return d;
  return limit + 1;
}

double weighted_gini(const std::vector<Vec>& x, const std::vector<std::size_t>& y, std::size_t f,
                     double t) {
  std::map<std::size_t, double> l, r;
  double nl = 0, nr = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k][f] <= t) {
      l[y[k]] += 1;
      nl += 1;
    } else {
      r[y[k]] += 1;
      nr += 1;
    }
  }
  auto g = [](const std::map<std::size_t, double>& c, double n) {
    double s = 1;
    for (const auto& [k, v] : c) s -= (v / n) * (v / n);
    return s;
  };
  return (nl * g(l, nl) + nr * g(r, nr)) / (nl + nr);
}

}  // namespace

TEST_CASE("contiguous index split gives a single threshold") {
  auto x = column({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  std::vector<std::size_t> y{1, 1, 1, 1, 1, 2, 2, 2, 2, 2};
  auto t = train_decision_tree(x, y);
  REQUIRE(t.depth() == 1);
  CHECK(t.nodes[0].threshold == 4.5);
  CHECK(t.predict(Vec{4}) == 1);
  CHECK(t.predict(Vec{5}) == 2);
  CHECK(t.predict(Vec{40}) == 2);
  auto name = [](std::size_t e) { return "e" + std::to_string(e); };
  CHECK(tree_expression(t, [](std::size_t) { return std::string("i"); }, name, true) ==
        "i <= 4 ? e1 : e2");
}

TEST_CASE("one label gives a constant tree") {
  auto t = train_decision_tree(column({0, 1, 2}), {3, 3, 3});
  CHECK(t.depth() == 0);
  CHECK(t.labels() == std::vector<std::size_t>{3});
  CHECK(t.predict(Vec{100}) == 3);
}

TEST_CASE("interleaved labels need depth two") {
  auto x = column({0, 1, 2});
  std::vector<std::size_t> y{1, 2, 1};
  auto t = train_decision_tree(x, y);
  CHECK(accuracy(t, x, y) == 1.0);
  CHECK(min_fitting_depth(x, y, 3) == 2);
  CHECK(t.depth() == 2);
}

TEST_CASE("trees fit separable data at the minimal depth on small problems") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> n_pts(2, 8), lab(0, 2), coord(0, 9);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t n = n_pts(rng);
    std::vector<Vec> x;
    std::vector<std::size_t> y;
    std::set<double> used;
    while (x.size() < n) {
      double v = coord(rng);
      if (!used.insert(v).second) continue;
      x.push_back({v});
      y.push_back(lab(rng));
    }
    auto t = train_decision_tree(x, y, 8);
    // distinct 1-D points are always separable
    CHECK(accuracy(t, x, y) == 1.0);
    CHECK(t.depth() >= min_fitting_depth(x, y, 8));
    // root split minimizes weighted impurity, smallest threshold on ties
    if (!t.nodes[0].leaf) {
      double best = 1e9, best_t = 0;
      for (double m : midpoints(x, 0)) {
        double g = weighted_gini(x, y, 0, m);
        if (g < best - 1e-12) {
          best = g;
          best_t = m;
        }
      }
      CHECK(t.nodes[0].threshold == best_t);
    }
    // deterministic
    auto t2 = train_decision_tree(x, y, 8);
    CHECK(t2.nodes.size() == t.nodes.size());
    for (std::size_t k = 0; k < t.nodes.size(); ++k) CHECK(t2.nodes[k].threshold == t.nodes[k].threshold);
  }
}

TEST_CASE("two features") {
  std::vector<Vec> x{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  std::vector<std::size_t> y{0, 0, 1, 1};
  auto t = train_decision_tree(x, y);
  CHECK(t.depth() == 1);
  CHECK(t.nodes[0].feature == 0);
  CHECK(accuracy(t, x, y) == 1.0);
}

TEST_CASE("bad datasets are rejected") {
  CHECK_THROWS_AS(train_decision_tree({}, {}), InvalidInput);
  CHECK_THROWS_AS(train_decision_tree(column({0, 1}), {0}), InvalidInput);
}
