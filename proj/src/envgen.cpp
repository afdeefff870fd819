#include "envicp/envgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "envicp/error.hpp"

namespace envicp::envgen {
namespace {

struct Candidate {
  std::size_t pos = 0;  // left child is sorted[lo, pos)
  double threshold = 0.0;
  double gain = 0.0;
};

struct Leaf {
  std::size_t lo = 0;
  std::size_t hi = 0;
  std::optional<Candidate> best;
};

// Split coordinate of every sample: the raw value, or the level's position in
// the level order for categorical covariates.
std::vector<double> coordinates(std::span<const double> x, const std::optional<std::vector<double>>& levels) {
  if (!levels) return {x.begin(), x.end()};
  std::vector<double> out(x.size());
  const auto& lv = *levels;
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t best = 0;
    double best_dist = std::fabs(lv[0] - x[i]);
    for (std::size_t j = 1; j < lv.size(); ++j) {
      const double dist = std::fabs(lv[j] - x[i]);
      if (dist < best_dist || (dist == best_dist && lv[j] < lv[best])) {
        best = j;
        best_dist = dist;
      }
    }
    out[i] = static_cast<double>(best);
  }
  return out;
}

// Levels ordered by mean target value (ties by level code).
std::vector<double> order_levels(std::span<const double> x, std::span<const double> y) {
  std::map<double, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto& [sum, count] = acc[x[i]];
    sum += y[i];
    ++count;
  }
  std::vector<std::pair<double, double>> keyed;  // (mean, level)
  for (const auto& [level, sc] : acc) keyed.emplace_back(sc.first / static_cast<double>(sc.second), level);
  std::sort(keyed.begin(), keyed.end());
  std::vector<double> out;
  for (const auto& [mean, level] : keyed) out.push_back(level);
  return out;
}

class Splitter {
 public:
  Splitter(std::vector<double> coord, std::vector<double> target, TreeMode mode, std::size_t min_leaf)
      : coord_(std::move(coord)), target_(std::move(target)), mode_(mode), min_leaf_(min_leaf) {
    if (mode_ == TreeMode::classification) {
      std::vector<double> classes = target_;
      std::sort(classes.begin(), classes.end());
      classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
      class_of_.resize(target_.size());
      for (std::size_t i = 0; i < target_.size(); ++i) {
        class_of_[i] = static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), target_[i]) -
                                                classes.begin());
      }
      n_classes_ = classes.size();
    }
  }

  std::optional<Candidate> best_split(std::size_t lo, std::size_t hi) const {
    return mode_ == TreeMode::regression ? best_regression(lo, hi) : best_classification(lo, hi);
  }

 private:
  bool admissible(std::size_t lo, std::size_t pos, std::size_t hi) const {
    return coord_[pos - 1] < coord_[pos] && pos - lo >= min_leaf_ && hi - pos >= min_leaf_;
  }

  double midpoint(std::size_t pos) const {
    const double a = coord_[pos - 1];
    const double b = coord_[pos];
    const double mid = a + (b - a) / 2.0;
    return mid < b ? mid : a;
  }

  // Decrease in sum of squared errors, computed on values centered at the
  // node mean: l1^2/nl + r1^2/nr - s1^2/n.
  std::optional<Candidate> best_regression(std::size_t lo, std::size_t hi) const {
    const double n = static_cast<double>(hi - lo);
    double mean = 0.0;
    for (std::size_t i = lo; i < hi; ++i) mean += target_[i];
    mean /= n;
    double total = 0.0;
    for (std::size_t i = lo; i < hi; ++i) total += target_[i] - mean;
    const double parent = total * total / n;

    std::optional<Candidate> best;
    double left = 0.0;
    for (std::size_t pos = lo + 1; pos < hi; ++pos) {
      left += target_[pos - 1] - mean;
      if (!admissible(lo, pos, hi)) continue;
      const double nl = static_cast<double>(pos - lo);
      const double nr = static_cast<double>(hi - pos);
      const double right = total - left;
      const double gain = left * left / nl + right * right / nr - parent;
      if (gain > 0.0 && (!best || gain > best->gain)) best = Candidate{pos, midpoint(pos), gain};
    }
    return best;
  }

  // Decrease in n * Gini: sum cL^2/nL + sum cR^2/nR - sum cP^2/n.
  std::optional<Candidate> best_classification(std::size_t lo, std::size_t hi) const {
    std::vector<double> total(n_classes_, 0.0);
    for (std::size_t i = lo; i < hi; ++i) total[class_of_[i]] += 1.0;
    const double n = static_cast<double>(hi - lo);
    double parent = 0.0;
    for (double c : total) parent += c * c;
    parent /= n;

    std::vector<double> left(n_classes_, 0.0);
    double left_sq = 0.0;   // sum over classes of left count^2
    double right_sq = 0.0;  // sum over classes of right count^2
    for (double c : total) right_sq += c * c;
    std::optional<Candidate> best;
    for (std::size_t pos = lo + 1; pos < hi; ++pos) {
      const std::size_t cls = class_of_[pos - 1];
      const double l = left[cls];
      const double r = total[cls] - l;
      left_sq += 2.0 * l + 1.0;
      right_sq -= 2.0 * r - 1.0;
      left[cls] = l + 1.0;
      if (!admissible(lo, pos, hi)) continue;
      const double nl = static_cast<double>(pos - lo);
      const double nr = static_cast<double>(hi - pos);
      const double gain = left_sq / nl + right_sq / nr - parent;
      if (gain > 0.0 && (!best || gain > best->gain)) best = Candidate{pos, midpoint(pos), gain};
    }
    return best;
  }

  std::vector<double> coord_;
  std::vector<double> target_;
  TreeMode mode_;
  std::size_t min_leaf_;
  std::vector<std::size_t> class_of_;
  std::size_t n_classes_ = 0;
};

std::string format_p(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", p);
  return buf;
}

}  // namespace

TreeModel fit_environment_tree(std::span<const double> x, std::span<const double> y, const TreeParams& params) {
  if (x.size() != y.size()) throw ValidationError("fit_environment_tree: x and y differ in length");
  if (x.empty()) throw ValidationError("fit_environment_tree: no samples");
  if (params.leaves < 2) throw ValidationError("fit_environment_tree: environment count must be >= 2");
  if (params.min_leaf < 1) throw ValidationError("fit_environment_tree: min_leaf must be >= 1");

  TreeModel tree;
  tree.requested_leaves = params.leaves;
  tree.mode = is_discrete(params.target_kind) ? TreeMode::classification : TreeMode::regression;
  if (params.covariate_kind == VariableKind::categorical) tree.level_order = order_levels(x, y);

  const std::vector<double> coord = coordinates(x, tree.level_order);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return coord[a] < coord[b]; });
  std::vector<double> sorted_coord(n);
  std::vector<double> sorted_y(n);
  for (std::size_t i = 0; i < n; ++i) {
    sorted_coord[i] = coord[order[i]];
    sorted_y[i] = y[order[i]];
  }

  std::size_t distinct = 1;
  for (std::size_t i = 1; i < n; ++i) distinct += sorted_coord[i] != sorted_coord[i - 1];
  if (distinct < 2) throw ComputeError("covariate has no split points");

  int target_leaves = params.leaves;
  if (static_cast<std::size_t>(target_leaves) > distinct) {
    target_leaves = static_cast<int>(distinct);
    tree.warnings.push_back("requested " + std::to_string(params.leaves) + " environments but the covariate has only " +
                            std::to_string(distinct) + " distinct values");
  }
  if (n < static_cast<std::size_t>(params.leaves) * params.min_leaf) {
    tree.warnings.push_back("n = " + std::to_string(n) + " is below environments * min_leaf = " +
                            std::to_string(static_cast<std::size_t>(params.leaves) * params.min_leaf));
  }

  const Splitter splitter(std::move(sorted_coord), std::move(sorted_y), tree.mode, params.min_leaf);
  std::vector<Leaf> leaves{Leaf{0, n, splitter.best_split(0, n)}};
  while (static_cast<int>(leaves.size()) < target_leaves) {
    std::size_t pick = leaves.size();
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (!leaves[i].best) continue;
      if (pick == leaves.size() || leaves[i].best->gain > leaves[pick].best->gain) pick = i;
    }
    if (pick == leaves.size()) break;
    const Leaf parent = leaves[pick];
    const Candidate& c = *parent.best;
    tree.gains.push_back(c.gain);
    tree.growth_thresholds.push_back(c.threshold);
    Leaf left{parent.lo, c.pos, splitter.best_split(parent.lo, c.pos)};
    Leaf right{c.pos, parent.hi, splitter.best_split(c.pos, parent.hi)};
    leaves[pick] = left;
    leaves.insert(leaves.begin() + static_cast<std::ptrdiff_t>(pick) + 1, right);
  }

  tree.leaf_count = static_cast<int>(leaves.size());
  tree.thresholds = tree.growth_thresholds;
  std::sort(tree.thresholds.begin(), tree.thresholds.end());
  if (tree.degenerate()) {
    tree.warnings.push_back("degenerate partition: " + std::to_string(tree.leaf_count) + " of " +
                            std::to_string(params.leaves) + " environments (no admissible split with positive gain)");
  }
  return tree;
}

std::vector<int> assign(const TreeModel& tree, std::span<const double> x) {
  const std::vector<double> coord = coordinates(x, tree.level_order);
  std::vector<int> labels(coord.size());
  for (std::size_t i = 0; i < coord.size(); ++i) {
    const auto above = std::lower_bound(tree.thresholds.begin(), tree.thresholds.end(), coord[i]);
    labels[i] = 1 + static_cast<int>(above - tree.thresholds.begin());
  }
  return labels;
}

std::size_t default_min_leaf(std::size_t n, int k) {
  const auto kk = static_cast<std::size_t>(std::max(k, 1));
  const std::size_t floor_size = std::max<std::size_t>(30, n / (10 * kk));
  return std::max<std::size_t>(1, std::min(floor_size, n / kk));
}

std::vector<std::size_t> EnvironmentPartition::sizes() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(std::max(k(), 0)), 0);
  for (int label : labels) {
    if (label >= 1 && label <= k()) ++out[static_cast<std::size_t>(label - 1)];
  }
  return out;
}

std::vector<std::string> EnvironmentPartition::tree_warnings() const {
  std::vector<std::string> out;
  for (std::size_t f = 0; f < trees.size(); ++f) {
    for (const auto& w : trees[f].warnings) out.push_back(cross_fitted() ? "fold " + std::to_string(f) + ": " + w : w);
  }
  return out;
}

std::vector<std::string> EnvironmentPartition::shift_warnings() const {
  std::vector<std::string> out;
  for (const auto& pair : shift_report) {
    if (pair.target_shifted) continue;
    out.push_back("environments " + std::to_string(pair.env_a) + " and " + std::to_string(pair.env_b) + " of " +
                  covariate + " differ only in the covariate (covariate KS p = " + format_p(pair.covariate.p.value()) +
                  ", target KS p = " + format_p(pair.target.p.value()) + ")");
  }
  return out;
}

std::vector<ShiftPair> check_shift(const Dataset& data, const std::string& covariate, const std::string& target,
                                   std::span<const int> labels, int k, stats::PValue alpha_shift) {
  const auto& x = data.column(covariate).values;
  const auto& y = data.column(target).values;
  if (labels.size() != x.size()) throw ValidationError("check_shift: partition does not cover the dataset");
  if (k < 1) throw ValidationError("check_shift: environment count must be >= 1");
  std::vector<std::vector<double>> xs(static_cast<std::size_t>(k));
  std::vector<std::vector<double>> ys(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1 || labels[i] > k) {
      throw ValidationError("check_shift: label " + std::to_string(labels[i]) + " outside 1.." + std::to_string(k));
    }
    xs[static_cast<std::size_t>(labels[i] - 1)].push_back(x[i]);
    ys[static_cast<std::size_t>(labels[i] - 1)].push_back(y[i]);
  }
  for (int e = 0; e < k; ++e) {
    if (xs[static_cast<std::size_t>(e)].empty()) {
      throw ComputeError("environment " + std::to_string(e + 1) + " of " + covariate + " is empty");
    }
  }
  std::vector<ShiftPair> out;
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      ShiftPair pair;
      pair.env_a = a + 1;
      pair.env_b = b + 1;
      const auto ua = static_cast<std::size_t>(a);
      const auto ub = static_cast<std::size_t>(b);
      pair.covariate = stats::ks_two_sample(xs[ua], xs[ub]);
      pair.target = stats::ks_two_sample(ys[ua], ys[ub]);
      pair.target_shifted = pair.target.p < alpha_shift;
      pair.shifted = pair.covariate.p < alpha_shift || pair.target_shifted;
      out.push_back(std::move(pair));
    }
  }
  return out;
}

EnvironmentPartition build_partition(const Dataset& data, const std::string& covariate, const std::string& target,
                                     const PartitionParams& params) {
  const Column& x = data.column(covariate);
  const Column& y = data.column(target);
  EnvironmentPartition partition;
  partition.covariate = covariate;
  TreeParams tree_params;
  tree_params.leaves = params.k;
  tree_params.target_kind = y.kind;
  tree_params.covariate_kind = x.kind;
  const std::size_t n = x.values.size();

  if (!params.cross_fit) {
    tree_params.min_leaf = params.min_leaf == 0 ? default_min_leaf(n, params.k) : params.min_leaf;
    partition.trees.push_back(fit_environment_tree(x.values, y.values, tree_params));
    partition.labels = assign(partition.trees[0], x.values);
    partition.environments = partition.trees[0].leaf_count;
  } else {
    std::array<std::vector<double>, 2> xs;
    std::array<std::vector<double>, 2> ys;
    for (std::size_t r = 0; r < n; ++r) {
      xs[r % 2].push_back(x.values[r]);
      ys[r % 2].push_back(y.values[r]);
    }
    for (int f = 0; f < 2; ++f) {
      tree_params.min_leaf = params.min_leaf == 0 ? default_min_leaf(xs[f].size(), params.k) : params.min_leaf;
      partition.trees.push_back(fit_environment_tree(xs[f], ys[f], tree_params));
    }
    const std::array<std::vector<int>, 2> cross{assign(partition.trees[1], xs[0]), assign(partition.trees[0], xs[1])};
    partition.labels.resize(n);
    for (std::size_t r = 0; r < n; ++r) partition.labels[r] = cross[r % 2][r / 2];
    partition.environments = std::max(partition.trees[0].leaf_count, partition.trees[1].leaf_count);
  }
  if (partition.k() >= 2) {
    partition.shift_report = check_shift(data, covariate, target, partition.labels, partition.k(), params.alpha_shift);
  }
  return partition;
}

}  // namespace envicp::envgen
