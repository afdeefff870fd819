#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "envicp/dataset.hpp"
#include "envicp/stats.hpp"

namespace envicp::envgen {

enum class TreeMode { regression, classification };

/// Univariate tree whose leaves are the environments. Leaves are intervals of
/// the split coordinate numbered 1..leaf_count from left to right; values equal
/// to a threshold go left.
///
/// For categorical covariates the split coordinate is the position of the
/// level in `level_order` (levels sorted by target mean), so every leaf is a
/// subset of levels.
struct TreeModel {
  std::vector<double> thresholds;        // strictly increasing
  std::vector<double> gains;             // impurity decrease of each split, in growth order
  std::vector<double> growth_thresholds; // thresholds in growth order
  int leaf_count = 1;
  int requested_leaves = 2;
  TreeMode mode = TreeMode::regression;
  std::optional<std::vector<double>> level_order;
  std::vector<std::string> warnings;

  /// Fewer leaves than requested.
  bool degenerate() const { return leaf_count < requested_leaves; }
};

struct TreeParams {
  int leaves = 3;
  std::size_t min_leaf = 1;
  VariableKind target_kind = VariableKind::continuous;
  VariableKind covariate_kind = VariableKind::continuous;
};

/// Best-first CART on one feature: repeatedly applies the admissible split
/// with the largest impurity decrease over all current leaves until
/// `leaves` leaves exist or no split has positive gain. Regression mode
/// (continuous target) uses squared error, classification mode uses Gini.
/// Ties go to the left-most leaf, then the left-most threshold.
/// Throws ComputeError when x has fewer than two distinct values.
TreeModel fit_environment_tree(std::span<const double> x, std::span<const double> y,
                               const TreeParams& params);

/// Leaf label in 1..leaf_count for every value.
std::vector<int> assign(const TreeModel& tree, std::span<const double> x);

/// min_leaf used when none is given: max(30, n / (10 k)), capped at n / k.
std::size_t default_min_leaf(std::size_t n, int k);

struct ShiftPair {
  int env_a = 0;
  int env_b = 0;
  stats::TestReport covariate;
  stats::TestReport target;
  bool shifted = false;         // either KS p-value below alpha_shift
  bool target_shifted = false;  // target KS p-value below alpha_shift
};

/// Environments of one covariate. Without cross-fitting there is one tree
/// fitted on all rows. With cross-fitting rows are split into two folds by
/// parity of the row index, one tree is fitted per fold, and each row is
/// labelled by the tree of the other fold, so no row's label depends on its
/// own target value.
struct EnvironmentPartition {
  std::string covariate;
  std::vector<int> labels;  // 1..k()
  std::vector<TreeModel> trees;
  int environments = 1;
  std::vector<ShiftPair> shift_report;

  int k() const { return environments; }
  bool cross_fitted() const { return trees.size() == 2; }
  std::vector<std::size_t> sizes() const;
  std::vector<std::string> tree_warnings() const;
  /// Pairs whose environments differ only in the covariate. Tree leaves are
  /// disjoint intervals of the covariate, so its marginal always shifts.
  std::vector<std::string> shift_warnings() const;
};

struct PartitionParams {
  int k = 3;
  std::size_t min_leaf = 0;  // 0 selects default_min_leaf of the rows each tree is fitted on
  stats::PValue alpha_shift{0.05};
  bool cross_fit = true;
};

/// Pairwise KS tests on the covariate and the target restricted to each pair
/// of environments. Throws ComputeError when an environment is empty.
std::vector<ShiftPair> check_shift(const Dataset& data, const std::string& covariate,
                                   const std::string& target, std::span<const int> labels, int k,
                                   stats::PValue alpha_shift);

/// Fits, assigns and shift-checks the partition of `covariate` against `target`.
/// A partition with fewer than two environments carries no shift report.
EnvironmentPartition build_partition(const Dataset& data, const std::string& covariate,
                                     const std::string& target, const PartitionParams& params);

}  // namespace envicp::envgen
