#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "envicp/dataset.hpp"
#include "envicp/envgen.hpp"
#include "envicp/stats.hpp"

namespace envicp::icp {

using stats::PValue;

enum class Method { v1, v2 };

std::string_view to_string(Method method);
/// Accepts "v1"/"v2" (also "icpv1"/"icpv2"). Throws ValidationError otherwise.
Method parse_method(std::string_view name);

struct Options {
  int k_envs = 3;
  PValue alpha{0.05};
  PValue alpha_vote{0.1};
  PValue alpha_shift{0.05};
  int cap = 5;
  std::size_t min_leaf = 0;  // 0 selects envgen::default_min_leaf
  bool cross_fit = true;     // label each half of the rows with a tree fitted on the other half
  unsigned workers = 1;

  void validate() const;
};

struct SubsetTestResult {
  std::vector<std::string> subset;
  std::uint64_t mask = 0;  // bit j set when covariate j (dataset order, target removed) is in the subset
  PValue p_mean;
  PValue p_var;
  PValue p_combined;
  bool accepted = false;
  std::optional<std::string> error;  // subset skipped
};

struct PartitionDiagnostics {
  std::string covariate;
  bool skipped = false;
  std::vector<std::vector<double>> thresholds;  // one list per fitted tree
  std::vector<std::size_t> leaf_sizes;
  std::vector<SubsetTestResult> subsets;  // ordered by mask
  std::optional<std::vector<std::string>> intersection;  // v1 only
  std::vector<std::string> warnings;
};

struct Votes {
  std::size_t selected = 0;
  std::size_t eligible = 0;
};

struct DiscoveryResult {
  std::string target;
  Method method = Method::v1;
  Options options;
  std::vector<std::string> covariates;
  std::vector<std::string> parents;  // dataset order
  std::vector<PartitionDiagnostics> per_partition;  // covariate order
  std::map<std::string, Votes> votes;  // v2 only
  std::size_t subsets_evaluated = 0;   // distinct subsets regressed
  std::size_t combinations_evaluated = 0;  // v2 only
  std::vector<std::string> notes;
  std::vector<std::string> warnings;
};

struct InvarianceP {
  PValue p_mean;
  PValue p_var;
};

/// One-vs-rest Welch t and F tests of the residuals for each of the k
/// environments, Bonferroni-corrected within each family. Throws ComputeError
/// when an environment or its complement has fewer than two samples.
InvarianceP invariance_p(std::span<const double> residuals, std::span<const int> labels, int k);

/// Exhaustive ICP: every covariate subset (including the empty one) is tested
/// under every covariate's partition; a covariate is a parent when it belongs
/// to the intersection of the subsets accepted under its own partition.
DiscoveryResult discover_v1(const Dataset& data, const std::string& target, const Options& options);

/// Voting ICP over all size-`cap` covariate pools. Within a pool the v1 rule
/// picks candidates; a covariate is a parent when it is picked in at least
/// (1 - alpha_vote) of the pools that contain it.
DiscoveryResult discover_v2(const Dataset& data, const std::string& target, const Options& options);

DiscoveryResult discover(const Dataset& data, const std::string& target, Method method,
                         const Options& options);

/// Intersection of the accepted masks; empty when nothing was accepted.
std::uint64_t intersect_accepted(std::span<const std::uint64_t> accepted);

}  // namespace envicp::icp
