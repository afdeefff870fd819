#include "envicp/icp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>

#include "envicp/error.hpp"
#include "envicp/parallel.hpp"
#include "envicp/regress.hpp"

namespace envicp::icp {
namespace {

constexpr int kMaxExhaustiveCovariates = 20;

struct Context {
  const Dataset* data = nullptr;
  std::string target;
  std::vector<std::string> covariates;
  std::vector<std::optional<envgen::EnvironmentPartition>> partitions;
  std::vector<PartitionDiagnostics> diagnostics;
  std::vector<std::string> warnings;
};

std::vector<std::string> names_of(std::uint64_t mask, const std::vector<std::string>& covariates) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    if (mask >> j & 1U) out.push_back(covariates[j]);
  }
  return out;
}

Context prepare(const Dataset& data, const std::string& target, const Options& options) {
  options.validate();
  data.validate();
  data.column(target);  // throws for an unknown target
  Context ctx;
  ctx.data = &data;
  ctx.target = target;
  for (const auto& c : data.columns) {
    if (c.name != target) ctx.covariates.push_back(c.name);
  }
  if (ctx.covariates.empty()) throw ValidationError("dataset has no covariates besides the target");
  if (ctx.covariates.size() > 63) throw ValidationError("at most 63 covariates are supported");

  const std::size_t m = ctx.covariates.size();
  envgen::PartitionParams params;
  params.k = options.k_envs;
  params.min_leaf = options.min_leaf;
  params.alpha_shift = options.alpha_shift;
  params.cross_fit = options.cross_fit;
  ctx.partitions.resize(m);
  ctx.diagnostics.resize(m);
  parallel_for(m, options.workers, [&](std::size_t i) {
    auto& diag = ctx.diagnostics[i];
    diag.covariate = ctx.covariates[i];
    try {
      auto partition = envgen::build_partition(data, ctx.covariates[i], target, params);
      for (const auto& tree : partition.trees) diag.thresholds.push_back(tree.thresholds);
      diag.leaf_sizes = partition.sizes();
      for (const auto& w : partition.tree_warnings()) diag.warnings.push_back(w);
      for (const auto& w : partition.shift_warnings()) diag.warnings.push_back(w);
      if (partition.k() < 2) {
        diag.skipped = true;
        diag.warnings.push_back("partition skipped: fewer than two environments");
      } else {
        ctx.partitions[i] = std::move(partition);
      }
    } catch (const ComputeError& e) {
      diag.skipped = true;
      diag.warnings.push_back(std::string("partition skipped: ") + e.what());
    }
  });
  for (const auto& diag : ctx.diagnostics) {
    for (const auto& w : diag.warnings) ctx.warnings.push_back(diag.covariate + ": " + w);
  }
  return ctx;
}

// Regresses the target on every subset in `masks` and tests the residuals
// under every usable partition. Result is indexed [subset][covariate].
std::vector<std::vector<SubsetTestResult>> test_subsets(const Context& ctx, const std::vector<std::uint64_t>& masks,
                                                        const Options& options) {
  const Dataset& data = *ctx.data;
  const std::size_t m = ctx.covariates.size();
  std::vector<std::vector<SubsetTestResult>> table(masks.size());
  parallel_for(masks.size(), options.workers, [&](std::size_t s) {
    const std::uint64_t mask = masks[s];
    const auto subset = names_of(mask, ctx.covariates);
    auto& row = table[s];
    row.resize(m);
    std::optional<std::string> fit_error;
    regress::OlsFit fit;
    try {
      fit = regress::ols(data, subset, ctx.target);
    } catch (const ComputeError& e) {
      fit_error = e.what();
    }
    for (std::size_t i = 0; i < m; ++i) {
      SubsetTestResult& r = row[i];
      r.subset = subset;
      r.mask = mask;
      if (!ctx.partitions[i]) {
        r.error = "partition unavailable";
        continue;
      }
      if (fit_error) {
        r.error = *fit_error;
        continue;
      }
      try {
        const auto& partition = *ctx.partitions[i];
        const InvarianceP p = invariance_p(fit.residuals, partition.labels, partition.k());
        r.p_mean = p.p_mean;
        r.p_var = p.p_var;
        r.p_combined = stats::combine_min_double(p.p_mean, p.p_var);
        r.accepted = r.p_combined >= options.alpha;
      } catch (const ComputeError& e) {
        r.error = e.what();
      }
    }
  });
  return table;
}

DiscoveryResult make_result(Context& ctx, Method method, const Options& options) {
  DiscoveryResult result;
  result.target = ctx.target;
  result.method = method;
  result.options = options;
  result.covariates = ctx.covariates;
  result.warnings = ctx.warnings;
  return result;
}

}  // namespace

std::string_view to_string(Method method) { return method == Method::v1 ? "v1" : "v2"; }

Method parse_method(std::string_view name) {
  if (name == "v1" || name == "icpv1") return Method::v1;
  if (name == "v2" || name == "icpv2") return Method::v2;
  throw ValidationError("unknown method '" + std::string(name) + "' (expected v1 or v2)");
}

void Options::validate() const {
  if (k_envs < 2) throw ValidationError("environment count must be >= 2");
  if (cap < 1 || cap > 63) throw ValidationError("cap must be in 1..63");
  if (workers < 1) throw ValidationError("worker count must be >= 1");
}

std::uint64_t intersect_accepted(std::span<const std::uint64_t> accepted) {
  if (accepted.empty()) return 0;
  std::uint64_t out = ~std::uint64_t{0};
  for (auto mask : accepted) out &= mask;
  return out;
}

InvarianceP invariance_p(std::span<const double> residuals, std::span<const int> labels, int k) {
  if (residuals.size() != labels.size()) throw ValidationError("invariance_p: residuals and labels differ in length");
  if (k < 2) throw ComputeError("invariance test needs at least two environments");
  const auto kk = static_cast<std::size_t>(k);
  std::vector<std::size_t> count(kk, 0);
  for (int label : labels) {
    if (label < 1 || label > k) throw ValidationError("invariance_p: label outside 1..k");
    ++count[static_cast<std::size_t>(label - 1)];
  }
  for (std::size_t e = 0; e < kk; ++e) {
    if (count[e] < 2 || labels.size() - count[e] < 2) {
      throw ComputeError("environment " + std::to_string(e + 1) + " or its complement has fewer than two samples");
    }
  }
  // Two passes in total: per-environment means, then sums of squares about
  // them. Complements are merged from the other environments.
  std::vector<double> mean(kk, 0.0);
  for (std::size_t i = 0; i < residuals.size(); ++i) mean[static_cast<std::size_t>(labels[i] - 1)] += residuals[i];
  for (std::size_t e = 0; e < kk; ++e) mean[e] /= static_cast<double>(count[e]);
  std::vector<double> ss(kk, 0.0);
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    const auto e = static_cast<std::size_t>(labels[i] - 1);
    const double d = residuals[i] - mean[e];
    ss[e] += d * d;
  }
  std::vector<stats::PValue> mean_ps;
  std::vector<stats::PValue> var_ps;
  mean_ps.reserve(kk);
  var_ps.reserve(kk);
  for (std::size_t e = 0; e < kk; ++e) {
    double n_out = 0.0;
    double mean_out = 0.0;
    double ss_out = 0.0;
    for (std::size_t o = 0; o < kk; ++o) {
      if (o == e || count[o] == 0) continue;
      const double n_o = static_cast<double>(count[o]);
      const double total = n_out + n_o;
      const double delta = mean[o] - mean_out;
      mean_out += delta * n_o / total;
      ss_out += ss[o] + delta * delta * n_out * n_o / total;
      n_out = total;
    }
    const stats::Moments in{count[e], mean[e], ss[e] / static_cast<double>(count[e] - 1)};
    const stats::Moments out{residuals.size() - count[e], mean_out, ss_out / (n_out - 1.0)};
    mean_ps.push_back(stats::t_two_sample(in, out).p);
    var_ps.push_back(stats::f_variance_test(in, out).p);
  }
  return {stats::bonferroni(mean_ps), stats::bonferroni(var_ps)};
}

DiscoveryResult discover_v1(const Dataset& data, const std::string& target, const Options& options) {
  Context ctx = prepare(data, target, options);
  const std::size_t m = ctx.covariates.size();
  if (m > kMaxExhaustiveCovariates) {
    throw ValidationError("v1 enumerates 2^" + std::to_string(m) + " subsets; use v2 for more than " +
                          std::to_string(kMaxExhaustiveCovariates) + " covariates");
  }
  std::vector<std::uint64_t> masks(std::size_t{1} << m);
  for (std::size_t s = 0; s < masks.size(); ++s) masks[s] = s;
  const auto table = test_subsets(ctx, masks, options);

  DiscoveryResult result = make_result(ctx, Method::v1, options);
  result.subsets_evaluated = masks.size();
  for (std::size_t i = 0; i < m; ++i) {
    PartitionDiagnostics diag = std::move(ctx.diagnostics[i]);
    if (!diag.skipped) {
      std::vector<std::uint64_t> accepted;
      for (std::size_t s = 0; s < masks.size(); ++s) {
        const auto& r = table[s][i];
        diag.subsets.push_back(r);
        if (!r.error && r.accepted) accepted.push_back(r.mask);
      }
      const std::uint64_t candidates = intersect_accepted(accepted);
      diag.intersection = names_of(candidates, ctx.covariates);
      if (candidates >> i & 1U) result.parents.push_back(ctx.covariates[i]);
    }
    result.per_partition.push_back(std::move(diag));
  }
  return result;
}

DiscoveryResult discover_v2(const Dataset& data, const std::string& target, const Options& options) {
  Context ctx = prepare(data, target, options);
  const std::size_t m = ctx.covariates.size();
  const std::size_t pool_size = std::min<std::size_t>(static_cast<std::size_t>(options.cap), m);

  std::vector<std::uint64_t> pools;
  if (m <= static_cast<std::size_t>(options.cap)) {
    pools.push_back((std::uint64_t{1} << m) - 1);
  } else {
    // Gosper's hack: all m-bit masks with pool_size bits, increasing.
    const std::uint64_t limit = std::uint64_t{1} << m;
    for (std::uint64_t g = (std::uint64_t{1} << pool_size) - 1; g < limit;) {
      pools.push_back(g);
      const std::uint64_t c = g & (~g + 1);
      const std::uint64_t r = g + c;
      g = (((r ^ g) >> 2) / c) | r;
    }
  }

  // Every subset of some pool: all masks with at most pool_size bits.
  std::vector<std::uint64_t> masks;
  std::unordered_map<std::uint64_t, std::size_t> index;
  {
    masks.push_back(0);
    for (std::size_t size = 1; size <= pool_size; ++size) {
      const std::uint64_t limit = std::uint64_t{1} << m;
      for (std::uint64_t g = (std::uint64_t{1} << size) - 1; g < limit;) {
        masks.push_back(g);
        const std::uint64_t c = g & (~g + 1);
        const std::uint64_t r = g + c;
        g = (((r ^ g) >> 2) / c) | r;
      }
    }
    std::sort(masks.begin(), masks.end());
    for (std::size_t s = 0; s < masks.size(); ++s) index.emplace(masks[s], s);
  }
  const auto table = test_subsets(ctx, masks, options);

  DiscoveryResult result = make_result(ctx, Method::v2, options);
  result.subsets_evaluated = masks.size();
  result.combinations_evaluated = pools.size();
  if (m <= static_cast<std::size_t>(options.cap)) {
    result.notes.push_back("v1 fallback: " + std::to_string(m) + " covariates do not exceed cap " +
                           std::to_string(options.cap) + ", a single pool holds all of them");
  }

  std::vector<std::uint64_t> accepted;
  for (std::size_t i = 0; i < m; ++i) {
    Votes votes;
    if (ctx.partitions[i]) {
      const std::uint64_t bit = std::uint64_t{1} << i;
      for (const std::uint64_t pool : pools) {
        if (!(pool & bit)) continue;
        accepted.clear();
        bool any_tested = false;
        for (std::uint64_t s = pool;; s = (s - 1) & pool) {
          const auto& r = table[index.at(s)][i];
          if (!r.error) {
            any_tested = true;
            if (r.accepted) accepted.push_back(s);
          }
          if (s == 0) break;
        }
        if (!any_tested) continue;  // failed pool: not eligible
        ++votes.eligible;
        if (intersect_accepted(accepted) & bit) ++votes.selected;
      }
    }
    const double needed = (1.0 - options.alpha_vote.value()) * static_cast<double>(votes.eligible);
    if (votes.eligible > 0 && static_cast<double>(votes.selected) + 1e-9 >= needed) {
      result.parents.push_back(ctx.covariates[i]);
    }
    result.votes[ctx.covariates[i]] = votes;

    PartitionDiagnostics diag = std::move(ctx.diagnostics[i]);
    if (!diag.skipped) {
      for (std::size_t s = 0; s < masks.size(); ++s) diag.subsets.push_back(table[s][i]);
    }
    result.per_partition.push_back(std::move(diag));
  }
  return result;
}

DiscoveryResult discover(const Dataset& data, const std::string& target, Method method, const Options& options) {
  return method == Method::v1 ? discover_v1(data, target, options) : discover_v2(data, target, options);
}

}  // namespace envicp::icp
