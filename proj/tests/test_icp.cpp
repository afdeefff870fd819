#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <vector>

#include "envicp/error.hpp"
#include "envicp/icp.hpp"
#include "envicp/rng.hpp"
#include "envicp/sem.hpp"

using namespace envicp;
using namespace envicp::icp;

namespace {

// Direct one-vs-rest computation on explicit samples.
InvarianceP reference_invariance(const std::vector<double>& r, const std::vector<int>& labels, int k) {
  std::vector<stats::PValue> mean_ps;
  std::vector<stats::PValue> var_ps;
  for (int e = 1; e <= k; ++e) {
    std::vector<double> in;
    std::vector<double> out;
    for (std::size_t i = 0; i < r.size(); ++i) (labels[i] == e ? in : out).push_back(r[i]);
    mean_ps.push_back(stats::t_two_sample(in, out).p);
    var_ps.push_back(stats::f_variance_test(in, out).p);
  }
  return {stats::bonferroni(mean_ps), stats::bonferroni(var_ps)};
}

Dataset from_columns(std::vector<Column> columns) {
  Dataset d;
  d.columns = std::move(columns);
  return d;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST(InvarianceP, MatchesDirectComputation) {
  Stream s(21);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> r(300);
    std::vector<int> labels(300);
    for (std::size_t i = 0; i < r.size(); ++i) {
      labels[i] = 1 + static_cast<int>(i % 4);
      r[i] = s.normal(labels[i] == 2 ? 0.3 : 0.0, labels[i] == 3 ? 1.4 : 1.0);
    }
    const auto got = invariance_p(r, labels, 4);
    const auto want = reference_invariance(r, labels, 4);
    EXPECT_NEAR(got.p_mean.value(), want.p_mean.value(), 1e-10);
    EXPECT_NEAR(got.p_var.value(), want.p_var.value(), 1e-10);
  }
}

TEST(InvarianceP, NullCalibration) {
  int kept = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Stream s(5000 + seed);
    std::vector<double> r(900);
    std::vector<int> labels(900);
    for (std::size_t i = 0; i < r.size(); ++i) {
      r[i] = s.normal(0, 1);
      labels[i] = 1 + static_cast<int>(s.uniform() * 3.0 - 1e-12);
    }
    if (invariance_p(r, labels, 3).p_mean >= PValue(0.05)) ++kept;
  }
  EXPECT_GE(kept, 180);
}

TEST(InvarianceP, ShiftedEnvironmentIsDetected) {
  Stream s(22);
  std::vector<double> r(900);
  std::vector<int> labels(900);
  for (std::size_t i = 0; i < r.size(); ++i) {
    labels[i] = 1 + static_cast<int>(i % 3);
    r[i] = s.normal(labels[i] == 1 ? 5.0 : 0.0, 1.0);
  }
  EXPECT_LT(invariance_p(r, labels, 3).p_mean.value(), 1e-6);
}

TEST(InvarianceP, LabelPermutationSymmetry) {
  Stream s(23);
  std::vector<double> r(600);
  std::vector<int> labels(600);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = s.normal(0, 1);
    labels[i] = 1 + static_cast<int>(i % 3);
  }
  std::vector<int> swapped = labels;
  for (int& l : swapped) l = l == 1 ? 3 : (l == 3 ? 1 : l);
  const auto a = invariance_p(r, labels, 3);
  const auto b = invariance_p(r, swapped, 3);
  EXPECT_NEAR(a.p_mean.value(), b.p_mean.value(), 1e-12);
  EXPECT_NEAR(a.p_var.value(), b.p_var.value(), 1e-12);
}

TEST(InvarianceP, TinyEnvironmentIsAnError) {
  const std::vector<double> r{0.1, 0.2, 0.3, 0.4, 0.5};
  EXPECT_THROW(invariance_p(r, std::vector<int>{1, 1, 1, 1, 2}, 2), ComputeError);
  EXPECT_THROW(invariance_p(r, std::vector<int>{1, 1, 1, 2, 2}, 1), ComputeError);
  EXPECT_THROW(invariance_p(r, std::vector<int>{1, 1, 1, 2, 3}, 2), ValidationError);
}

TEST(IntersectAccepted, EmptyFamilyAndMonotonicity) {
  EXPECT_EQ(intersect_accepted({}), 0u);
  const std::vector<std::uint64_t> family{0b1011, 0b0011, 0b1111};
  EXPECT_EQ(intersect_accepted(family), 0b0011u);
  // A sub-family's intersection contains the family's.
  const std::vector<std::uint64_t> sub{0b1011, 0b1111};
  EXPECT_EQ(intersect_accepted(sub) & intersect_accepted(family), intersect_accepted(family));
  const std::vector<std::uint64_t> with_empty{0b0, 0b0011};
  EXPECT_EQ(intersect_accepted(with_empty), 0u);
}

// The child X3 is adjacent to Y and may be returned as well; edges are
// scored undirected.
TEST(DiscoverV1, Dataset1RecoversNeighboursOfY) {
  const auto spec = sem::builtin_spec("dataset1");
  const std::vector<std::string> neighbours{"X1", "X2", "X3"};
  int both_parents = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto d = sem::simulate(spec, 1000, seed);
    const auto r = discover_v1(d, "Y", Options{});
    for (const auto& p : r.parents) {
      EXPECT_NE(std::find(neighbours.begin(), neighbours.end(), p), neighbours.end()) << p << " seed " << seed;
    }
    const bool x1 = std::find(r.parents.begin(), r.parents.end(), "X1") != r.parents.end();
    const bool x2 = std::find(r.parents.begin(), r.parents.end(), "X2") != r.parents.end();
    EXPECT_TRUE(x1) << "seed " << seed;
    if (x1 && x2) ++both_parents;
  }
  EXPECT_GE(both_parents, 4);
}

TEST(DiscoverV1, ExactCopyIsSelected) {
  Stream s(24);
  std::vector<double> y(400);
  for (auto& v : y) v = s.normal(0, 1);
  const auto d = from_columns({{"X1", VariableKind::continuous, y}, {"Y", VariableKind::continuous, y}});
  const auto r = discover_v1(d, "Y", Options{});
  EXPECT_EQ(r.parents, std::vector<std::string>{"X1"});
  ASSERT_EQ(r.per_partition.size(), 1u);
  const auto& subsets = r.per_partition[0].subsets;
  ASSERT_EQ(subsets.size(), 2u);
  EXPECT_TRUE(subsets[1].accepted);
  EXPECT_FALSE(subsets[0].accepted);
}

TEST(DiscoverV1, SubsetInvariantsAndCounts) {
  const auto d = sem::simulate(sem::builtin_spec("dataset3"), 1000, 2);
  const auto r = discover_v1(d, "Y", Options{});
  const std::size_t m = r.covariates.size();
  EXPECT_EQ(r.subsets_evaluated, std::size_t{1} << m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& diag = r.per_partition[i];
    if (diag.skipped) continue;
    ASSERT_EQ(diag.subsets.size(), std::size_t{1} << m);
    std::vector<std::uint64_t> accepted;
    for (const auto& t : diag.subsets) {
      if (t.error) continue;
      const double combined = std::min(1.0, 2.0 * std::min(t.p_mean.value(), t.p_var.value()));
      EXPECT_DOUBLE_EQ(t.p_combined.value(), combined);
      EXPECT_EQ(t.accepted, t.p_combined >= r.options.alpha);
      EXPECT_EQ(static_cast<std::size_t>(std::popcount(t.mask)), t.subset.size());
      if (t.accepted) accepted.push_back(t.mask);
    }
    const bool selected = std::find(r.parents.begin(), r.parents.end(), r.covariates[i]) != r.parents.end();
    EXPECT_EQ(selected, static_cast<bool>(intersect_accepted(accepted) >> i & 1U));
    if (!diag.subsets[0].error && diag.subsets[0].accepted) EXPECT_FALSE(selected);
  }
}

TEST(DiscoverV1, RaisingAlphaNeverGrowsTheAcceptedFamily) {
  const auto d = sem::simulate(sem::builtin_spec("dataset1"), 500, 3);
  Options lo;
  lo.alpha = PValue(0.01);
  Options hi;
  hi.alpha = PValue(0.2);
  const auto a = discover_v1(d, "Y", lo);
  const auto b = discover_v1(d, "Y", hi);
  for (std::size_t i = 0; i < a.per_partition.size(); ++i) {
    for (std::size_t s = 0; s < a.per_partition[i].subsets.size(); ++s) {
      if (b.per_partition[i].subsets[s].accepted) EXPECT_TRUE(a.per_partition[i].subsets[s].accepted);
    }
  }
}

TEST(DiscoverV1, ConstantCovariateIsSkipped) {
  Stream s(25);
  std::vector<double> x(300);
  std::vector<double> y(300);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = s.normal(0, 1);
    y[i] = x[i] + s.normal(0, 1);
  }
  const auto d = from_columns({{"C", VariableKind::continuous, std::vector<double>(300, 2.0)},
                               {"X", VariableKind::continuous, x},
                               {"Y", VariableKind::continuous, y}});
  const auto r = discover_v1(d, "Y", Options{});
  EXPECT_TRUE(r.per_partition[0].skipped);
  EXPECT_FALSE(r.per_partition[0].warnings.empty());
  EXPECT_EQ(std::count(r.parents.begin(), r.parents.end(), "C"), 0);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(DiscoverV1, RejectsUnknownTargetAndTooManyCovariates) {
  const auto d = sem::simulate(sem::builtin_spec("dataset1"), 100, 0);
  EXPECT_THROW(discover_v1(d, "Z", Options{}), ValidationError);
  Dataset wide;
  Stream s(26);
  for (int j = 0; j < 22; ++j) {
    Column c{"V" + std::to_string(j), VariableKind::continuous, std::vector<double>(50)};
    for (auto& v : c.values) v = s.normal(0, 1);
    wide.columns.push_back(std::move(c));
  }
  EXPECT_THROW(discover_v1(wide, "V0", Options{}), ValidationError);
  EXPECT_NO_THROW(discover_v2(wide, "V0", Options{}));
}

TEST(DiscoverV2, FallbackMatchesV1) {
  const auto d = sem::simulate(sem::builtin_spec("dataset3"), 1000, 5);
  const auto v1 = discover_v1(d, "Y", Options{});
  const auto v2 = discover_v2(d, "Y", Options{});
  EXPECT_EQ(v2.combinations_evaluated, 1u);
  ASSERT_FALSE(v2.notes.empty());
  EXPECT_NE(v2.notes[0].find("v1 fallback"), std::string::npos);
  EXPECT_EQ(v1.parents, v2.parents);
  for (const auto& [name, votes] : v2.votes) EXPECT_LE(votes.eligible, 1u);
}

TEST(DiscoverV2, CombinationCountAndVotingRule) {
  const auto d = sem::simulate(sem::builtin_spec("dataset4"), 1000, 1);
  Options strict;
  strict.alpha_vote = PValue(0.0);
  const auto r = discover_v2(d, "Y", Options{});
  const auto s = discover_v2(d, "Y", strict);
  const std::uint64_t m = r.covariates.size();
  EXPECT_EQ(r.combinations_evaluated, binomial(m, 5));
  for (const auto& name : r.covariates) {
    const auto& v = r.votes.at(name);
    EXPECT_LE(v.selected, v.eligible);
    EXPECT_LE(v.eligible, binomial(m - 1, 4));
    const bool selected = std::find(r.parents.begin(), r.parents.end(), name) != r.parents.end();
    EXPECT_EQ(selected, v.eligible > 0 && static_cast<double>(v.selected) >= 0.9 * static_cast<double>(v.eligible) - 1e-9);
    const auto& sv = s.votes.at(name);
    const bool strict_selected = std::find(s.parents.begin(), s.parents.end(), name) != s.parents.end();
    EXPECT_EQ(strict_selected, sv.eligible > 0 && sv.selected == sv.eligible);
  }
}

TEST(Discover, WorkerCountDoesNotChangeResults) {
  const auto d = sem::simulate(sem::builtin_spec("dataset2"), 800, 6);
  Options one;
  Options many;
  many.workers = 8;
  for (Method method : {Method::v1, Method::v2}) {
    const auto a = discover(d, "Y", method, one);
    const auto b = discover(d, "Y", method, many);
    EXPECT_EQ(a.parents, b.parents);
    ASSERT_EQ(a.per_partition.size(), b.per_partition.size());
    for (std::size_t i = 0; i < a.per_partition.size(); ++i) {
      ASSERT_EQ(a.per_partition[i].subsets.size(), b.per_partition[i].subsets.size());
      for (std::size_t s = 0; s < a.per_partition[i].subsets.size(); ++s) {
        EXPECT_EQ(a.per_partition[i].subsets[s].p_combined.value(), b.per_partition[i].subsets[s].p_combined.value());
      }
    }
  }
}

TEST(Discover, PureNoiseTargetUsuallyHasNoParents) {
  sem::SemSpec spec;
  spec.name = "null";
  for (const char* v : {"A", "B", "C", "Y"}) {
    spec.equations.push_back({v, {}, sem::Gaussian{0, 1}});
    spec.kinds[v] = VariableKind::continuous;
  }
  int empty = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    if (discover_v1(sem::simulate(spec, 500, seed), "Y", Options{}).parents.empty()) ++empty;
  }
  EXPECT_GE(empty, 18);
}

TEST(Options, Validation) {
  Options o;
  EXPECT_NO_THROW(o.validate());
  o.k_envs = 1;
  EXPECT_THROW(o.validate(), ValidationError);
  o = Options{};
  o.cap = 0;
  EXPECT_THROW(o.validate(), ValidationError);
  o = Options{};
  o.workers = 0;
  EXPECT_THROW(o.validate(), ValidationError);
  EXPECT_EQ(parse_method("icpv2"), Method::v2);
  EXPECT_EQ(parse_method("v1"), Method::v1);
  EXPECT_THROW(parse_method("v3"), ValidationError);
}
