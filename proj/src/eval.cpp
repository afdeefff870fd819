#include "envicp/eval.hpp"

#include <algorithm>
#include <set>

#include "envicp/error.hpp"
#include "envicp/parallel.hpp"

namespace envicp::eval {
namespace {

using Pair = std::pair<std::string, std::string>;

std::set<Pair> undirected(const CausalGraph& g) {
  std::set<Pair> out;
  for (const auto& [a, b] : g.edges) out.insert(a < b ? Pair{a, b} : Pair{b, a});
  return out;
}

}  // namespace

Score score(const CausalGraph& predicted, const CausalGraph& truth) {
  const std::set<std::string> pn(predicted.nodes.begin(), predicted.nodes.end());
  const std::set<std::string> tn(truth.nodes.begin(), truth.nodes.end());
  if (pn != tn) throw ValidationError("score: predicted and true graphs have different node sets");
  const auto p = undirected(predicted);
  const auto t = undirected(truth);
  std::size_t hits = 0;
  for (const auto& e : p) hits += t.count(e);
  Score s;
  s.tpr = t.empty() ? 1.0 : static_cast<double>(hits) / static_cast<double>(t.size());
  s.fdr = p.empty() ? 0.0 : static_cast<double>(p.size() - hits) / static_cast<double>(p.size());
  return s;
}

std::vector<std::uint64_t> ExperimentParams::resolved_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out(n_sims);
  for (std::size_t i = 0; i < n_sims; ++i) out[i] = base_seed + i;
  return out;
}

CausalGraph discover_graph(const Dataset& data, icp::Method method, const icp::Options& options,
                           std::vector<std::string>* warnings) {
  CausalGraph g;
  g.nodes = data.names();
  for (const auto& target : g.nodes) {
    const auto result = icp::discover(data, target, method, options);
    for (const auto& parent : result.parents) g.edges.emplace(parent, target);
    if (warnings) {
      for (const auto& w : result.warnings) warnings->push_back("target " + target + ": " + w);
    }
  }
  return g;
}

EvalReport run_experiment(const sem::SemSpec& spec, icp::Method method, const ExperimentParams& params) {
  spec.validate();
  params.icp.validate();
  const auto seeds = params.resolved_seeds();
  if (seeds.empty()) throw ValidationError("run_experiment: at least one simulation is required");
  if (params.n < 1) throw ValidationError("run_experiment: sample count must be >= 1");

  const CausalGraph truth = sem::ground_truth(spec);
  const auto variables = spec.variables();
  const std::size_t n_targets = variables.size();

  std::vector<Dataset> datasets(seeds.size());
  parallel_for(seeds.size(), params.icp.workers, [&](std::size_t s) {
    datasets[s] = sem::simulate(spec, params.n, seeds[s]);
  });

  // One job per (simulation, target); discovery itself runs single-threaded.
  icp::Options inner = params.icp;
  inner.workers = 1;
  struct Job {
    std::vector<std::string> parents;
    std::vector<std::string> warnings;
    std::optional<std::string> error;
  };
  std::vector<Job> jobs(seeds.size() * n_targets);
  parallel_for(jobs.size(), params.icp.workers, [&](std::size_t j) {
    const std::size_t s = j / n_targets;
    const std::string& target = variables[j % n_targets];
    try {
      auto result = icp::discover(datasets[s], target, method, inner);
      jobs[j].parents = std::move(result.parents);
      for (const auto& w : result.warnings) jobs[j].warnings.push_back("target " + target + ": " + w);
    } catch (const Error& e) {
      jobs[j].error = "target " + target + ": " + e.what();
    }
  });

  EvalReport report;
  report.spec_name = spec.name;
  report.method = method;
  report.params = params;
  report.params.seeds = seeds;
  report.params.n_sims = seeds.size();
  double tpr_sum = 0.0;
  double fdr_sum = 0.0;
  std::size_t ok = 0;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    SimulationOutcome outcome;
    outcome.seed = seeds[s];
    outcome.predicted.nodes = truth.nodes;
    for (std::size_t t = 0; t < n_targets; ++t) {
      const Job& job = jobs[s * n_targets + t];
      if (job.error && !outcome.error) outcome.error = job.error;
      for (const auto& p : job.parents) outcome.predicted.edges.emplace(p, variables[t]);
      outcome.warnings.insert(outcome.warnings.end(), job.warnings.begin(), job.warnings.end());
    }
    if (outcome.error) {
      ++report.failed;
    } else {
      outcome.score = score(outcome.predicted, truth);
      tpr_sum += outcome.score.tpr;
      fdr_sum += outcome.score.fdr;
      ++ok;
    }
    report.per_sim.push_back(std::move(outcome));
  }
  if (ok > 0) {
    report.mean_tpr = tpr_sum / static_cast<double>(ok);
    report.mean_fdr = fdr_sum / static_cast<double>(ok);
  }
  return report;
}

}  // namespace envicp::eval
