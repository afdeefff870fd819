#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "envicp/dataset.hpp"
#include "envicp/icp.hpp"
#include "envicp/sem.hpp"

namespace envicp::eval {

struct Score {
  double tpr = 0.0;
  double fdr = 0.0;
};

/// Adjacency scoring: edges are compared as unordered pairs. TPR is 1 when
/// the truth has no edges; FDR is 0 when nothing is predicted.
/// Throws ValidationError when the node sets differ.
Score score(const CausalGraph& predicted, const CausalGraph& truth);

struct ExperimentParams {
  std::size_t n = 1000;
  std::size_t n_sims = 5;
  std::uint64_t base_seed = 0;
  std::vector<std::uint64_t> seeds;  // overrides base_seed + i when non-empty
  icp::Options icp;

  std::vector<std::uint64_t> resolved_seeds() const;
};

struct SimulationOutcome {
  std::uint64_t seed = 0;
  CausalGraph predicted;
  Score score;
  std::optional<std::string> error;
  std::vector<std::string> warnings;
};

struct EvalReport {
  std::string spec_name;
  icp::Method method = icp::Method::v1;
  ExperimentParams params;
  std::vector<SimulationOutcome> per_sim;
  double mean_tpr = 0.0;  // over simulations without error
  double mean_fdr = 0.0;
  std::size_t failed = 0;
};

/// Rebuilds the whole graph: every variable in turn is the target and the
/// discovered parent relations are unioned. Simulations and targets run on
/// params.icp.workers threads; the report does not depend on that count.
EvalReport run_experiment(const sem::SemSpec& spec, icp::Method method, const ExperimentParams& params);

/// Discovery over every variable of an existing dataset.
CausalGraph discover_graph(const Dataset& data, icp::Method method, const icp::Options& options,
                           std::vector<std::string>* warnings = nullptr);

}  // namespace envicp::eval
