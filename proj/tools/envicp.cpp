// Command-line front end: simulate, discover, evaluate, graph.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "envicp/error.hpp"
#include "envicp/eval.hpp"
#include "envicp/icp.hpp"
#include "envicp/io.hpp"
#include "envicp/parallel.hpp"
#include "envicp/sem.hpp"

namespace {

using namespace envicp;

struct RunConfig {
  std::vector<std::string> specs;
  std::string data;
  std::string result;
  std::string target;
  std::vector<std::string> methods{"v1"};
  std::size_t n = 1000;
  std::size_t sims = 5;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;
  int k_envs = 3;
  double alpha = 0.05;
  double alpha_vote = 0.1;
  double alpha_shift = 0.05;
  int cap = 5;
  std::size_t min_leaf = 0;
  bool no_cross_fit = false;
  unsigned workers = default_workers();
  std::size_t max_report_subsets = 4096;
  std::string output;
  std::string dot;
  std::string table;

  icp::Options icp_options() const {
    icp::Options o;
    o.k_envs = k_envs;
    o.alpha = stats::PValue(alpha);
    o.alpha_vote = stats::PValue(alpha_vote);
    o.alpha_shift = stats::PValue(alpha_shift);
    o.cap = cap;
    o.min_leaf = min_leaf;
    o.cross_fit = !no_cross_fit;
    o.workers = workers;
    o.validate();
    return o;
  }
};

void add_icp_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--method", cfg.methods, "ICP variant(s): v1, v2")->delimiter(',')->capture_default_str();
  cmd->add_option("--k-envs,-k", cfg.k_envs, "environments per covariate")->check(CLI::Range(2, 1000))->capture_default_str();
  cmd->add_option("--alpha", cfg.alpha, "subset rejection level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd->add_option("--alpha-vote", cfg.alpha_vote, "v2 voting level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd->add_option("--alpha-shift", cfg.alpha_shift, "dataset-shift check level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd->add_option("--cap", cfg.cap, "v2 pool size")->check(CLI::Range(1, 63))->capture_default_str();
  cmd->add_option("--min-leaf", cfg.min_leaf, "minimum leaf size per tree (0: max(30, m/(10k)) on the m rows it is fitted on)")->capture_default_str();
  cmd->add_flag("--no-cross-fit", cfg.no_cross_fit, "fit each environment tree on all rows and label those same rows");
  cmd->add_option("--workers", cfg.workers, "worker threads")->check(CLI::Range(1u, 4096u))->capture_default_str();
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    io::write_text(text, path);
  }
}

int simulate_cmd(const RunConfig& cfg) {
  if (cfg.specs.size() != 1) throw ValidationError("simulate takes exactly one --spec");
  if (cfg.n < 1) throw ValidationError("--n must be >= 1");
  if (cfg.output.empty()) throw ValidationError("simulate needs --output");
  const auto spec = io::resolve_spec(cfg.specs.front());
  const Dataset data = sem::simulate(spec, cfg.n, cfg.seed);
  io::write_dataset(data, cfg.output);
  std::cerr << "wrote " << data.rows() << "x" << data.cols() << " dataset to " << cfg.output << "\n";
  return 0;
}

int discover_cmd(const RunConfig& cfg) {
  if (cfg.data.empty()) throw ValidationError("discover needs --data");
  if (cfg.target.empty()) throw ValidationError("discover needs --target");
  if (cfg.methods.size() != 1) throw ValidationError("discover takes a single --method");
  const auto method = icp::parse_method(cfg.methods.front());
  const auto options = cfg.icp_options();
  auto read = io::read_dataset(cfg.data);
  for (const auto& w : read.warnings) std::cerr << "warning: " << w << "\n";
  if (!read.data.find(cfg.target)) {
    throw ValidationError("--target '" + cfg.target + "' is not a column of " + cfg.data);
  }
  const auto result = icp::discover(read.data, cfg.target, method, options);
  for (const auto& note : result.notes) std::cerr << "note: " << note << "\n";
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  emit(io::to_json(result, cfg.max_report_subsets).dump(2) + "\n", cfg.output);
  if (!cfg.dot.empty()) io::export_dot(io::graph_document(result), cfg.dot);
  return 0;
}

int evaluate_cmd(const RunConfig& cfg) {
  if (cfg.specs.empty()) throw ValidationError("evaluate needs --spec");
  if (cfg.n < 1) throw ValidationError("--n must be >= 1");
  if (cfg.sims < 1 && cfg.seeds.empty()) throw ValidationError("--sims must be >= 1");
  std::vector<icp::Method> methods;
  for (const auto& m : cfg.methods) methods.push_back(icp::parse_method(m));
  eval::ExperimentParams params;
  params.n = cfg.n;
  params.n_sims = cfg.sims;
  params.base_seed = cfg.seed;
  params.seeds = cfg.seeds;
  params.icp = cfg.icp_options();
  std::vector<sem::SemSpec> specs;
  for (const auto& s : cfg.specs) specs.push_back(io::resolve_spec(s));

  std::vector<eval::EvalReport> reports;
  for (const auto& spec : specs) {
    for (const auto method : methods) reports.push_back(eval::run_experiment(spec, method, params));
  }
  io::json doc;
  doc["reports"] = io::json::array();
  for (const auto& r : reports) doc["reports"].push_back(io::to_json(r));
  const std::string table = io::render_table(reports);
  if (!cfg.output.empty()) io::write_json(doc, cfg.output);
  if (!cfg.table.empty()) io::write_text(table, cfg.table);
  std::cout << table;
  std::size_t failed = 0;
  for (const auto& r : reports) failed += r.failed;
  return failed == 0 ? 0 : 1;
}

int graph_cmd(const RunConfig& cfg) {
  io::GraphDocument doc;
  if (!cfg.result.empty()) {
    const io::json result = io::read_json(cfg.result);
    CausalGraph g;
    const std::string target = result.at("target").get<std::string>();
    g.nodes.push_back(target);
    for (const auto& c : result.at("covariates")) g.nodes.push_back(c.get<std::string>());
    for (const auto& p : result.at("parents")) g.edges.emplace(p.get<std::string>(), target);
    doc = io::graph_document(g, false);
    doc.metadata.emplace_back("method", result.at("method").get<std::string>());
    doc.metadata.emplace_back("target", target);
  } else if (cfg.specs.size() == 1) {
    const auto spec = io::resolve_spec(cfg.specs.front());
    doc = io::graph_document(sem::ground_truth(spec), true);
    doc.name = spec.name;
    doc.metadata.emplace_back("source", "ground truth");
  } else {
    throw ValidationError("graph needs --spec or --result");
  }
  emit(io::to_dot(doc), cfg.output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Environment generation and invariant causal prediction on observational data"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* simulate = app.add_subcommand("simulate", "sample a dataset from a structural equation model");
  simulate->add_option("--spec", cfg.specs, "builtin spec name or spec file")->required();
  simulate->add_option("--n", cfg.n, "sample count")->capture_default_str();
  simulate->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  simulate->add_option("-o,--output", cfg.output, "CSV path")->required();

  auto* discover = app.add_subcommand("discover", "find the causal parents of one target");
  discover->add_option("--data", cfg.data, "dataset CSV")->required();
  discover->add_option("--target", cfg.target, "target column")->required();
  add_icp_flags(discover, cfg);
  discover->add_option("--max-report-subsets", cfg.max_report_subsets, "subset rows reported per partition")
      ->capture_default_str();
  discover->add_option("-o,--output", cfg.output, "result JSON (default stdout)");
  discover->add_option("--dot", cfg.dot, "also write the discovered graph as DOT");

  auto* evaluate = app.add_subcommand("evaluate", "score full-graph recovery over repeated simulations");
  evaluate->add_option("--spec", cfg.specs, "builtin spec name(s) or spec file(s)")->required()->delimiter(',');
  add_icp_flags(evaluate, cfg);
  evaluate->add_option("--n", cfg.n, "samples per simulation")->capture_default_str();
  evaluate->add_option("--sims", cfg.sims, "simulation count")->capture_default_str();
  evaluate->add_option("--seed", cfg.seed, "base seed; simulation i uses seed + i")->capture_default_str();
  evaluate->add_option("--seeds", cfg.seeds, "explicit seed list")->delimiter(',');
  evaluate->add_option("-o,--output", cfg.output, "report JSON");
  evaluate->add_option("--table", cfg.table, "text table path");

  auto* graph = app.add_subcommand("graph", "write a DOT graph for a spec or a discovery result");
  graph->add_option("--spec", cfg.specs, "ground truth of a builtin spec or spec file");
  graph->add_option("--result", cfg.result, "discovery result JSON");
  graph->add_option("-o,--output", cfg.output, "DOT path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return simulate_cmd(cfg);
    if (*discover) return discover_cmd(cfg);
    if (*evaluate) return evaluate_cmd(cfg);
    if (*graph) return graph_cmd(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
