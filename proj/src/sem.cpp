#include "envicp/sem.hpp"

#include <algorithm>
#include <set>

#include "envicp/error.hpp"
#include "envicp/rng.hpp"

namespace envicp::sem {

void SemSpec::validate() const {
  if (name.empty()) throw ValidationError("spec has no name");
  if (equations.empty()) throw ValidationError("spec '" + name + "' has no equations");
  std::set<std::string> defined;
  for (const auto& eq : equations) {
    if (eq.variable.empty()) throw ValidationError("spec '" + name + "': equation without a variable");
    if (defined.count(eq.variable)) {
      throw ValidationError("spec '" + name + "': variable '" + eq.variable + "' defined twice");
    }
    std::set<std::string> seen_parents;
    for (const auto& term : eq.parents) {
      if (term.parent == eq.variable) {
        throw ValidationError("spec '" + name + "': '" + eq.variable + "' depends on itself");
      }
      if (!defined.count(term.parent)) {
        throw ValidationError("spec '" + name + "': parent '" + term.parent + "' of '" + eq.variable +
                              "' is unknown or defined later (equations must be in topological order)");
      }
      if (!seen_parents.insert(term.parent).second) {
        throw ValidationError("spec '" + name + "': parent '" + term.parent + "' repeated in '" +
                              eq.variable + "'");
      }
    }
    std::visit(
        [&](const auto& noise) {
          using T = std::decay_t<decltype(noise)>;
          if constexpr (std::is_same_v<T, Gaussian>) {
            if (!(noise.std >= 0.0)) {
              throw ValidationError("spec '" + name + "': gaussian std of '" + eq.variable + "' must be >= 0");
            }
          } else {
            if (noise.trials < 1) {
              throw ValidationError("spec '" + name + "': binomial trials of '" + eq.variable + "' must be >= 1");
            }
            if (!(noise.prob >= 0.0 && noise.prob <= 1.0)) {
              throw ValidationError("spec '" + name + "': binomial prob of '" + eq.variable +
                                    "' must be in [0, 1]");
            }
          }
        },
        eq.noise);
    if (!kinds.count(eq.variable)) {
      throw ValidationError("spec '" + name + "': no kind for '" + eq.variable + "'");
    }
    defined.insert(eq.variable);
  }
  for (const auto& [variable, kind] : kinds) {
    if (!defined.count(variable)) {
      throw ValidationError("spec '" + name + "': kind given for unknown variable '" + variable + "'");
    }
  }
}

std::vector<std::string> SemSpec::variables() const {
  std::vector<std::string> out;
  out.reserve(equations.size());
  for (const auto& eq : equations) out.push_back(eq.variable);
  return out;
}

Dataset simulate(const SemSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw ValidationError("sample count must be >= 1");

  Dataset data;
  data.seed = seed;
  data.columns.reserve(spec.equations.size());
  for (const auto& eq : spec.equations) {
    Column col{eq.variable, spec.kinds.at(eq.variable), std::vector<double>(n, 0.0)};
    for (const auto& term : eq.parents) {
      const auto& parent = data.columns[data.index_of(term.parent)].values;
      for (std::size_t i = 0; i < n; ++i) col.values[i] += term.coefficient * parent[i];
    }
    Stream stream(stream_seed(seed, eq.variable));
    std::visit(
        [&](const auto& noise) {
          using T = std::decay_t<decltype(noise)>;
          for (std::size_t i = 0; i < n; ++i) {
            if constexpr (std::is_same_v<T, Gaussian>) {
              col.values[i] += stream.normal(noise.mean, noise.std);
            } else {
              col.values[i] += stream.binomial(noise.trials, noise.prob);
            }
          }
        },
        eq.noise);
    data.columns.push_back(std::move(col));
  }
  return data;
}

CausalGraph ground_truth(const SemSpec& spec) {
  spec.validate();
  CausalGraph g;
  g.nodes = spec.variables();
  for (const auto& eq : spec.equations) {
    for (const auto& term : eq.parents) g.edges.emplace(term.parent, eq.variable);
  }
  return g;
}

namespace {

Equation source(std::string name, NoiseSpec noise) { return Equation{std::move(name), {}, noise}; }

Equation linear(std::string name, std::vector<Term> parents, NoiseSpec noise) {
  return Equation{std::move(name), std::move(parents), noise};
}

SemSpec make(std::string name, std::vector<Equation> equations,
             std::map<std::string, VariableKind> overrides = {}) {
  SemSpec spec{std::move(name), std::move(equations), {}};
  for (const auto& eq : spec.equations) {
    auto it = overrides.find(eq.variable);
    spec.kinds[eq.variable] = it == overrides.end() ? VariableKind::continuous : it->second;
  }
  return spec;
}

// Second arguments of N(., .) are standard deviations.
constexpr Gaussian N(double mean, double sd) { return Gaussian{mean, sd}; }
constexpr Gaussian kNoNoise{0.0, 0.0};

}  // namespace

std::vector<SemSpec> builtin_specs() {
  std::vector<SemSpec> specs;

  specs.push_back(make("dataset1", {
                                       source("X1", N(0.8, 1)),
                                       source("X2", N(0.5, 1)),
                                       linear("Y", {{"X1", 0.7}, {"X2", 0.4}}, N(0, 1)),
                                       linear("X3", {{"Y", 0.5}}, N(0, 1)),
                                   }));

  // "Bin(0.5, 1)" read as a single Bernoulli(0.5) trial.
  specs.push_back(make("dataset2",
                       {
                           source("X1", Binomial{6, 0.5}),
                           source("X2", Binomial{1, 0.5}),
                           linear("Y", {{"X1", 0.7}, {"X2", 0.4}}, N(0, 1)),
                           linear("X3", {{"Y", 0.5}}, N(0, 1)),
                       },
                       {{"X1", VariableKind::categorical}, {"X2", VariableKind::binary}}));

  specs.push_back(make("dataset3", {
                                       source("X1", N(0.2, 0.5)),
                                       source("W", N(0.5, 1)),
                                       linear("X2", {{"W", 0.6}, {"X1", 0.4}}, N(0, 1)),
                                       linear("Y", {{"X2", 0.5}, {"W", 0.5}}, N(0, 1)),
                                       linear("Y2", {{"X2", 0.7}}, N(0.2, 1)),
                                       linear("X3", {{"Y", 0.3}}, N(0, 1)),
                                   }));

  specs.push_back(make("dataset4", {
                                       source("X", N(0.2, 0.8)),
                                       source("X1", N(0, 1.1)),
                                       linear("X0", {{"X", 0.5}}, N(0, 0.5)),
                                       linear("W", {{"X", 1.0}}, N(0, 1)),
                                       linear("X2", {{"X1", 0.5}, {"W", 0.5}, {"X0", 0.5}}, kNoNoise),
                                       linear("Y", {{"X2", 0.5}, {"W", 0.5}}, N(0, 1)),
                                       linear("Y2", {{"X2", 0.7}}, N(0.2, 1)),
                                       linear("X3", {{"Y", 0.5}}, N(0, 1)),
                                       linear("X4", {{"W", 1.0}}, N(0, 1)),
                                       linear("X5", {{"X4", 0.8}}, N(0, 1)),
                                   }));

  specs.push_back(make("dataset5", {
                                       source("X", N(0.2, 0.8)),
                                       source("X1", N(0, 1.1)),
                                       source("X9", N(0.4, 0.75)),
                                       linear("X0", {{"X", 0.5}}, N(0, 0.5)),
                                       linear("W", {{"X", 1.0}}, N(0, 1)),
                                       linear("X2", {{"X1", 0.5}, {"W", 0.5}, {"X0", 0.5}}, kNoNoise),
                                       linear("Y", {{"X2", 0.5}, {"W", 0.5}, {"X9", 0.5}}, N(0, 1)),
                                       linear("Y2", {{"X2", 0.7}}, N(0.2, 1)),
                                       linear("X3", {{"Y", 0.5}}, N(0, 1)),
                                       linear("X4", {{"W", 1.0}}, N(0, 1)),
                                       linear("X5", {{"X4", 0.8}}, N(0, 1)),
                                       linear("X6", {{"X3", 1.0}}, N(0, 1)),
                                       linear("X7", {{"X6", 0.1}}, N(0.2, 0.5)),
                                   }));
  return specs;
}

std::vector<std::string> builtin_names() {
  std::vector<std::string> out;
  for (const auto& s : builtin_specs()) out.push_back(s.name);
  return out;
}

SemSpec builtin_spec(const std::string& name) {
  for (auto& s : builtin_specs()) {
    if (s.name == name) return s;
  }
  std::string list;
  for (const auto& n : builtin_names()) list += (list.empty() ? "" : ", ") + n;
  throw ValidationError("unknown spec '" + name + "' (builtin specs: " + list + ")");
}

}  // namespace envicp::sem
