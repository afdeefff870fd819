#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "envicp/dataset.hpp"

namespace envicp::sem {

struct Gaussian {
  double mean = 0.0;
  double std = 1.0;
};

struct Binomial {
  int trials = 1;
  double prob = 0.5;
};

using NoiseSpec = std::variant<Gaussian, Binomial>;

struct Term {
  std::string parent;
  double coefficient = 0.0;
};

/// variable = sum(coefficient * parent) + noise. No parents: a pure noise source.
struct Equation {
  std::string variable;
  std::vector<Term> parents;
  NoiseSpec noise = Gaussian{};
};

struct SemSpec {
  std::string name;
  std::vector<Equation> equations;  // topological order
  std::map<std::string, VariableKind> kinds;

  /// Throws ValidationError on duplicate or unknown variables, parents that
  /// are not defined earlier, missing kinds, or out-of-range noise parameters.
  void validate() const;
  std::vector<std::string> variables() const;
};

/// Samples n rows. Each variable draws from its own stream keyed by
/// (seed, variable name); columns follow the equation order.
Dataset simulate(const SemSpec& spec, std::size_t n, std::uint64_t seed);

/// One edge per (parent, child) term.
CausalGraph ground_truth(const SemSpec& spec);

/// The benchmark models dataset1 .. dataset5.
std::vector<SemSpec> builtin_specs();
/// Throws ValidationError listing the builtin names when `name` is unknown.
SemSpec builtin_spec(const std::string& name);
std::vector<std::string> builtin_names();

}  // namespace envicp::sem
