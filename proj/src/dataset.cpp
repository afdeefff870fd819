#include "envicp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "envicp/error.hpp"

namespace envicp {

std::string_view to_string(VariableKind kind) {
  switch (kind) {
    case VariableKind::continuous:
      return "continuous";
    case VariableKind::binary:
      return "binary";
    case VariableKind::categorical:
      return "categorical";
  }
  return "continuous";
}

VariableKind parse_kind(std::string_view name) {
  if (name == "continuous") return VariableKind::continuous;
  if (name == "binary") return VariableKind::binary;
  if (name == "categorical") return VariableKind::categorical;
  throw ValidationError("unknown variable kind '" + std::string(name) +
                        "' (expected continuous, binary or categorical)");
}

std::optional<std::size_t> Dataset::find(std::string_view name) const {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].name == name) return j;
  }
  return std::nullopt;
}

std::size_t Dataset::index_of(std::string_view name) const {
  if (auto j = find(name)) return *j;
  throw ValidationError("no column named '" + std::string(name) + "'");
}

std::vector<std::string> Dataset::names() const {
  std::vector<std::string> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.name);
  return out;
}

void Dataset::validate() const {
  if (columns.size() < 2) throw ValidationError("dataset needs at least two columns");
  const std::size_t n = rows();
  if (n < 1) throw ValidationError("dataset has no rows");
  std::map<std::string, int> seen;
  for (const auto& c : columns) {
    if (c.name.empty()) throw ValidationError("column with empty name");
    if (seen[c.name]++) throw ValidationError("duplicate column '" + c.name + "'");
    if (c.values.size() != n) throw ValidationError("column '" + c.name + "' has a different length");
    for (std::size_t i = 0; i < n; ++i) {
      const double v = c.values[i];
      if (!std::isfinite(v)) {
        throw ValidationError("column '" + c.name + "' row " + std::to_string(i + 1) + ": non-finite value");
      }
      if (c.kind == VariableKind::binary && v != 0.0 && v != 1.0) {
        throw ValidationError("column '" + c.name + "' row " + std::to_string(i + 1) +
                              ": binary value must be 0 or 1");
      }
      if (c.kind == VariableKind::categorical && v != std::round(v)) {
        throw ValidationError("column '" + c.name + "' row " + std::to_string(i + 1) +
                              ": categorical value must be an integer level code");
      }
    }
  }
}

std::set<std::string> CausalGraph::parents(std::string_view child) const {
  std::set<std::string> out;
  for (const auto& [from, to] : edges) {
    if (to == child) out.insert(from);
  }
  return out;
}

bool CausalGraph::has_node(std::string_view name) const {
  return std::find(nodes.begin(), nodes.end(), name) != nodes.end();
}

void CausalGraph::validate() const {
  std::map<std::string, std::vector<std::string>> children;
  for (const auto& n : nodes) children[n];
  for (const auto& [from, to] : edges) {
    if (!has_node(from) || !has_node(to)) {
      throw ValidationError("edge " + from + " -> " + to + " references an unknown node");
    }
    children[from].push_back(to);
  }
  // Depth-first search for a back edge.
  std::map<std::string, int> state;
  auto visit = [&](auto&& self, const std::string& node) -> void {
    state[node] = 1;
    for (const auto& next : children[node]) {
      if (state[next] == 1) throw ValidationError("graph has a cycle through '" + next + "'");
      if (state[next] == 0) self(self, next);
    }
    state[node] = 2;
  };
  for (const auto& n : nodes) {
    if (state[n] == 0) visit(visit, n);
  }
}

}  // namespace envicp
