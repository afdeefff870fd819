#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace envicp {

enum class VariableKind { continuous, binary, categorical };

std::string_view to_string(VariableKind kind);
/// Throws ValidationError for unknown names.
VariableKind parse_kind(std::string_view name);

/// True for kinds whose trees are fitted in classification mode.
inline bool is_discrete(VariableKind kind) { return kind != VariableKind::continuous; }

struct Column {
  std::string name;
  VariableKind kind = VariableKind::continuous;
  std::vector<double> values;
};

/// Column-major sample matrix. Every column has the same length.
struct Dataset {
  std::vector<Column> columns;
  std::uint64_t seed = 0;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().values.size(); }
  std::size_t cols() const { return columns.size(); }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws ValidationError when the column is absent.
  std::size_t index_of(std::string_view name) const;
  const Column& column(std::string_view name) const { return columns[index_of(name)]; }
  std::vector<std::string> names() const;

  /// Checks shape and kind domains (n >= 1, p >= 2, equal lengths, binary in
  /// {0,1}, categorical integer-coded, all values finite).
  void validate() const;
};

/// Directed graph over named variables. Edges are (parent, child).
struct CausalGraph {
  std::vector<std::string> nodes;
  std::set<std::pair<std::string, std::string>> edges;

  std::set<std::string> parents(std::string_view child) const;
  bool has_node(std::string_view name) const;
  /// Throws ValidationError on dangling endpoints or cycles.
  void validate() const;
};

}  // namespace envicp
