#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "envicp/dataset.hpp"
#include "envicp/envgen.hpp"
#include "envicp/eval.hpp"
#include "envicp/icp.hpp"
#include "envicp/sem.hpp"

namespace envicp::io {

using nlohmann::json;

// Datasets: CSV with a `name:kind` header, plus `<path>.meta.json` holding the seed.

struct DatasetRead {
  Dataset data;
  std::vector<std::string> warnings;
};

void write_dataset_csv(const Dataset& data, std::ostream& out);
DatasetRead read_dataset_csv(std::istream& in, const std::string& source = {});
void write_dataset(const Dataset& data, const std::string& path);
DatasetRead read_dataset(const std::string& path);
std::string metadata_path(const std::string& csv_path);

// SEM specifications.

json spec_to_json(const sem::SemSpec& spec);
sem::SemSpec spec_from_json(const json& doc);
sem::SemSpec read_spec(const std::string& path);
void write_spec(const sem::SemSpec& spec, const std::string& path);
/// A builtin name or a path to a spec file.
sem::SemSpec resolve_spec(const std::string& name_or_path);

// Reports.

json to_json(const stats::TestReport& report);
json to_json(const envgen::EnvironmentPartition& partition);
/// Per-partition subset tables are cut after `max_subsets` rows each.
json to_json(const icp::DiscoveryResult& result, std::size_t max_subsets = 4096);
json to_json(const eval::EvalReport& report);
json to_json(const CausalGraph& graph);

/// Fixed-width table: one row per spec, one TPR and FDR column per method.
std::string render_table(const std::vector<eval::EvalReport>& reports);

// Graphs.

struct GraphEdge {
  std::string from;
  std::string to;
  bool directed = true;
};

struct GraphDocument {
  std::string name = "G";
  std::vector<std::string> nodes;
  std::vector<GraphEdge> edges;
  std::vector<std::pair<std::string, std::string>> metadata;

  void validate() const;
};

/// Ground-truth graphs are directed; discovered graphs are undirected.
GraphDocument graph_document(const CausalGraph& graph, bool directed);
GraphDocument graph_document(const icp::DiscoveryResult& result);

std::string to_dot(const GraphDocument& graph);
void export_dot(const GraphDocument& graph, const std::string& path);

void write_json(const json& doc, const std::string& path);
json read_json(const std::string& path);
void write_text(const std::string& text, const std::string& path);

}  // namespace envicp::io
