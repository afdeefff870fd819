#include "envicp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "envicp/error.hpp"

namespace envicp::io {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Field {
  std::string text;
  std::size_t column = 1;  // 1-based character offset
};

std::vector<Field> split_csv_line(const std::string& line) {
  std::vector<Field> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    const auto end = comma == std::string::npos ? line.size() : comma;
    out.push_back(Field{trim(std::string_view(line).substr(start, end - start)), start + 1});
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace

// ---------------------------------------------------------------------------
// Datasets

void write_dataset_csv(const Dataset& data, std::ostream& out) {
  for (std::size_t j = 0; j < data.cols(); ++j) {
    out << (j ? "," : "") << data.columns[j].name << ':' << to_string(data.columns[j].kind);
  }
  out << '\n';
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t j = 0; j < data.cols(); ++j) out << (j ? "," : "") << format_double(data.columns[j].values[i]);
    out << '\n';
  }
}

DatasetRead read_dataset_csv(std::istream& in, const std::string& source) {
  DatasetRead result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw ParseError(source, line_no, 0, "missing header row");

  for (const auto& field : split_csv_line(line)) {
    const auto colon = field.text.find(':');
    Column col;
    col.name = trim(field.text.substr(0, colon));
    if (col.name.empty()) throw ParseError(source, line_no, field.column, "empty column name in header");
    if (colon == std::string::npos) {
      result.warnings.push_back("column '" + col.name + "' has no kind suffix; assuming continuous");
    } else {
      try {
        col.kind = parse_kind(trim(field.text.substr(colon + 1)));
      } catch (const ValidationError& e) {
        throw ParseError(source, line_no, field.column + colon + 1, e.what());
      }
    }
    for (const auto& other : result.data.columns) {
      if (other.name == col.name) throw ParseError(source, line_no, field.column, "duplicate column '" + col.name + "'");
    }
    result.data.columns.push_back(std::move(col));
  }

  auto& columns = result.data.columns;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != columns.size()) {
      throw ParseError(source, line_no, 0,
                       "expected " + std::to_string(columns.size()) + " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string& text = fields[j].text;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw ParseError(source, line_no, fields[j].column, "'" + text + "' is not a finite number");
      }
      if (columns[j].kind == VariableKind::binary && v != 0.0 && v != 1.0) {
        throw ValidationError((source.empty() ? std::string("<input>") : source) + ":" + std::to_string(line_no) +
                              ":" + std::to_string(fields[j].column) + ": binary column '" + columns[j].name +
                              "' holds " + text + " (expected 0 or 1)");
      }
      if (columns[j].kind == VariableKind::categorical && v != std::round(v)) {
        throw ValidationError((source.empty() ? std::string("<input>") : source) + ":" + std::to_string(line_no) +
                              ":" + std::to_string(fields[j].column) + ": categorical column '" + columns[j].name +
                              "' holds non-integer level " + text);
      }
      columns[j].values.push_back(v);
    }
  }
  result.data.validate();
  return result;
}

std::string metadata_path(const std::string& csv_path) { return csv_path + ".meta.json"; }

void write_dataset(const Dataset& data, const std::string& path) {
  {
    auto out = open_out(path);
    write_dataset_csv(data, out);
  }
  json meta;
  meta["seed"] = data.seed;
  meta["rows"] = data.rows();
  meta["columns"] = data.cols();
  write_json(meta, metadata_path(path));
}

DatasetRead read_dataset(const std::string& path) {
  auto in = open_in(path);
  DatasetRead result = read_dataset_csv(in, path);
  const std::string meta_path = metadata_path(path);
  if (std::filesystem::exists(meta_path)) {
    const json meta = read_json(meta_path);
    if (meta.contains("seed")) result.data.seed = meta.at("seed").get<std::uint64_t>();
  }
  return result;
}

// ---------------------------------------------------------------------------
// SEM specifications

json spec_to_json(const sem::SemSpec& spec) {
  json eqs = json::array();
  for (const auto& eq : spec.equations) {
    json e;
    e["variable"] = eq.variable;
    e["kind"] = std::string(to_string(spec.kinds.at(eq.variable)));
    json parents = json::array();
    for (const auto& t : eq.parents) parents.push_back({{"parent", t.parent}, {"coefficient", t.coefficient}});
    e["parents"] = parents;
    std::visit(
        [&](const auto& noise) {
          using T = std::decay_t<decltype(noise)>;
          if constexpr (std::is_same_v<T, sem::Gaussian>) {
            e["noise"] = {{"gaussian", {{"mean", noise.mean}, {"std", noise.std}}}};
          } else {
            e["noise"] = {{"binomial", {{"trials", noise.trials}, {"prob", noise.prob}}}};
          }
        },
        eq.noise);
    eqs.push_back(e);
  }
  return {{"name", spec.name}, {"equations", eqs}};
}

sem::SemSpec spec_from_json(const json& doc) {
  sem::SemSpec spec;
  try {
    spec.name = doc.at("name").get<std::string>();
    for (const auto& e : doc.at("equations")) {
      sem::Equation eq;
      eq.variable = e.at("variable").get<std::string>();
      spec.kinds[eq.variable] = parse_kind(e.value("kind", std::string("continuous")));
      if (e.contains("parents")) {
        for (const auto& t : e.at("parents")) {
          eq.parents.push_back({t.at("parent").get<std::string>(), t.at("coefficient").get<double>()});
        }
      }
      if (!e.contains("noise") || e.at("noise").is_null()) {
        eq.noise = sem::Gaussian{0.0, 0.0};
      } else if (const auto& noise = e.at("noise"); noise.contains("gaussian")) {
        const auto& g = noise.at("gaussian");
        eq.noise = sem::Gaussian{g.value("mean", 0.0), g.value("std", 1.0)};
      } else if (noise.contains("binomial")) {
        const auto& b = noise.at("binomial");
        eq.noise = sem::Binomial{b.at("trials").get<int>(), b.at("prob").get<double>()};
      } else {
        throw ValidationError("noise of '" + eq.variable + "' must be {\"gaussian\": ...} or {\"binomial\": ...}");
      }
      spec.equations.push_back(std::move(eq));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

sem::SemSpec read_spec(const std::string& path) { return spec_from_json(read_json(path)); }

void write_spec(const sem::SemSpec& spec, const std::string& path) { write_json(spec_to_json(spec), path); }

sem::SemSpec resolve_spec(const std::string& name_or_path) {
  const auto names = sem::builtin_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) return sem::builtin_spec(name_or_path);
  if (std::filesystem::exists(name_or_path)) return read_spec(name_or_path);
  return sem::builtin_spec(name_or_path);  // throws with the list of builtin names
}

// ---------------------------------------------------------------------------
// Reports

json to_json(const stats::TestReport& report) {
  return {{"method", report.method},
          {"statistic", report.statistic},
          {"p", report.p.value()},
          {"n_a", report.n_a},
          {"n_b", report.n_b}};
}

json to_json(const envgen::EnvironmentPartition& partition) {
  json doc;
  doc["covariate"] = partition.covariate;
  doc["cross_fitted"] = partition.cross_fitted();
  doc["environments"] = partition.k();
  json trees = json::array();
  for (const auto& tree : partition.trees) {
    json t;
    t["mode"] = tree.mode == envgen::TreeMode::regression ? "regression" : "classification";
    t["requested_leaves"] = tree.requested_leaves;
    t["leaves"] = tree.leaf_count;
    t["thresholds"] = tree.thresholds;
    if (tree.level_order) t["level_order"] = *tree.level_order;
    trees.push_back(std::move(t));
  }
  doc["trees"] = trees;
  doc["leaf_sizes"] = partition.sizes();
  json pairs = json::array();
  for (const auto& pair : partition.shift_report) {
    pairs.push_back({{"env_a", pair.env_a},
                     {"env_b", pair.env_b},
                     {"covariate_ks", to_json(pair.covariate)},
                     {"target_ks", to_json(pair.target)},
                     {"shifted", pair.shifted},
                     {"target_shifted", pair.target_shifted}});
  }
  doc["shift_checks"] = pairs;
  json warnings = partition.tree_warnings();
  for (const auto& w : partition.shift_warnings()) warnings.push_back(w);
  doc["warnings"] = warnings;
  return doc;
}

json to_json(const icp::DiscoveryResult& result, std::size_t max_subsets) {
  const bool v2 = result.method == icp::Method::v2;
  json params;
  params["k_envs"] = result.options.k_envs;
  params["alpha"] = result.options.alpha.value();
  params["alpha_shift"] = result.options.alpha_shift.value();
  params["min_leaf"] = result.options.min_leaf;
  params["cross_fit"] = result.options.cross_fit;
  if (v2) {
    params["alpha_vote"] = result.options.alpha_vote.value();
    params["cap"] = result.options.cap;
  }

  json partitions = json::array();
  for (const auto& diag : result.per_partition) {
    json p;
    p["covariate"] = diag.covariate;
    p["skipped"] = diag.skipped;
    p["thresholds"] = diag.thresholds;
    p["leaf_sizes"] = diag.leaf_sizes;
    if (diag.intersection) p["intersection"] = *diag.intersection;
    p["warnings"] = diag.warnings;
    json subsets = json::array();
    for (std::size_t s = 0; s < diag.subsets.size() && s < max_subsets; ++s) {
      const auto& r = diag.subsets[s];
      json row;
      row["subset"] = r.subset;
      if (r.error) {
        row["error"] = *r.error;
      } else {
        row["p_mean"] = r.p_mean.value();
        row["p_var"] = r.p_var.value();
        row["p_combined"] = r.p_combined.value();
        row["accepted"] = r.accepted;
      }
      subsets.push_back(std::move(row));
    }
    p["subsets"] = std::move(subsets);
    p["subsets_total"] = diag.subsets.size();
    p["subsets_truncated"] = diag.subsets.size() > max_subsets;
    partitions.push_back(std::move(p));
  }

  json doc;
  doc["target"] = result.target;
  doc["method"] = std::string(icp::to_string(result.method));
  doc["parameters"] = params;
  doc["covariates"] = result.covariates;
  doc["parents"] = result.parents;
  doc["subsets_evaluated"] = result.subsets_evaluated;
  if (v2) {
    doc["combinations_evaluated"] = result.combinations_evaluated;
    json votes = json::object();
    for (const auto& [name, v] : result.votes) votes[name] = {{"selected", v.selected}, {"eligible", v.eligible}};
    doc["votes"] = votes;
  }
  doc["partitions"] = std::move(partitions);
  doc["notes"] = result.notes;
  doc["warnings"] = result.warnings;
  return doc;
}

json to_json(const CausalGraph& graph) {
  json edges = json::array();
  for (const auto& [from, to] : graph.edges) edges.push_back({from, to});
  return {{"nodes", graph.nodes}, {"edges", edges}};
}

json to_json(const eval::EvalReport& report) {
  const auto& p = report.params;
  json params;
  params["n"] = p.n;
  params["n_sims"] = p.n_sims;
  params["seeds"] = p.seeds;
  params["k_envs"] = p.icp.k_envs;
  params["alpha"] = p.icp.alpha.value();
  params["alpha_shift"] = p.icp.alpha_shift.value();
  params["min_leaf"] = p.icp.min_leaf;
  params["cross_fit"] = p.icp.cross_fit;
  if (report.method == icp::Method::v2) {
    params["alpha_vote"] = p.icp.alpha_vote.value();
    params["cap"] = p.icp.cap;
  }
  json sims = json::array();
  for (const auto& sim : report.per_sim) {
    json s;
    s["seed"] = sim.seed;
    if (sim.error) {
      s["error"] = *sim.error;
    } else {
      s["tpr"] = sim.score.tpr;
      s["fdr"] = sim.score.fdr;
    }
    s["predicted"] = to_json(sim.predicted);
    s["warnings"] = sim.warnings;
    sims.push_back(std::move(s));
  }
  json doc;
  doc["spec"] = report.spec_name;
  doc["method"] = std::string(icp::to_string(report.method));
  doc["parameters"] = params;
  doc["per_sim"] = std::move(sims);
  doc["mean_tpr"] = report.mean_tpr;
  doc["mean_fdr"] = report.mean_fdr;
  doc["failed"] = report.failed;
  return doc;
}

std::string render_table(const std::vector<eval::EvalReport>& reports) {
  std::vector<std::string> specs;
  std::vector<std::string> methods;
  std::map<std::pair<std::string, std::string>, const eval::EvalReport*> cell;
  for (const auto& r : reports) {
    const std::string m(icp::to_string(r.method));
    if (std::find(specs.begin(), specs.end(), r.spec_name) == specs.end()) specs.push_back(r.spec_name);
    if (std::find(methods.begin(), methods.end(), m) == methods.end()) methods.push_back(m);
    cell[{r.spec_name, m}] = &r;
  }
  std::size_t width = 8;
  for (const auto& s : specs) width = std::max(width, s.size() + 2);

  std::ostringstream out;
  auto block = [&](const std::string& title, bool tpr) {
    out << title << '\n';
    out << std::string(width, ' ');
    for (const auto& m : methods) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%10s", ("ICP" + m).c_str());
      out << buf;
    }
    out << '\n';
    for (const auto& s : specs) {
      out << s << std::string(width - s.size(), ' ');
      for (const auto& m : methods) {
        char buf[32];
        auto it = cell.find({s, m});
        if (it == cell.end()) {
          std::snprintf(buf, sizeof buf, "%10s", "-");
        } else {
          std::snprintf(buf, sizeof buf, "%10.2f", tpr ? it->second->mean_tpr : it->second->mean_fdr);
        }
        out << buf;
      }
      out << '\n';
    }
  };
  block("True positive rate", true);
  out << '\n';
  block("False discovery rate", false);
  if (std::find(specs.begin(), specs.end(), "dataset4") != specs.end() ||
      std::find(specs.begin(), specs.end(), "dataset5") != specs.end()) {
    out << "\nNote: dataset4 and dataset5 also go by Dataset5 and Dataset6 in results tables elsewhere.\n";
  }
  for (const auto& r : reports) {
    if (r.failed > 0) {
      out << "Note: " << r.spec_name << " (" << icp::to_string(r.method) << ") had " << r.failed
          << " failed simulation(s); means use the remaining ones.\n";
    }
  }
  out << "Edges are scored as undirected adjacencies.\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Graphs

void GraphDocument::validate() const {
  const std::set<std::string> names(nodes.begin(), nodes.end());
  for (const auto& e : edges) {
    if (!names.count(e.from) || !names.count(e.to)) {
      throw ValidationError("graph edge " + e.from + " - " + e.to + " references an unknown node");
    }
  }
}

GraphDocument graph_document(const CausalGraph& graph, bool directed) {
  GraphDocument doc;
  doc.nodes = graph.nodes;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& [from, to] : graph.edges) {
    if (directed) {
      doc.edges.push_back({from, to, true});
    } else if (seen.insert(from < to ? std::pair{from, to} : std::pair{to, from}).second) {
      doc.edges.push_back({from, to, false});
    }
  }
  return doc;
}

GraphDocument graph_document(const icp::DiscoveryResult& result) {
  GraphDocument doc;
  doc.nodes.push_back(result.target);
  doc.nodes.insert(doc.nodes.end(), result.covariates.begin(), result.covariates.end());
  for (const auto& p : result.parents) doc.edges.push_back({p, result.target, false});
  doc.metadata.emplace_back("method", std::string(icp::to_string(result.method)));
  doc.metadata.emplace_back("target", result.target);
  doc.metadata.emplace_back("alpha", format_double(result.options.alpha.value()));
  return doc;
}

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string to_dot(const GraphDocument& graph) {
  graph.validate();
  std::vector<std::string> nodes = graph.nodes;
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  struct Line {
    std::string from;
    std::string to;
    bool directed;
    bool operator<(const Line& o) const { return std::tie(from, to, directed) < std::tie(o.from, o.to, o.directed); }
  };
  std::set<Line> lines;
  for (const auto& e : graph.edges) {
    if (e.directed) {
      lines.insert({e.from, e.to, true});
    } else {
      lines.insert(e.from < e.to ? Line{e.from, e.to, false} : Line{e.to, e.from, false});
    }
  }

  std::ostringstream out;
  out << "digraph " << quote(graph.name) << " {\n";
  auto metadata = graph.metadata;
  std::sort(metadata.begin(), metadata.end());
  for (const auto& [key, value] : metadata) out << "  // " << key << ": " << value << '\n';
  for (const auto& n : nodes) out << "  " << quote(n) << ";\n";
  for (const auto& l : lines) {
    out << "  " << quote(l.from) << " -> " << quote(l.to) << (l.directed ? "" : " [dir=none]") << ";\n";
  }
  out << "}\n";
  return out.str();
}

void export_dot(const GraphDocument& graph, const std::string& path) { write_text(to_dot(graph), path); }

void write_json(const json& doc, const std::string& path) { write_text(doc.dump(2) + "\n", path); }

json read_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path, 0, 0, e.what());
  }
}

void write_text(const std::string& text, const std::string& path) {
  auto out = open_out(path);
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace envicp::io
