#include "gard/workbench/corpus.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace gard::workbench {

using nlohmann::json;

namespace {

json graph_json(const LabeledGraph& g) {
  json j;
  j["nodes"] = g.node_types();
  json edges = json::array();
  for (const auto& e : g.edges()) edges.push_back({e.u, e.v, e.type});
  j["edges"] = std::move(edges);
  return j;
}

LabeledGraph graph_from_json(const json& j, std::size_t line) {
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges")) {
    throw CorpusError(line, "expected an object with \"nodes\" and \"edges\"");
  }
  const auto& nodes = j.at("nodes");
  const auto& edges = j.at("edges");
  if (!nodes.is_array() || !edges.is_array()) throw CorpusError(line, "\"nodes\" and \"edges\" must be arrays");
  std::vector<int> types;
  for (const auto& t : nodes) {
    if (!t.is_number_integer()) throw CorpusError(line, "node types must be integers");
    types.push_back(t.get<int>());
  }
  std::vector<TypedEdge> list;
  for (const auto& e : edges) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
        !e[2].is_number_integer()) {
      throw CorpusError(line, "edges must be [i, j, type] integer triples");
    }
    if (e[0].get<long>() < 0 || e[1].get<long>() < 0) throw CorpusError(line, "negative node index in edge");
    list.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<int>()});
  }
  try {
    return LabeledGraph::create(std::move(types), list);
  } catch (const GraphError& err) {
    throw CorpusError(line, err.what());
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return is;
}

}  // namespace

void write_corpus(std::ostream& os, const Corpus& corpus) {
  json meta = corpus.meta;
  meta["node_vocab"] = std::to_string(corpus.node_vocab);
  meta["edge_vocab"] = std::to_string(corpus.edge_vocab);
  for (const auto& g : corpus.graphs) {
    json j = graph_json(g);
    j["meta"] = meta;
    os << j.dump() << '\n';
  }
}

Corpus read_corpus(std::istream& is, const std::string& name) {
  Corpus c;
  c.name = name;
  int node_vocab = 1, edge_vocab = 2;
  std::string text;
  std::size_t line = 0;
  while (std::getline(is, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); })) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw CorpusError(line, std::string("invalid JSON: ") + e.what());
    }
    LabeledGraph g = graph_from_json(j, line);
    if (j.contains("meta") && j["meta"].is_object()) {
      for (const auto& [k, v] : j["meta"].items()) {
        const std::string value = v.is_string() ? v.get<std::string>() : v.dump();
        if (k == "node_vocab") {
          node_vocab = std::max(node_vocab, std::stoi(value));
        } else if (k == "edge_vocab") {
          edge_vocab = std::max(edge_vocab, std::stoi(value));
        } else if (c.graphs.empty()) {
          c.meta[k] = value;
        }
      }
    }
    node_vocab = std::max(node_vocab, g.max_node_type() + 1);
    edge_vocab = std::max(edge_vocab, g.max_edge_type() + 1);
    c.graphs.push_back(std::move(g));
  }
  c.node_vocab = node_vocab;
  c.edge_vocab = edge_vocab;
  if (c.name.empty() && c.meta.count("generator")) c.name = c.meta["generator"];
  return c;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  auto os = open_out(path);
  write_corpus(os, corpus);
}

Corpus load_corpus(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_corpus(is, path.stem().string());
}

void save_traces(const std::vector<GenerationTrace>& traces, const std::filesystem::path& path) {
  auto os = open_out(path);
  for (const auto& t : traces) {
    json j = graph_json(t.graph);
    json steps = json::array();
    for (const auto& s : t.steps) {
      json dropped = json::array();
      for (const auto& [slot, state] : s.dropped) dropped.push_back({slot, state});
      steps.push_back({{"node", s.node}, {"type", s.node_type}, {"edges", s.edges}, {"dropped", dropped}});
    }
    j["steps"] = std::move(steps);
    os << j.dump() << '\n';
  }
}

std::vector<GenerationTrace> load_traces(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::vector<GenerationTrace> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(is, text)) {
    ++line;
    if (text.empty()) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw CorpusError(line, std::string("invalid JSON: ") + e.what());
    }
    GenerationTrace t;
    t.graph = graph_from_json(j, line);
    if (!j.contains("steps")) throw CorpusError(line, "trace has no \"steps\"");
    try {
      for (const auto& s : j.at("steps")) {
        GenerationStep step;
        step.node = s.at("node").get<NodeId>();
        step.node_type = s.at("type").get<int>();
        step.edges = s.at("edges").get<std::vector<EdgeState>>();
        for (const auto& d : s.at("dropped")) step.dropped.emplace_back(d.at(0).get<NodeId>(), d.at(1).get<EdgeState>());
        t.steps.push_back(std::move(step));
      }
    } catch (const json::exception& e) {
      throw CorpusError(line, std::string("malformed step: ") + e.what());
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace gard::workbench
