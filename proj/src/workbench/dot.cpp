#include "gard/workbench/dot.hpp"

#include <cstdio>
#include <sstream>
#include <vector>

namespace gard::workbench {

namespace {

std::string render(const LabeledGraph& g, const std::string& name, const std::vector<std::string>& node_attrs) {
  std::ostringstream os;
  os << "graph " << name << " {\n";
  for (NodeId i = 0; i < g.size(); ++i) {
    os << "  " << i << " [label=\"" << i << ":" << g.node_type(i) << "\"" << node_attrs[i] << "];\n";
  }
  const bool typed = g.max_edge_type() > 1;
  for (const auto& e : g.edges()) {
    os << "  " << e.u << " -- " << e.v;
    if (typed) os << " [label=\"" << e.type << "\"]";
    os << ";\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace

double step_hue(std::size_t step, std::size_t steps) {
  if (steps <= 1) return 0.66;
  return 0.66 * (1.0 - static_cast<double>(step) / static_cast<double>(steps - 1));
}

std::string export_dot(const LabeledGraph& g, const std::string& name) {
  return render(g, name, std::vector<std::string>(g.size()));
}

std::string export_dot(const GenerationTrace& trace, const std::string& name) {
  const std::size_t n = trace.graph.size();
  std::vector<std::string> attrs(n);
  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), ", style=filled, fillcolor=\"%.4f 0.5 1.0\", step=%zu", step_hue(s, n), s);
    attrs.at(trace.steps[s].node) = buf;
  }
  return render(trace.graph, name, attrs);
}

}  // namespace gard::workbench
