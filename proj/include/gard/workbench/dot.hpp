#pragma once

#include <string>

#include "gard/generator.hpp"
#include "gard/graph.hpp"

namespace gard::workbench {

/// GraphViz text: one statement per node, one per edge (edge type as label
/// when the graph has several edge types).
std::string export_dot(const LabeledGraph& g, const std::string& name = "G");

/// Like export_dot, with nodes filled by generation step: hue falls from
/// 0.66 (first step) to 0.0 (last step).
std::string export_dot(const GenerationTrace& trace, const std::string& name = "G");

/// Hue used for step s of n.
double step_hue(std::size_t step, std::size_t steps);

}  // namespace gard::workbench
