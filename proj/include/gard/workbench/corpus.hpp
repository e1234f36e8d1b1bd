#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gard/generator.hpp"
#include "gard/workbench/datasets.hpp"

namespace gard::workbench {

/// Malformed corpus input; the message starts with "line N:".
class CorpusError : public std::runtime_error {
 public:
  CorpusError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// JSON lines, one graph per line:
///   {"nodes":[t0,t1,...],"edges":[[i,j,type],...],"meta":{...}}
/// Edges are written with i < j in row-major order. Every line's meta carries
/// the corpus meta plus the vocabulary sizes.
void write_corpus(std::ostream& os, const Corpus& corpus);
Corpus read_corpus(std::istream& is, const std::string& name = "");

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

/// Generation traces as JSON lines:
///   {"nodes":[...],"edges":[...],"steps":[{"node":s,"type":t,"edges":[...],"dropped":[[j,e],...]}]}
void save_traces(const std::vector<GenerationTrace>& traces, const std::filesystem::path& path);
std::vector<GenerationTrace> load_traces(const std::filesystem::path& path);

}  // namespace gard::workbench
