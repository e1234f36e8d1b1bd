#include "gard/nn/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gard::nn {

namespace {

std::string hexfloat(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", x);
  return buf;
}

double parse_double(const std::string& tok, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') {
    throw std::runtime_error("checkpoint line " + std::to_string(line) + ": bad number '" + tok + "'");
  }
  return v;
}

}  // namespace

const Tensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw std::out_of_range("checkpoint has no tensor " + name);
}

bool Checkpoint::has_tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return true;
  }
  return false;
}

std::string checkpoint_to_string(const Checkpoint& ckpt) {
  std::ostringstream os;
  os << "gard-checkpoint " << kCheckpointVersion << '\n';
  for (const auto& [k, v] : ckpt.meta) {
    if (k.find_first_of(" \t\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw std::invalid_argument("checkpoint meta entry '" + k + "' is not representable");
    }
    os << "meta " << k << ' ' << v << '\n';
  }
  for (const auto& [name, t] : ckpt.tensors) {
    os << "tensor " << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) os << ' ';
      os << hexfloat(t[i]);
    }
    os << '\n';
  }
  os << "end\n";
  return os.str();
}

Checkpoint checkpoint_from_string(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(is, line)) throw std::runtime_error("empty checkpoint");
  {
    std::istringstream hs(line);
    std::string magic;
    int version = 0;
    hs >> magic >> version;
    if (magic != "gard-checkpoint") throw std::runtime_error("not a gard checkpoint");
    if (version != kCheckpointVersion) {
      throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    }
  }
  Checkpoint ckpt;
  bool ended = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line == "end") {
      ended = true;
      break;
    }
    if (line.rfind("meta ", 0) == 0) {
      const auto rest = line.substr(5);
      const auto sp = rest.find(' ');
      if (sp == std::string::npos) {
        ckpt.meta[rest] = "";
      } else {
        ckpt.meta[rest.substr(0, sp)] = rest.substr(sp + 1);
      }
    } else if (line.rfind("tensor ", 0) == 0) {
      std::istringstream ts(line.substr(7));
      std::string name;
      std::size_t rows = 0, cols = 0;
      if (!(ts >> name >> rows >> cols)) {
        throw std::runtime_error("checkpoint line " + std::to_string(lineno) + ": bad tensor header");
      }
      std::string values;
      std::getline(is, values);
      ++lineno;
      std::istringstream vs(values);
      std::vector<double> data;
      data.reserve(rows * cols);
      std::string tok;
      while (vs >> tok) data.push_back(parse_double(tok, lineno));
      if (data.size() != rows * cols) {
        throw std::runtime_error("checkpoint line " + std::to_string(lineno) + ": expected " +
                                 std::to_string(rows * cols) + " values for " + name);
      }
      ckpt.tensors.emplace_back(name, Tensor(rows, cols, std::move(data)));
    } else {
      throw std::runtime_error("checkpoint line " + std::to_string(lineno) + ": unknown record");
    }
  }
  if (!ended) throw std::runtime_error("checkpoint is truncated (missing end marker)");
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
  os << checkpoint_to_string(ckpt);
  if (!os) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return checkpoint_from_string(ss.str());
}

void store_parameters(Checkpoint& ckpt, const std::string& prefix, const ParameterSet& params) {
  for (const auto& p : params) ckpt.tensors.emplace_back(prefix + "/" + p.name, p.value);
}

void load_parameters(const Checkpoint& ckpt, const std::string& prefix, ParameterSet& params) {
  for (auto& p : params) {
    const Tensor& t = ckpt.tensor(prefix + "/" + p.name);
    if (!t.same_shape(p.value)) {
      throw ShapeError("checkpoint tensor " + prefix + "/" + p.name + " has shape " + t.shape_str() +
                       ", model expects " + p.value.shape_str());
    }
    p.value = t;
  }
}

void store_adam(Checkpoint& ckpt, const std::string& prefix, const ParameterSet& params,
                const AdamState& state) {
  ckpt.meta[prefix + ".step"] = std::to_string(state.step);
  ckpt.meta[prefix + ".lr"] = hexfloat(state.config.learning_rate);
  ckpt.meta[prefix + ".beta1"] = hexfloat(state.config.beta1);
  ckpt.meta[prefix + ".beta2"] = hexfloat(state.config.beta2);
  ckpt.meta[prefix + ".eps"] = hexfloat(state.config.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    ckpt.tensors.emplace_back(prefix + ".m/" + params[i].name, state.first_moment.at(i));
    ckpt.tensors.emplace_back(prefix + ".v/" + params[i].name, state.second_moment.at(i));
  }
}

void load_adam(const Checkpoint& ckpt, const std::string& prefix, const ParameterSet& params,
               AdamState& state) {
  state.step = std::stoull(ckpt.meta.at(prefix + ".step"));
  state.config.learning_rate = parse_double(ckpt.meta.at(prefix + ".lr"), 0);
  state.config.beta1 = parse_double(ckpt.meta.at(prefix + ".beta1"), 0);
  state.config.beta2 = parse_double(ckpt.meta.at(prefix + ".beta2"), 0);
  state.config.epsilon = parse_double(ckpt.meta.at(prefix + ".eps"), 0);
  state.first_moment.clear();
  state.second_moment.clear();
  for (const auto& p : params) {
    state.first_moment.push_back(ckpt.tensor(prefix + ".m/" + p.name));
    state.second_moment.push_back(ckpt.tensor(prefix + ".v/" + p.name));
    if (!state.first_moment.back().same_shape(p.value)) {
      throw ShapeError("adam moment shape mismatch for " + p.name);
    }
  }
}

}  // namespace gard::nn
