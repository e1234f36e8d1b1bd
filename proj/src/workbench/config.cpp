#include "gard/workbench/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace gard::workbench {

namespace pt = boost::property_tree;

namespace {

std::size_t to_size(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size() || x < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(x);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  RunConfig rc;
  rc.model.denoiser = DenoiserConfig{};
  bool have_seed = false;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };

  using Setter = std::function<void(const std::string& key, const std::string& value)>;
  const std::map<std::string, Setter> setters = {
      {"seed", [&](auto& k, auto& v) { rc.seed = to_size(k, v); have_seed = true; }},
      {"data.corpus", [&](auto&, auto& v) { rc.corpus = resolve(v); }},
      {"data.val_fraction", [&](auto& k, auto& v) { rc.val_fraction = to_double(k, v); }},
      {"model.ordering", [&](auto&, auto& v) { rc.model.ordering_mode = parse_ordering_mode(v); }},
      {"model.ordering_layers", [&](auto& k, auto& v) { rc.model.ordering.layers = to_size(k, v); }},
      {"model.ordering_heads", [&](auto& k, auto& v) { rc.model.ordering.heads = to_size(k, v); }},
      {"model.ordering_hidden", [&](auto& k, auto& v) { rc.model.ordering.hidden = to_size(k, v); }},
      {"model.ordering_type_dim", [&](auto& k, auto& v) { rc.model.ordering.type_dim = to_size(k, v); }},
      {"model.ordering_position_dim", [&](auto& k, auto& v) { rc.model.ordering.position_dim = to_size(k, v); }},
      {"model.aggregator", [&](auto&, auto& v) { rc.model.denoiser.aggregator = parse_aggregator(v); }},
      {"model.layers", [&](auto& k, auto& v) { rc.model.denoiser.layers = to_size(k, v); }},
      {"model.hidden", [&](auto& k, auto& v) { rc.model.denoiser.hidden = to_size(k, v); }},
      {"model.mixtures", [&](auto& k, auto& v) { rc.model.denoiser.mixtures = to_size(k, v); }},
      {"model.edge_attention", [&](auto& k, auto& v) { rc.model.denoiser.edge_attention = to_bool(k, v); }},
      {"train.trajectories", [&](auto& k, auto& v) { rc.train.trajectories = to_size(k, v); }},
      {"train.timesteps", [&](auto& k, auto& v) { rc.train.timesteps = to_size(k, v); }},
      {"train.denoiser_lr", [&](auto& k, auto& v) { rc.train.denoiser_lr = to_double(k, v); }},
      {"train.ordering_lr", [&](auto& k, auto& v) { rc.train.ordering_lr = to_double(k, v); }},
      {"train.train_batch", [&](auto& k, auto& v) { rc.train.train_batch = to_size(k, v); }},
      {"train.val_batch", [&](auto& k, auto& v) { rc.train.val_batch = to_size(k, v); }},
      {"train.epochs", [&](auto& k, auto& v) { rc.train.epochs = to_size(k, v); }},
      {"train.max_steps", [&](auto& k, auto& v) { rc.train.max_steps = to_size(k, v); }},
      {"train.top_k", [&](auto& k, auto& v) { rc.train.top_k = to_size(k, v); }},
      {"train.baseline", [&](auto& k, auto& v) { rc.train.use_baseline = to_bool(k, v); }},
      {"train.baseline_decay", [&](auto& k, auto& v) { rc.train.baseline_decay = to_double(k, v); }},
      {"train.eval_every", [&](auto& k, auto& v) { rc.train.eval_every = to_size(k, v); }},
      {"train.select_checkpoint", [&](auto& k, auto& v) { rc.train.select_checkpoint = to_bool(k, v); }},
      {"train.select_samples", [&](auto& k, auto& v) { rc.train.select_samples = to_size(k, v); }},
      {"output.dir", [&](auto&, auto& v) { rc.output_dir = resolve(v); }},
  };

  for (const auto& [section, node] : tree) {
    std::vector<std::pair<std::string, std::string>> entries;
    if (node.empty()) {
      entries.emplace_back(section, node.data());
    } else {
      for (const auto& [key, leaf] : node) entries.emplace_back(section + "." + key, leaf.data());
    }
    for (const auto& [key, value] : entries) {
      const auto it = setters.find(key);
      if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
      try {
        it->second(key, value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(key + ": " + e.what());
      }
    }
  }

  if (!have_seed) throw ConfigError("config must set 'seed'");
  if (rc.corpus.empty()) throw ConfigError("config must set [data] corpus");
  if (!std::filesystem::exists(rc.corpus)) throw ConfigError("corpus file not found: " + rc.corpus.string());
  if (rc.output_dir.empty()) throw ConfigError("config must set [output] dir");
  if (!(rc.val_fraction > 0.0 && rc.val_fraction < 1.0)) throw ConfigError("data.val_fraction must be in (0, 1)");
  rc.model.seed = rc.seed;
  rc.train.seed = rc.seed;
  try {
    rc.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
}

}  // namespace gard::workbench
