// gard: command-line front end for training, sampling and evaluation.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gard/generator.hpp"
#include "gard/likelihood.hpp"
#include "gard/metrics.hpp"
#include "gard/model.hpp"
#include "gard/parallel.hpp"
#include "gard/trainer.hpp"
#include "gard/workbench/config.hpp"
#include "gard/workbench/corpus.hpp"
#include "gard/workbench/datasets.hpp"
#include "gard/workbench/dot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gard;
using namespace gard::workbench;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw UsageError(what + " not found: " + p.string());
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

json mmd_json(const MmdReport& r) {
  return {{"degree", r.degree},   {"clustering", r.clustering}, {"orbit", r.orbit},
          {"average", r.average()}, {"sigma", r.sigma},        {"count_generated", r.count_a},
          {"count_reference", r.count_b}};
}

// ---- train ----

struct TrainArgs {
  fs::path config;
};

int run_train(const TrainArgs& a) {
  require_file(a.config, "config");
  RunConfig rc = load_run_config(a.config);
  const Corpus corpus = load_corpus(rc.corpus);
  corpus.validate();
  const Split parts = split(corpus, rc.seed, rc.val_fraction);

  rc.model.set_vocab(corpus.node_vocab, corpus.edge_vocab);
  rc.train.checkpoint_dir = rc.output_dir / "checkpoints";
  rc.train.log_path = rc.output_dir / "train_log.jsonl";
  fs::create_directories(rc.output_dir);
  save_corpus(parts.train, rc.output_dir / "train.jsonl");
  save_corpus(parts.val, rc.output_dir / "val.jsonl");
  save_corpus(parts.test, rc.output_dir / "test.jsonl");

  FitResult fit_result = fit(parts.train.graphs, parts.val.graphs, rc.train, rc.model);
  save_model(rc.output_dir / "model.gard", fit_result.model);

  json summary = {{"model", (rc.output_dir / "model.gard").string()},
                  {"steps", fit_result.model.step},
                  {"train", parts.train.graphs.size()},
                  {"val", parts.val.graphs.size()},
                  {"test", parts.test.graphs.size()},
                  {"selected_step", fit_result.report.checkpoint_steps.at(fit_result.report.selected)}};
  json epochs = json::array();
  for (const auto& e : fit_result.report.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"steps", e.steps}, {"loss", e.mean_loss},
                      {"reward", std::isfinite(e.mean_reward) ? json(e.mean_reward) : json(nullptr)}});
  }
  summary["epochs"] = std::move(epochs);
  write_text(rc.output_dir / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump() << "\n";
  return 0;
}

// ---- generate ----

struct GenerateArgs {
  fs::path checkpoint, out, trace_out, size_from;
  std::size_t count = 0;
  std::optional<std::size_t> max_degree, n;
  std::uint64_t seed = 0;
};

int run_generate(const GenerateArgs& a) {
  require_file(a.checkpoint, "checkpoint");
  const ModelBundle model = load_model(a.checkpoint);
  GenerationConfig gc;
  gc.count = a.count;
  gc.max_degree = a.max_degree;
  gc.seed = a.seed;
  gc.fixed_n = a.n;
  if (!a.n) {
    if (a.size_from.empty()) throw UsageError("generate needs --n or --size-from");
    require_file(a.size_from, "size corpus");
    gc.size_pool = load_corpus(a.size_from).sizes();
    if (gc.size_pool.empty() && a.count > 0) throw UsageError("--size-from corpus is empty");
  }
  const auto traces = generate_batch(model.denoiser, gc);

  Corpus out;
  out.name = "generated";
  out.node_vocab = model.config.denoiser.node_vocab;
  out.edge_vocab = model.config.denoiser.edge_vocab;
  out.meta = {{"generator", "gard-generate"}, {"seed", std::to_string(a.seed)}};
  if (a.max_degree) out.meta["max_degree"] = std::to_string(*a.max_degree);
  for (const auto& t : traces) out.graphs.push_back(t.graph);
  save_corpus(out, a.out);
  if (!a.trace_out.empty()) save_traces(traces, a.trace_out);
  std::cout << json{{"generated", traces.size()}, {"out", a.out.string()}}.dump() << "\n";
  return 0;
}

// ---- evaluate ----

struct EvaluateArgs {
  fs::path generated, reference, training, out;
  double sigma = 1.0;
};

int run_evaluate(const EvaluateArgs& a) {
  require_file(a.generated, "generated corpus");
  require_file(a.reference, "reference corpus");
  const Corpus gen = load_corpus(a.generated);
  const Corpus ref = load_corpus(a.reference);
  if (gen.graphs.empty() || ref.graphs.empty()) throw UsageError("evaluate needs non-empty corpora");
  json report = {{"mmd", mmd_json(mmd_report(gen.graphs, ref.graphs, a.sigma))}};
  if (!a.training.empty()) {
    require_file(a.training, "training corpus");
    const Corpus train = load_corpus(a.training);
    const auto un = uniqueness_novelty(gen.graphs, train.graphs);
    report["unique"] = un.unique;
    report["novel"] = un.novel;
  }
  const std::string line = report.dump() + "\n";
  write_text(a.out, line);
  std::cout << line;
  return 0;
}

// ---- nll ----

struct NllArgs {
  fs::path checkpoint, corpus, out;
  std::size_t samples = 100;
  std::size_t exact_max = 0;
  std::uint64_t seed = 0;
};

int run_nll(const NllArgs& a) {
  require_file(a.checkpoint, "checkpoint");
  require_file(a.corpus, "corpus");
  if (a.samples == 0) throw UsageError("--samples must be positive");
  if (a.exact_max > kExactEnumerationLimit) {
    throw UsageError("--exact-max is limited to " + std::to_string(kExactEnumerationLimit));
  }
  const ModelBundle model = load_model(a.checkpoint);
  const Corpus corpus = load_corpus(a.corpus);

  std::string lines;
  double sum_expected = 0.0, sum_is = 0.0;
  for (std::size_t i = 0; i < corpus.graphs.size(); ++i) {
    const auto& g = corpus.graphs[i];
    const auto e = expected_nll(model, g, a.samples, stream_seed(a.seed, i, 1));
    const auto m = is_marginal_likelihood(model, g, a.samples, stream_seed(a.seed, i, 2));
    json row = {{"graph", i}, {"n", g.size()}, {"expected_nll", e.value}, {"expected_nll_se", e.std_error},
                {"is_nll", m.value}, {"is_nll_se", m.std_error}};
    if (g.size() <= a.exact_max) row["exact_nll"] = exact_marginal(model, g, a.exact_max).value;
    sum_expected += e.value;
    sum_is += m.value;
    lines += row.dump() + "\n";
  }
  const double count = static_cast<double>(std::max<std::size_t>(corpus.graphs.size(), 1));
  json summary = {{"graphs", corpus.graphs.size()}, {"samples", a.samples},
                  {"mean_expected_nll", sum_expected / count}, {"mean_is_nll", sum_is / count}};
  lines += summary.dump() + "\n";
  if (!a.out.empty()) write_text(a.out, lines);
  std::cout << lines;
  return 0;
}

// ---- ablate-ordering ----

struct AblateArgs {
  fs::path checkpoint, baseline, corpus, out;
  std::size_t count = 200;
  std::uint64_t seed = 0;
  double sigma = 1.0;
};

json ablation_row(const ModelBundle& model, const Corpus& reference, const AblateArgs& a) {
  GenerationConfig gc;
  gc.count = a.count;
  gc.size_pool = reference.sizes();
  gc.seed = a.seed;
  const auto traces = generate_batch(model.denoiser, gc);
  std::vector<LabeledGraph> graphs;
  double cross = 0.0;
  for (const auto& t : traces) {
    const auto part = spectral_bipartition(t.graph);
    cross += static_cast<double>(cross_cluster_count(t.order(), part.labels));
    graphs.push_back(t.graph);
  }
  return {{"ordering", to_string(model.config.ordering_mode)},
          {"mean_cross_cluster", traces.empty() ? 0.0 : cross / static_cast<double>(traces.size())},
          {"mmd", mmd_json(mmd_report(graphs, reference.graphs, a.sigma))}};
}

int run_ablate(const AblateArgs& a) {
  require_file(a.checkpoint, "checkpoint");
  require_file(a.corpus, "corpus");
  const Corpus reference = load_corpus(a.corpus);
  if (reference.graphs.empty()) throw UsageError("reference corpus is empty");
  json report = json::array();
  report.push_back(ablation_row(load_model(a.checkpoint), reference, a));
  if (!a.baseline.empty()) {
    require_file(a.baseline, "baseline checkpoint");
    report.push_back(ablation_row(load_model(a.baseline), reference, a));
  }
  std::string lines;
  for (const auto& r : report) lines += r.dump() + "\n";
  if (!a.out.empty()) write_text(a.out, lines);
  std::cout << lines;
  return 0;
}

// ---- make-dataset ----

struct DatasetArgs {
  std::string kind;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  fs::path out;
  std::size_t min_size = 0, max_size = 0;
};

int run_make_dataset(const DatasetArgs& a) {
  if ((a.min_size == 0) != (a.max_size == 0)) throw UsageError("--min-size and --max-size go together");
  if (a.min_size > a.max_size) throw UsageError("--min-size exceeds --max-size");
  const Corpus c = make_dataset(a.kind, a.count, a.seed, {a.min_size, a.max_size});
  save_corpus(c, a.out);
  std::cout << json{{"kind", a.kind}, {"graphs", c.graphs.size()}, {"out", a.out.string()}}.dump() << "\n";
  return 0;
}

// ---- export-dot ----

struct DotArgs {
  fs::path in, out;
};

bool looks_like_traces(const fs::path& path) {
  std::ifstream is(path);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto j = json::parse(line, nullptr, false);
    return j.is_object() && j.contains("steps");
  }
  return false;
}

int run_export_dot(const DotArgs& a) {
  require_file(a.in, "input");
  fs::create_directories(a.out);
  std::size_t written = 0;
  char name[32];
  if (looks_like_traces(a.in)) {
    for (const auto& t : load_traces(a.in)) {
      std::snprintf(name, sizeof(name), "graph_%04zu.dot", written++);
      write_text(a.out / name, export_dot(t));
    }
  } else {
    for (const auto& g : load_corpus(a.in).graphs) {
      std::snprintf(name, sizeof(name), "graph_%04zu.dot", written++);
      write_text(a.out / name, export_dot(g));
    }
  }
  std::cout << json{{"written", written}, {"out", a.out.string()}}.dump() << "\n";
  return 0;
}

void print_error(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  configure_threads_from_env();

  CLI::App app{"Autoregressive diffusion graph generation"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "train both networks from a config file");
  c_train->add_option("--config", train.config, "INI run config")->required();

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "sample graphs from a checkpoint");
  c_gen->add_option("--checkpoint", gen.checkpoint)->required();
  c_gen->add_option("--count", gen.count)->required();
  c_gen->add_option("--max-degree", gen.max_degree);
  auto* n_opt = c_gen->add_option("--n", gen.n, "fixed node count");
  c_gen->add_option("--size-from", gen.size_from, "corpus whose sizes are resampled")->excludes(n_opt);
  c_gen->add_option("--out", gen.out)->required();
  c_gen->add_option("--trace-out", gen.trace_out, "per-step generation traces");
  c_gen->add_option("--seed", gen.seed);

  EvaluateArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "MMD report between two corpora");
  c_eval->add_option("--generated", eval.generated)->required();
  c_eval->add_option("--reference", eval.reference)->required();
  c_eval->add_option("--training", eval.training, "adds uniqueness and novelty");
  c_eval->add_option("--sigma", eval.sigma);
  c_eval->add_option("--out", eval.out)->required();

  NllArgs nll;
  auto* c_nll = app.add_subcommand("nll", "likelihood estimates per graph");
  c_nll->add_option("--checkpoint", nll.checkpoint)->required();
  c_nll->add_option("--corpus", nll.corpus)->required();
  c_nll->add_option("--samples", nll.samples)->required();
  c_nll->add_option("--exact-max", nll.exact_max, "enumerate orderings up to this size");
  c_nll->add_option("--seed", nll.seed);
  c_nll->add_option("--out", nll.out);

  AblateArgs abl;
  auto* c_abl = app.add_subcommand("ablate-ordering", "cross-cluster counts and MMDs per checkpoint");
  c_abl->add_option("--checkpoint", abl.checkpoint)->required();
  c_abl->add_option("--corpus", abl.corpus)->required();
  c_abl->add_option("--baseline", abl.baseline, "checkpoint trained with uniform ordering");
  c_abl->add_option("--count", abl.count);
  c_abl->add_option("--seed", abl.seed);
  c_abl->add_option("--sigma", abl.sigma);
  c_abl->add_option("--out", abl.out);

  DatasetArgs ds;
  auto* c_ds = app.add_subcommand("make-dataset", "write a synthetic corpus");
  c_ds->add_option("--kind", ds.kind)
      ->required()
      ->check(CLI::IsMember({"community-small", "caveman", "ego", "typed-toy", "triangle", "two-cliques"}));
  c_ds->add_option("--count", ds.count)->required();
  c_ds->add_option("--seed", ds.seed)->required();
  c_ds->add_option("--out", ds.out)->required();
  c_ds->add_option("--min-size", ds.min_size);
  c_ds->add_option("--max-size", ds.max_size);

  DotArgs dot;
  auto* c_dot = app.add_subcommand("export-dot", "GraphViz files from a corpus or trace file");
  c_dot->add_option("--in", dot.in)->required();
  c_dot->add_option("--out", dot.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (*c_train) return run_train(train);
    if (*c_gen) return run_generate(gen);
    if (*c_eval) return run_evaluate(eval);
    if (*c_nll) return run_nll(nll);
    if (*c_abl) return run_ablate(abl);
    if (*c_ds) return run_make_dataset(ds);
    if (*c_dot) return run_export_dot(dot);
  } catch (const UsageError& e) {
    print_error("usage", e.what());
    return 2;
  } catch (const ConfigError& e) {
    print_error("config", e.what());
    return 3;
  } catch (const CorpusError& e) {
    print_error("corpus", e.what());
    return 4;
  } catch (const TrainingDiverged& e) {
    print_error("diverged", e.what());
    return 5;
  } catch (const std::exception& e) {
    print_error("runtime", e.what());
    return 1;
  }
  return 1;
}
