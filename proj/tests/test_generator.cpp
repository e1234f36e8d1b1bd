#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "gard/generator.hpp"
#include "gard/model.hpp"
#include "test_util.hpp"

using namespace gard;

namespace {

Denoiser random_denoiser(int node_vocab, int edge_vocab, std::uint64_t seed) {
  return ModelBundle::create(test::tiny_config(node_vocab, edge_vocab, seed)).denoiser;
}

// proposes every edge with type 1
Denoiser dense_denoiser(std::uint64_t seed) {
  auto d = random_denoiser(1, 2, seed);
  test::saturate(d, "edge_head", 1, 2, 80.0);
  return d;
}

std::size_t max_degree(const LabeledGraph& g) {
  std::size_t m = 0;
  for (NodeId i = 0; i < g.size(); ++i) m = std::max(m, g.degree(i));
  return m;
}

bool same_trace(const GenerationTrace& a, const GenerationTrace& b) {
  if (!(a.graph == b.graph) || a.steps.size() != b.steps.size()) return false;
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    if (a.steps[i].node != b.steps[i].node || a.steps[i].node_type != b.steps[i].node_type ||
        a.steps[i].edges != b.steps[i].edges || a.steps[i].dropped != b.steps[i].dropped)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("size sampling") {
  Rng rng(1);
  const std::vector<std::size_t> fives = {5, 5, 5};
  for (int i = 0; i < 20; ++i) CHECK(sample_size(fives, rng) == 5);

  const std::vector<std::size_t> sizes = {3, 3, 6};
  const int draws = 30000;
  int threes = 0;
  for (int i = 0; i < draws; ++i) {
    const auto n = sample_size(sizes, rng);
    CHECK((n == 3 || n == 6));
    threes += n == 3;
  }
  const double p = 2.0 / 3.0;
  CHECK(std::abs(threes / static_cast<double>(draws) - p) < 3 * std::sqrt(p * (1 - p) / draws));
  CHECK_THROWS(sample_size({}, rng));
}

TEST_CASE("degree cap") {
  Rng rng(2);
  SUBCASE("no violation leaves the proposal alone") {
    const std::vector<std::size_t> deg = {1, 0, 2};
    const std::vector<EdgeState> prop = {1, 0, 1};
    const auto r = enforce_degree_cap(deg, prop, 3, rng);
    CHECK(r.edges == prop);
    CHECK(r.dropped.empty());
  }
  SUBCASE("edges to saturated nodes go first") {
    const std::vector<std::size_t> deg = {3, 1, 3, 0};
    const std::vector<EdgeState> prop = {2, 1, 1, 0};
    const auto r = enforce_degree_cap(deg, prop, 3, rng);
    CHECK(r.edges == std::vector<EdgeState>{0, 1, 0, 0});
    CHECK(r.dropped == std::vector<std::size_t>{0, 2});
  }
  SUBCASE("both phases") {
    const std::vector<std::size_t> deg = {2, 0, 0, 0};
    const std::vector<EdgeState> prop = {1, 1, 1, 1};
    const auto r = enforce_degree_cap(deg, prop, 2, rng);
    CHECK(r.edges[0] == 0);
    CHECK(std::count(r.edges.begin(), r.edges.end(), 1) == 2);
    CHECK(r.dropped.size() == 2);
  }
  SUBCASE("the new node keeps a uniform subset") {
    const std::size_t d = 2;
    const std::vector<std::size_t> deg(d + 3, 0);
    const std::vector<EdgeState> prop(d + 3, 1);
    std::map<std::vector<EdgeState>, int> counts;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
      const auto r = enforce_degree_cap(deg, prop, d, rng);
      CHECK(std::count(r.edges.begin(), r.edges.end(), 1) == static_cast<long>(d));
      CHECK(r.dropped.size() == 3);
      ++counts[r.edges];
    }
    // C(5, 2) = 10 subsets; chi-square with 9 degrees of freedom, 0.999 quantile 27.88
    REQUIRE(counts.size() == 10);
    const double expected = trials / 10.0;
    double chi2 = 0.0;
    for (const auto& [k, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < 27.88);
  }
  SUBCASE("errors") {
    const std::vector<std::size_t> deg = {0};
    const std::vector<EdgeState> prop = {1}, two = {1, 1};
    CHECK_THROWS(enforce_degree_cap(deg, prop, 0, rng));
    CHECK_THROWS(enforce_degree_cap(deg, two, 2, rng));
  }
}

TEST_CASE("generation") {
  Rng rng(3);
  SUBCASE("one node, one type") {
    const auto d = random_denoiser(1, 2, 4);
    const auto t = generate(d, 1, rng);
    CHECK(t.graph == make_simple_graph(1, {}));
    REQUIRE(t.steps.size() == 1);
    CHECK(t.steps[0].edges.empty());
  }
  SUBCASE("structure and replay") {
    for (int rep = 0; rep < 30; ++rep) {
      const int V = 1 + static_cast<int>(uniform_index(rng, 3)), E = 2 + static_cast<int>(uniform_index(rng, 2));
      const auto d = random_denoiser(V, E, 10 + rep);
      const std::size_t n = 1 + uniform_index(rng, 8);
      const auto t = generate(d, n, rng);
      const auto& g = t.graph;
      REQUIRE(g.size() == n);
      std::size_t decisions = 0;
      for (const auto& s : t.steps) decisions += s.edges.size();
      CHECK(decisions == n * (n - 1) / 2);
      for (NodeId i = 0; i < n; ++i) {
        CHECK(g.node_type(i) >= 0);
        CHECK(g.node_type(i) < V);
        CHECK(g.edge_type(i, i) == kAbsent);
        for (NodeId j = 0; j < n; ++j) {
          CHECK(g.edge_type(i, j) == g.edge_type(j, i));
          CHECK(g.edge_type(i, j) < E);
        }
      }
      std::vector<NodeId> slots(n);
      for (NodeId i = 0; i < n; ++i) slots[i] = i;
      CHECK(t.order() == slots);
      CHECK(replay_trace(t) == g);
    }
  }
  SUBCASE("capped generation records the dropped edges") {
    const auto d = dense_denoiser(5);
    const auto t = generate(d, 10, rng, 3);
    CHECK(max_degree(t.graph) <= 3);
    CHECK(replay_trace(t) == t.graph);
    // every pair was proposed, so kept plus dropped covers all of them
    std::size_t kept = 0, dropped = 0;
    for (const auto& s : t.steps) {
      kept += static_cast<std::size_t>(std::count(s.edges.begin(), s.edges.end(), 1));
      dropped += s.dropped.size();
      for (const auto& [j, e] : s.dropped) {
        CHECK(e == 1);
        CHECK(s.edges[j] == kAbsent);
      }
    }
    CHECK(kept == t.graph.edge_count());
    CHECK(kept + dropped == 45);
  }
  SUBCASE("non-finite parameters abort") {
    auto d = random_denoiser(1, 2, 6);
    auto& w = d.parameters()[0].value;
    std::fill(w.storage().begin(), w.storage().end(), std::numeric_limits<double>::quiet_NaN());
    CHECK_THROWS(generate(d, 4, rng));
  }
  CHECK_THROWS(generate(random_denoiser(1, 2, 7), 0, rng));
}

TEST_CASE("batch generation") {
  const auto d = random_denoiser(2, 2, 8);
  GenerationConfig c;
  c.seed = 9;
  c.fixed_n = 5;

  CHECK(generate_batch(d, c).empty());

  c.count = 12;
  const auto a = generate_batch(d, c), b = generate_batch(d, c);
  REQUIRE(a.size() == 12);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].graph.size() == 5);
    CHECK(same_trace(a[i], b[i]));
  }
  c.seed = 10;
  const auto other = generate_batch(d, c);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= !same_trace(a[i], other[i]);
  CHECK(differs);

  c.fixed_n.reset();
  c.size_pool = {3, 7};
  for (const auto& t : generate_batch(d, c)) CHECK((t.graph.size() == 3 || t.graph.size() == 7));
  c.size_pool.clear();
  CHECK_THROWS(generate_batch(d, c));

  SUBCASE("a degree cap of 6 always holds") {
    GenerationConfig capped;
    capped.count = 200;
    capped.size_pool = {8, 10, 12, 14};
    capped.max_degree = 6;
    capped.seed = 11;
    for (const auto& t : generate_batch(d, capped)) CHECK(max_degree(t.graph) <= 6);
    const auto dense = dense_denoiser(12);
    std::size_t at_cap = 0;
    for (const auto& t : generate_batch(dense, capped)) {
      CHECK(max_degree(t.graph) <= 6);
      at_cap += max_degree(t.graph) == 6;
    }
    CHECK(at_cap == 200);
  }
}
