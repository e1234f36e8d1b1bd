#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "gard/metrics.hpp"
#include "gard/parallel.hpp"
#include "orbit_oracle.hpp"
#include "test_util.hpp"

using namespace gard;

namespace {

LabeledGraph star(std::size_t leaves) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return make_simple_graph(leaves + 1, e);
}

LabeledGraph bridged_cliques(std::size_t k) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId base : {NodeId{0}, static_cast<NodeId>(k)})
    for (NodeId i = 0; i < k; ++i)
      for (NodeId j = i + 1; j < k; ++j) e.emplace_back(base + i, base + j);
  e.emplace_back(k - 1, k);
  return make_simple_graph(2 * k, e);
}

double naive_mmd2(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                  DescriptorKind kind) {
  auto mean = [&](const auto& x, const auto& y) {
    double s = 0.0;
    for (const auto& u : x)
      for (const auto& v : y) s += gaussian_kernel(descriptor_distance(u, v, kind), 1.0);
    return s / static_cast<double>(x.size() * y.size());
  };
  return mean(a, a) + mean(b, b) - 2.0 * mean(a, b);
}

std::vector<LabeledGraph> random_set(Rng& rng, std::size_t count, double p) {
  std::vector<LabeledGraph> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(test::random_graph(rng, 4 + uniform_index(rng, 8), p));
  return out;
}

}  // namespace

TEST_CASE("degree histogram") {
  CHECK(degree_histogram(test::complete_graph(3)) == std::vector<double>{0.0, 0.0, 1.0});
  CHECK(degree_histogram(star(3)) == std::vector<double>{0.0, 0.75, 0.0, 0.25});
  Rng rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const auto g = test::random_graph(rng, 10, 0.3);
    std::vector<double> naive(10, 0.0);
    std::size_t top = 0;
    for (NodeId i = 0; i < 10; ++i) {
      std::size_t d = 0;
      for (NodeId j = 0; j < 10; ++j) d += g.has_edge(i, j);
      naive[d] += 0.1;
      top = std::max(top, d);
    }
    naive.resize(top + 1);
    const auto h = degree_histogram(g);
    REQUIRE(h.size() == naive.size());
    for (std::size_t d = 0; d < h.size(); ++d) CHECK(h[d] == doctest::Approx(naive[d]).epsilon(1e-12));
  }
}

TEST_CASE("clustering") {
  CHECK(clustering_coefficients(test::complete_graph(3)) == std::vector<double>{1.0, 1.0, 1.0});
  CHECK(clustering_coefficients(star(3))[0] == 0.0);
  CHECK(clustering_coefficients(test::path_graph(2)) == std::vector<double>{0.0, 0.0});
  Rng rng(2);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 3 + uniform_index(rng, 10);
    const auto g = test::random_graph(rng, n, 0.5);
    const auto cc = clustering_coefficients(g);
    for (NodeId i = 0; i < n; ++i) {
      std::size_t tri = 0, d = g.degree(i);
      for (NodeId a = 0; a < n; ++a)
        for (NodeId b = a + 1; b < n; ++b) tri += g.has_edge(i, a) && g.has_edge(i, b) && g.has_edge(a, b);
      const double expected = d < 2 ? 0.0 : 2.0 * static_cast<double>(tri) / static_cast<double>(d * (d - 1));
      CHECK(cc[i] == expected);
    }
    const auto h = clustering_histogram(g);
    CHECK(h.size() == kClusteringBins);
    CHECK(std::accumulate(h.begin(), h.end(), 0.0) == doctest::Approx(1.0));
  }
  CHECK(clustering_histogram(test::complete_graph(4)).back() == 1.0);
}

TEST_CASE("orbit counts") {
  SUBCASE("small cases") {
    const auto p4 = orbit_counts_4(test::path_graph(4));
    OrbitRow end{}, mid{};
    end[kPathEnd] = 1;
    mid[kPathMid] = 1;
    CHECK(p4[0] == end);
    CHECK(p4[3] == end);
    CHECK(p4[1] == mid);
    OrbitRow clique{};
    clique[kClique] = 1;
    for (const auto& r : orbit_counts_4(test::complete_graph(4))) CHECK(r == clique);
    for (const auto& r : orbit_counts_4(test::complete_graph(3))) CHECK(r == OrbitRow{});
  }
  SUBCASE("brute-force oracle and totals") {
    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
      const std::size_t n = 1 + uniform_index(rng, 12);
      const auto g = test::random_graph(rng, n, 0.2 + 0.6 * uniform01(rng));
      const auto fast = orbit_counts_4(g);
      const auto brute = test::brute_orbits(g);
      CHECK(fast == brute.rows);
      CHECK(orbit_counts_4_serial(g) == fast);
      // summed over nodes, each orbit counts occurrences times its class size
      OrbitRow total{};
      for (const auto& r : fast)
        for (std::size_t o = 0; o < kOrbitCount; ++o) total[o] += r[o];
      const auto& c = brute.occurrences;
      CHECK(total[kPathEnd] == 2 * c[kP4]);
      CHECK(total[kPathMid] == 2 * c[kP4]);
      CHECK(total[kStarLeaf] == 3 * c[kStar]);
      CHECK(total[kStarCenter] == c[kStar]);
      CHECK(total[kCycle] == 4 * c[kC4]);
      CHECK(total[kPawPendant] == c[kPaw]);
      CHECK(total[kPawSide] == 2 * c[kPaw]);
      CHECK(total[kPawHub] == c[kPaw]);
      CHECK(total[kDiamondRim] == 2 * c[kDiamond]);
      CHECK(total[kDiamondSpine] == 2 * c[kDiamond]);
      CHECK(total[kClique] == 4 * c[kK4]);
    }
  }
  SUBCASE("parallel and serial agree on a larger graph") {
    Rng rng(4);
    const auto g = test::random_graph(rng, 40, 0.3);
#ifdef _OPENMP
    const int saved = omp_get_max_threads();
    omp_set_num_threads(4);
#endif
    CHECK(orbit_counts_4(g) == orbit_counts_4_serial(g));
    std::vector<std::vector<double>> da, db;
    for (int i = 0; i < 30; ++i) da.push_back(orbit_descriptor(test::random_graph(rng, 8, 0.4)));
    for (int i = 0; i < 20; ++i) db.push_back(orbit_descriptor(test::random_graph(rng, 8, 0.5)));
    CHECK(mmd_squared(da, db, DescriptorKind::kOrbit) == mmd_squared_serial(da, db, DescriptorKind::kOrbit));
#ifdef _OPENMP
    omp_set_num_threads(saved);
#endif
  }
}

TEST_CASE("descriptors are invariant under relabeling") {
  Rng rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 2 + uniform_index(rng, 10);
    const auto g = test::random_graph(rng, n, 0.4);
    const auto h = permute(g, random_permutation(n, rng));
    CHECK(degree_histogram(g) == degree_histogram(h));
    CHECK(clustering_histogram(g) == clustering_histogram(h));
    CHECK(orbit_descriptor(g) == orbit_descriptor(h));
    auto a = orbit_counts_4(g), b = orbit_counts_4(h);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
}

TEST_CASE("mmd") {
  Rng rng(6);
  const auto A = random_set(rng, 12, 0.3), B = random_set(rng, 9, 0.6);
  for (auto kind : {DescriptorKind::kDegree, DescriptorKind::kClustering, DescriptorKind::kOrbit}) {
    CAPTURE(to_string(kind));
    CHECK(mmd(A, A, kind) < 1e-12);
    CHECK(std::abs(mmd(A, B, kind) - mmd(B, A, kind)) < 1e-12);
    CHECK(mmd(A, B, kind) > 0.0);
    std::vector<std::vector<double>> da, db;
    for (const auto& g : A) da.push_back(descriptor(g, kind));
    for (const auto& g : B) db.push_back(descriptor(g, kind));
    const double naive = naive_mmd2(da, db, kind);
    CHECK(mmd_squared_serial(da, db, kind) == naive);
    CHECK(mmd_squared(da, db, kind) == naive);
  }
  SUBCASE("singleton closed form") {
    const std::vector<std::vector<double>> a = {{1.0, 0.0}}, b = {{0.0, 1.0}};
    CHECK(descriptor_distance(a[0], b[0], DescriptorKind::kDegree) == 1.0);
    const double m2 = mmd_squared(a, b, DescriptorKind::kDegree, 1.0);
    CHECK(m2 == doctest::Approx(2.0 - 2.0 * std::exp(-0.5)).epsilon(1e-14));
    CHECK(m2 == doctest::Approx(0.7869).epsilon(1e-4));
  }
  SUBCASE("distances") {
    // unequal lengths pad with zeros
    const std::vector<double> x = {0.5, 0.5}, y = {0.0, 0.0, 1.0};
    CHECK(descriptor_distance(x, y, DescriptorKind::kDegree) == doctest::Approx(0.5 + 1.0));
    CHECK(descriptor_distance(x, y, DescriptorKind::kClustering) == doctest::Approx(0.015));
    CHECK(descriptor_distance(x, y, DescriptorKind::kOrbit) == doctest::Approx(std::sqrt(1.5)));
  }
  SUBCASE("report and errors") {
    const auto r = mmd_report(A, B);
    CHECK(r.count_a == 12);
    CHECK(r.count_b == 9);
    CHECK(r.degree == mmd(A, B, DescriptorKind::kDegree));
    CHECK(r.average() == doctest::Approx((r.degree + r.clustering + r.orbit) / 3));
    CHECK_THROWS(mmd({}, B, DescriptorKind::kDegree));
    CHECK_THROWS(mmd(A, B, DescriptorKind::kDegree, 0.0));
    const auto csv = descriptors_csv(std::span(A).first(2), DescriptorKind::kOrbit);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(csv.rfind("graph,orbit0,", 0) == 0);
  }
}

TEST_CASE("spectral bipartition") {
  SUBCASE("two triangles joined by a bridge") {
    const auto g = bridged_cliques(3);
    const auto b = spectral_bipartition(g);
    CHECK_FALSE(b.disconnected);
    CHECK(b.labels[0] == b.labels[1]);
    CHECK(b.labels[1] == b.labels[2]);
    CHECK(b.labels[3] == b.labels[4]);
    CHECK(b.labels[4] == b.labels[5]);
    CHECK(b.labels[0] != b.labels[3]);
  }
  SUBCASE("relabeled bridged cliques split the same way") {
    Rng rng(7);
    const auto g = bridged_cliques(4);
    for (int rep = 0; rep < 10; ++rep) {
      const auto pi = random_permutation(8, rng);
      const auto b = spectral_bipartition(permute(g, pi));
      for (NodeId i = 0; i < 8; ++i) CHECK((b.labels[pi[i]] == b.labels[pi[0]]) == (i < 4));
    }
  }
  SUBCASE("small graphs") {
    const auto p2 = spectral_bipartition(test::path_graph(2));
    CHECK(p2.labels[0] != p2.labels[1]);
    for (int l : spectral_bipartition(test::complete_graph(4)).labels) CHECK((l == 0 || l == 1));
    CHECK(spectral_bipartition(make_simple_graph(1, {})).labels == std::vector<int>{0});
  }
  SUBCASE("disconnected input is flagged") {
    const std::vector<std::pair<NodeId, NodeId>> e = {{0, 1}, {2, 3}};
    const auto b = spectral_bipartition(make_simple_graph(4, e));
    CHECK(b.disconnected);
    CHECK(b.labels == std::vector<int>{0, 0, 1, 1});
  }
}

TEST_CASE("cross-cluster steps") {
  const std::vector<int> labels = {0, 0, 0, 0, 1, 1, 1, 1};
  const std::vector<NodeId> blocks = {0, 1, 2, 3, 4, 5, 6, 7};
  const std::vector<NodeId> alternating = {0, 4, 1, 5, 2, 6, 3, 7};
  CHECK(cross_cluster_count(blocks, labels) == 1);
  CHECK(cross_cluster_count(alternating, labels) == 7);
  CHECK_THROWS(cross_cluster_count(std::vector<NodeId>{0, 1}, labels));

  // exhaustive mean over all 8! orders, then a Monte Carlo sample of it
  double total = 0.0, count = 0.0;
  for (const auto& p : test::all_orderings(8)) {
    total += static_cast<double>(cross_cluster_count(p, labels));
    count += 1.0;
  }
  const double exact = total / count;
  CHECK(exact == doctest::Approx(4.0));
  Rng rng(8);
  const int draws = 5000;
  double s = 0.0, sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double c = static_cast<double>(cross_cluster_count(random_permutation(8, rng), labels));
    s += c;
    sq += c * c;
  }
  const double mean = s / draws, se = std::sqrt((sq / draws - mean * mean) / draws);
  CHECK(std::abs(mean - exact) < 3 * se);
}

TEST_CASE("uniqueness and novelty") {
  Rng rng(9);
  const auto c5 = test::cycle_graph(5);
  std::vector<LabeledGraph> same(4, c5);
  auto r = uniqueness_novelty(same, {});
  CHECK(r.unique == doctest::Approx(0.25));
  CHECK(r.novel == 1.0);
  CHECK(r.distinct == 1);

  // relabeled copies collapse to one class
  std::vector<LabeledGraph> relabeled;
  for (int i = 0; i < 5; ++i) relabeled.push_back(permute(test::path_graph(6), random_permutation(6, rng)));
  CHECK(uniqueness_novelty(relabeled, {}).distinct == 1);
  CHECK(wl_hash(relabeled[0]) == wl_hash(relabeled[1]));

  // a hexagon and two triangles share a WL hash but are not isomorphic
  const std::vector<std::pair<NodeId, NodeId>> tri = {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}};
  const auto two_triangles = make_simple_graph(6, tri);
  CHECK(wl_hash(two_triangles) == wl_hash(test::cycle_graph(6)));
  CHECK_FALSE(isomorphic(two_triangles, test::cycle_graph(6)));
  const std::vector<LabeledGraph> pair = {two_triangles, test::cycle_graph(6)};
  CHECK(uniqueness_novelty(pair, {}).distinct == 2);

  // types matter
  const auto typed = LabeledGraph::create({0, 1}, std::vector<TypedEdge>{{0, 1, 1}});
  const auto other = LabeledGraph::create({0, 1}, std::vector<TypedEdge>{{0, 1, 2}});
  CHECK_FALSE(isomorphic(typed, other));

  // novelty counts classes absent from training
  const std::vector<LabeledGraph> gen = {c5, test::path_graph(5), test::complete_graph(4), test::path_graph(5)};
  const std::vector<LabeledGraph> train = {permute(c5, random_permutation(5, rng)), star(3)};
  r = uniqueness_novelty(gen, train);
  CHECK(r.distinct == 3);
  CHECK(r.unique == doctest::Approx(0.75));
  CHECK(r.novel == doctest::Approx(2.0 / 3.0));
  CHECK(uniqueness_novelty(gen, std::vector<LabeledGraph>{star(3)}).novel == 1.0);
  CHECK_THROWS(uniqueness_novelty({}, train));
}
