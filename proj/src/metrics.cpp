#include "gard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "gard/parallel.hpp"
#include "gard/random.hpp"

namespace gard {

std::vector<double> degree_histogram(const LabeledGraph& g) {
  const std::size_t n = g.size();
  if (n == 0) return {};
  std::vector<std::size_t> deg(n);
  std::size_t max_deg = 0;
  for (NodeId i = 0; i < n; ++i) {
    deg[i] = g.degree(i);
    max_deg = std::max(max_deg, deg[i]);
  }
  std::vector<double> hist(max_deg + 1, 0.0);
  for (std::size_t d : deg) hist[d] += 1.0;
  for (double& h : hist) h /= static_cast<double>(n);
  return hist;
}

std::vector<double> clustering_coefficients(const LabeledGraph& g) {
  const std::size_t n = g.size();
  std::vector<double> cc(n, 0.0);
  for (NodeId i = 0; i < n; ++i) {
    const auto nb = g.neighbors(i);
    const std::size_t d = nb.size();
    if (d < 2) continue;
    std::size_t links = 0;
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a + 1; b < d; ++b) links += g.has_edge(nb[a], nb[b]) ? 1 : 0;
    }
    cc[i] = static_cast<double>(links) / (static_cast<double>(d * (d - 1)) / 2.0);
  }
  return cc;
}

std::vector<double> clustering_histogram(const LabeledGraph& g, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("clustering histogram needs at least one bin");
  std::vector<double> hist(bins, 0.0);
  const auto cc = clustering_coefficients(g);
  if (cc.empty()) return hist;
  for (double c : cc) {
    const auto b = std::min(static_cast<std::size_t>(c * static_cast<double>(bins)), bins - 1);
    hist[b] += 1.0;
  }
  for (double& h : hist) h /= static_cast<double>(cc.size());
  return hist;
}

Graphlet graphlet_of(std::size_t edges, const std::array<std::size_t, 4>& degrees) {
  const std::size_t max_deg = *std::max_element(degrees.begin(), degrees.end());
  switch (edges) {
    case 3: return max_deg == 3 ? kStar : kP4;
    case 4: return max_deg == 3 ? kPaw : kC4;
    case 5: return kDiamond;
    case 6: return kK4;
    default: throw std::invalid_argument("not a connected 4-node graphlet");
  }
}

Orbit orbit_of(Graphlet graphlet, std::size_t local_degree) {
  switch (graphlet) {
    case kP4: return local_degree == 1 ? kPathEnd : kPathMid;
    case kStar: return local_degree == 3 ? kStarCenter : kStarLeaf;
    case kC4: return kCycle;
    case kPaw: return local_degree == 1 ? kPawPendant : (local_degree == 2 ? kPawSide : kPawHub);
    case kDiamond: return local_degree == 2 ? kDiamondRim : kDiamondSpine;
    case kK4: return kClique;
    default: throw std::invalid_argument("unknown graphlet");
  }
}

namespace {

// Counts all connected 4-subsets whose smallest node is `a`.
void orbit_counts_from(const LabeledGraph& g, std::size_t a, std::vector<OrbitRow>& rows) {
  const std::size_t n = g.size();
  for (std::size_t b = a + 1; b < n; ++b) {
    for (std::size_t c = b + 1; c < n; ++c) {
      for (std::size_t d = c + 1; d < n; ++d) {
        const std::array<std::size_t, 4> q{a, b, c, d};
        std::array<std::size_t, 4> deg{};
        std::size_t edges = 0;
        for (int x = 0; x < 4; ++x) {
          for (int y = x + 1; y < 4; ++y) {
            if (g.has_edge(q[x], q[y])) {
              ++edges;
              ++deg[x];
              ++deg[y];
            }
          }
        }
        // on 4 nodes, >= 3 edges with no isolated node is always connected
        if (edges < 3) continue;
        if (std::find(deg.begin(), deg.end(), 0u) != deg.end()) continue;
        const Graphlet gl = graphlet_of(edges, deg);
        for (int x = 0; x < 4; ++x) ++rows[q[x]][orbit_of(gl, deg[x])];
      }
    }
  }
}

}  // namespace

std::vector<OrbitRow> orbit_counts_4_serial(const LabeledGraph& g) {
  std::vector<OrbitRow> rows(g.size(), OrbitRow{});
  for (std::size_t a = 0; a < g.size(); ++a) orbit_counts_from(g, a, rows);
  return rows;
}

std::vector<OrbitRow> orbit_counts_4(const LabeledGraph& g) {
  const std::size_t n = g.size();
  // one partial table per starting node; integer sums are order independent
  std::vector<std::vector<OrbitRow>> partial(n);
  parallel_for(n, [&](std::size_t a) {
    partial[a].assign(n, OrbitRow{});
    orbit_counts_from(g, a, partial[a]);
  });
  std::vector<OrbitRow> rows(n, OrbitRow{});
  for (const auto& p : partial) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t o = 0; o < kOrbitCount; ++o) rows[i][o] += p[i][o];
    }
  }
  return rows;
}

std::vector<double> orbit_descriptor(const LabeledGraph& g) {
  std::vector<double> mean(kOrbitCount, 0.0);
  if (g.size() == 0) return mean;
  for (const auto& row : orbit_counts_4(g)) {
    for (std::size_t o = 0; o < kOrbitCount; ++o) mean[o] += static_cast<double>(row[o]);
  }
  for (double& m : mean) m /= static_cast<double>(g.size());
  return mean;
}

std::string to_string(DescriptorKind k) {
  switch (k) {
    case DescriptorKind::kDegree: return "degree";
    case DescriptorKind::kClustering: return "clustering";
    case DescriptorKind::kOrbit: return "orbit";
  }
  return "?";
}

std::vector<double> descriptor(const LabeledGraph& g, DescriptorKind kind) {
  switch (kind) {
    case DescriptorKind::kDegree: return degree_histogram(g);
    case DescriptorKind::kClustering: return clustering_histogram(g);
    case DescriptorKind::kOrbit: return orbit_descriptor(g);
  }
  throw std::invalid_argument("unknown descriptor kind");
}

double descriptor_distance(std::span<const double> a, std::span<const double> b, DescriptorKind kind) {
  const std::size_t len = std::max(a.size(), b.size());
  auto at = [](std::span<const double> v, std::size_t i) { return i < v.size() ? v[i] : 0.0; };
  if (kind == DescriptorKind::kOrbit) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double d = at(a, i) - at(b, i);
      s += d * d;
    }
    return std::sqrt(s);
  }
  const double width = kind == DescriptorKind::kClustering ? 1.0 / static_cast<double>(kClusteringBins) : 1.0;
  double ca = 0.0, cb = 0.0, emd = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    ca += at(a, i);
    cb += at(b, i);
    emd += std::abs(ca - cb);
  }
  return emd * width;
}

double gaussian_kernel(double distance, double sigma) {
  return std::exp(-distance * distance / (2.0 * sigma * sigma));
}

namespace {

using Descriptors = std::vector<std::vector<double>>;

double mean_kernel(const Descriptors& x, const Descriptors& y, DescriptorKind kind, double sigma, bool parallel) {
  const std::size_t nx = x.size(), ny = y.size();
  std::vector<double> k(nx * ny);
  auto row = [&](std::size_t i) {
    for (std::size_t j = 0; j < ny; ++j) k[i * ny + j] = gaussian_kernel(descriptor_distance(x[i], y[j], kind), sigma);
  };
  if (parallel) {
    parallel_for(nx, row);
  } else {
    for (std::size_t i = 0; i < nx; ++i) row(i);
  }
  double total = 0.0;
  for (double v : k) total += v;
  return total / static_cast<double>(nx * ny);
}

double mmd2_impl(const Descriptors& a, const Descriptors& b, DescriptorKind kind, double sigma, bool parallel) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mmd needs two non-empty sets");
  if (!(sigma > 0.0)) throw std::invalid_argument("kernel bandwidth must be positive");
  return mean_kernel(a, a, kind, sigma, parallel) + mean_kernel(b, b, kind, sigma, parallel) -
         2.0 * mean_kernel(a, b, kind, sigma, parallel);
}

Descriptors descriptors_of(std::span<const LabeledGraph> graphs, DescriptorKind kind) {
  Descriptors out(graphs.size());
  parallel_for(graphs.size(), [&](std::size_t i) { out[i] = descriptor(graphs[i], kind); });
  return out;
}

}  // namespace

double mmd_squared(const Descriptors& a, const Descriptors& b, DescriptorKind kind, double sigma) {
  return mmd2_impl(a, b, kind, sigma, true);
}

double mmd_squared_serial(const Descriptors& a, const Descriptors& b, DescriptorKind kind, double sigma) {
  return mmd2_impl(a, b, kind, sigma, false);
}

double mmd(std::span<const LabeledGraph> a, std::span<const LabeledGraph> b, DescriptorKind kind, double sigma) {
  const double m2 = mmd_squared(descriptors_of(a, kind), descriptors_of(b, kind), kind, sigma);
  return std::sqrt(std::max(m2, 0.0));
}

MmdReport mmd_report(std::span<const LabeledGraph> a, std::span<const LabeledGraph> b, double sigma) {
  MmdReport r;
  r.sigma = sigma;
  r.count_a = a.size();
  r.count_b = b.size();
  r.degree = mmd(a, b, DescriptorKind::kDegree, sigma);
  r.clustering = mmd(a, b, DescriptorKind::kClustering, sigma);
  r.orbit = mmd(a, b, DescriptorKind::kOrbit, sigma);
  return r;
}

std::string descriptors_csv(std::span<const LabeledGraph> graphs, DescriptorKind kind) {
  const auto d = descriptors_of(graphs, kind);
  std::size_t width = 0;
  for (const auto& v : d) width = std::max(width, v.size());
  std::ostringstream os;
  os.precision(17);
  os << "graph";
  for (std::size_t i = 0; i < width; ++i) os << ',' << to_string(kind) << i;
  os << '\n';
  for (std::size_t g = 0; g < d.size(); ++g) {
    os << g;
    for (std::size_t i = 0; i < width; ++i) os << ',' << (i < d[g].size() ? d[g][i] : 0.0);
    os << '\n';
  }
  return os.str();
}

namespace {

std::vector<int> components(const LabeledGraph& g) {
  const std::size_t n = g.size();
  std::vector<int> comp(n, -1);
  int next = 0;
  for (NodeId s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::queue<NodeId> q;
    q.push(s);
    comp[s] = next;
    while (!q.empty()) {
      const NodeId u = q.front();
      q.pop();
      for (NodeId v : g.neighbors(u)) {
        if (comp[v] < 0) {
          comp[v] = next;
          q.push(v);
        }
      }
    }
    ++next;
  }
  return comp;
}

}  // namespace

Bipartition spectral_bipartition(const LabeledGraph& g) {
  const std::size_t n = g.size();
  Bipartition out;
  out.labels.assign(n, 0);
  if (n <= 1) return out;
  const auto comp = components(g);
  if (std::any_of(comp.begin(), comp.end(), [](int c) { return c != 0; })) {
    out.disconnected = true;
    for (std::size_t i = 0; i < n; ++i) out.labels[i] = comp[i] == comp[0] ? 0 : 1;
    return out;
  }
  Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<double> inv_sqrt(n);
  for (NodeId i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(g.degree(i)));
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = 0; j < n; ++j) {
      if (i != j && g.has_edge(i, j)) {
        lap(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = -inv_sqrt[i] * inv_sqrt[j];
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
  Eigen::VectorXd fiedler = solver.eigenvectors().col(1);
  constexpr double kZero = 1e-12;
  for (Eigen::Index i = 0; i < fiedler.size(); ++i) {
    if (std::abs(fiedler(i)) >= kZero) {
      if (fiedler(i) < 0) fiedler = -fiedler;
      break;
    }
  }
  for (NodeId i = 0; i < n; ++i) out.labels[i] = fiedler(static_cast<Eigen::Index>(i)) <= -kZero ? 1 : 0;
  return out;
}

std::size_t cross_cluster_count(std::span<const NodeId> order, std::span<const int> labels) {
  if (order.size() != labels.size()) throw std::invalid_argument("labeling does not cover the generation order");
  std::size_t count = 0;
  for (std::size_t s = 1; s < order.size(); ++s) {
    if (order[s] >= labels.size() || order[s - 1] >= labels.size()) throw std::out_of_range("order node outside labeling");
    if (labels[order[s]] != labels[order[s - 1]]) ++count;
  }
  return count;
}

namespace {

std::uint64_t combine(std::uint64_t h, std::uint64_t v) { return mix_seed(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2))); }

std::vector<std::uint64_t> wl_colors(const LabeledGraph& g, std::size_t rounds) {
  const std::size_t n = g.size();
  std::vector<std::uint64_t> col(n);
  for (NodeId i = 0; i < n; ++i) col[i] = mix_seed(static_cast<std::uint64_t>(g.node_type(i)) + 1);
  std::vector<std::uint64_t> next(n), msgs;
  for (std::size_t r = 0; r < rounds; ++r) {
    for (NodeId i = 0; i < n; ++i) {
      msgs.clear();
      for (NodeId j : g.neighbors(i)) msgs.push_back(combine(static_cast<std::uint64_t>(g.edge_type(i, j)), col[j]));
      std::sort(msgs.begin(), msgs.end());
      std::uint64_t h = combine(col[i], msgs.size());
      for (auto m : msgs) h = combine(h, m);
      next[i] = h;
    }
    col.swap(next);
  }
  return col;
}

bool extend(const LabeledGraph& a, const LabeledGraph& b, const std::vector<NodeId>& order,
            const std::vector<std::uint64_t>& ca, const std::vector<std::uint64_t>& cb, std::size_t depth,
            std::vector<NodeId>& map, std::vector<bool>& used) {
  if (depth == order.size()) return true;
  const NodeId i = order[depth];
  for (NodeId v = 0; v < b.size(); ++v) {
    if (used[v] || cb[v] != ca[i] || b.node_type(v) != a.node_type(i)) continue;
    bool ok = true;
    for (std::size_t d = 0; d < depth && ok; ++d) ok = a.edge_type(i, order[d]) == b.edge_type(v, map[order[d]]);
    if (!ok) continue;
    map[i] = v;
    used[v] = true;
    if (extend(a, b, order, ca, cb, depth + 1, map, used)) return true;
    used[v] = false;
  }
  return false;
}

}  // namespace

std::uint64_t wl_hash(const LabeledGraph& g, std::size_t rounds) {
  auto col = wl_colors(g, rounds);
  std::sort(col.begin(), col.end());
  std::uint64_t h = combine(g.size(), g.edge_count());
  for (auto c : col) h = combine(h, c);
  return h;
}

bool isomorphic(const LabeledGraph& a, const LabeledGraph& b) {
  if (a.size() != b.size() || a.edge_count() != b.edge_count()) return false;
  const std::size_t n = a.size();
  const auto ca = wl_colors(a, n == 0 ? 0 : 3);
  const auto cb = wl_colors(b, n == 0 ? 0 : 3);
  auto sa = ca, sb = cb;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  if (sa != sb) return false;
  // match high-degree nodes first, then follow adjacency
  std::vector<NodeId> order(n);
  for (NodeId i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](NodeId x, NodeId y) { return a.degree(x) > a.degree(y); });
  std::vector<NodeId> map(n, 0);
  std::vector<bool> used(n, false);
  return extend(a, b, order, ca, cb, 0, map, used);
}

UniquenessNovelty uniqueness_novelty(std::span<const LabeledGraph> generated, std::span<const LabeledGraph> training,
                                     std::size_t exact_limit) {
  if (generated.empty()) throw std::invalid_argument("uniqueness needs at least one generated graph");
  auto same = [&](const LabeledGraph& x, const LabeledGraph& y) {
    return x.size() > exact_limit ? true : isomorphic(x, y);
  };
  std::vector<std::uint64_t> gen_hash(generated.size());
  parallel_for(generated.size(), [&](std::size_t i) { gen_hash[i] = wl_hash(generated[i]); });
  std::multimap<std::uint64_t, std::size_t> train_by_hash;
  for (std::size_t i = 0; i < training.size(); ++i) train_by_hash.emplace(wl_hash(training[i]), i);

  std::multimap<std::uint64_t, std::size_t> classes;  // hash -> representative index
  for (std::size_t i = 0; i < generated.size(); ++i) {
    bool found = false;
    auto [lo, hi] = classes.equal_range(gen_hash[i]);
    for (auto it = lo; it != hi && !found; ++it) found = same(generated[i], generated[it->second]);
    if (!found) classes.emplace(gen_hash[i], i);
  }
  std::size_t novel = 0;
  for (const auto& [h, rep] : classes) {
    bool seen = false;
    auto [lo, hi] = train_by_hash.equal_range(h);
    for (auto it = lo; it != hi && !seen; ++it) seen = same(generated[rep], training[it->second]);
    if (!seen) ++novel;
  }
  UniquenessNovelty out;
  out.distinct = classes.size();
  out.unique = static_cast<double>(classes.size()) / static_cast<double>(generated.size());
  out.novel = static_cast<double>(novel) / static_cast<double>(classes.size());
  return out;
}

}  // namespace gard
