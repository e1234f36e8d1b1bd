#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gard/graph.hpp"

namespace gard {

// ---- per-graph descriptors ----

/// Bin d holds the fraction of nodes with degree d.
std::vector<double> degree_histogram(const LabeledGraph& g);

/// Local clustering coefficient; 0 for nodes of degree < 2.
std::vector<double> clustering_coefficients(const LabeledGraph& g);

inline constexpr std::size_t kClusteringBins = 100;

/// Normalized histogram of clustering coefficients over [0, 1].
std::vector<double> clustering_histogram(const LabeledGraph& g, std::size_t bins = kClusteringBins);

/// Orbits of the six connected 4-node graphlets.
enum Orbit : std::size_t {
  kPathEnd,
  kPathMid,
  kStarLeaf,
  kStarCenter,
  kCycle,
  kPawPendant,
  kPawSide,
  kPawHub,
  kDiamondRim,
  kDiamondSpine,
  kClique,
  kOrbitCount
};

/// The six connected 4-node graphlets.
enum Graphlet : std::size_t { kP4, kStar, kC4, kPaw, kDiamond, kK4, kGraphletCount };

using OrbitRow = std::array<std::uint64_t, kOrbitCount>;

/// Per-node orbit participation counts, enumerating every connected 4-subset.
/// Runs on the OpenMP team.
std::vector<OrbitRow> orbit_counts_4(const LabeledGraph& g);
/// Single-threaded version of the same enumeration.
std::vector<OrbitRow> orbit_counts_4_serial(const LabeledGraph& g);

/// Graphlet of a connected 4-node subgraph from its edge count and local degrees.
Graphlet graphlet_of(std::size_t edges, const std::array<std::size_t, 4>& degrees);
/// Orbit of a node with the given degree inside a graphlet.
Orbit orbit_of(Graphlet graphlet, std::size_t local_degree);

/// Mean orbit-count row over nodes (zeros for the empty graph).
std::vector<double> orbit_descriptor(const LabeledGraph& g);

// ---- MMD ----

enum class DescriptorKind { kDegree, kClustering, kOrbit };

std::string to_string(DescriptorKind k);

/// Descriptor vector of one graph for the given kind.
std::vector<double> descriptor(const LabeledGraph& g, DescriptorKind kind);

/// Ground distance between two descriptors: EMD between histograms (L1 of the
/// CDF difference times bin width) or Euclidean distance for orbit means.
double descriptor_distance(std::span<const double> a, std::span<const double> b, DescriptorKind kind);

double gaussian_kernel(double distance, double sigma);

/// Biased (V-statistic) MMD^2 = mean k(A,A) + mean k(B,B) - 2 mean k(A,B).
/// Kernel values are computed on the OpenMP team and summed serially in
/// row-major order, so the result does not depend on the thread count.
double mmd_squared(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                   DescriptorKind kind, double sigma = 1.0);
double mmd_squared_serial(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                          DescriptorKind kind, double sigma = 1.0);

/// sqrt(max(MMD^2, 0)) between two graph sets.
double mmd(std::span<const LabeledGraph> a, std::span<const LabeledGraph> b, DescriptorKind kind,
           double sigma = 1.0);

struct MmdReport {
  double degree = 0.0;
  double clustering = 0.0;
  double orbit = 0.0;
  double sigma = 1.0;
  std::size_t count_a = 0;
  std::size_t count_b = 0;

  double average() const { return (degree + clustering + orbit) / 3.0; }
};

MmdReport mmd_report(std::span<const LabeledGraph> a, std::span<const LabeledGraph> b, double sigma = 1.0);

/// One CSV row per graph: index followed by the descriptor values.
std::string descriptors_csv(std::span<const LabeledGraph> graphs, DescriptorKind kind);

// ---- ordering analysis ----

struct Bipartition {
  std::vector<int> labels;
  bool disconnected = false;
};

/// Two clusters from the sign of the Fiedler vector of the normalized
/// Laplacian. The vector is oriented so node 0 is on the non-negative side;
/// entries with |x| < 1e-12 count as non-negative (label 0). Disconnected
/// inputs get label 0 for node 0's component and 1 elsewhere.
Bipartition spectral_bipartition(const LabeledGraph& g);

/// Number of consecutive steps whose nodes lie in different clusters.
std::size_t cross_cluster_count(std::span<const NodeId> order, std::span<const int> labels);

// ---- uniqueness / novelty ----

/// Weisfeiler-Lehman hash over node and edge types.
std::uint64_t wl_hash(const LabeledGraph& g, std::size_t rounds = 3);

/// Exact typed-graph isomorphism by backtracking.
bool isomorphic(const LabeledGraph& a, const LabeledGraph& b);

struct UniquenessNovelty {
  double unique = 0.0;
  double novel = 0.0;
  std::size_t distinct = 0;
};

/// unique = distinct classes / |generated|; novel = classes absent from
/// training / distinct classes. Hash collisions are resolved by exact
/// isomorphism for graphs with at most `exact_limit` nodes.
UniquenessNovelty uniqueness_novelty(std::span<const LabeledGraph> generated,
                                     std::span<const LabeledGraph> training, std::size_t exact_limit = 16);

}  // namespace gard
