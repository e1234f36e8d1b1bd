#pragma once

#include <algorithm>
#include <array>
#include <utility>
#include <vector>

#include "gard/metrics.hpp"

namespace gard::test {

// Each template lists its edges and the orbit of every template node.
struct Template {
  Graphlet graphlet;
  std::vector<std::pair<int, int>> edges;
  std::array<Orbit, 4> orbit;
};

inline const std::vector<Template>& templates() {
  static const std::vector<Template> t = {
      {kP4, {{0, 1}, {1, 2}, {2, 3}}, {kPathEnd, kPathMid, kPathMid, kPathEnd}},
      {kStar, {{0, 1}, {0, 2}, {0, 3}}, {kStarCenter, kStarLeaf, kStarLeaf, kStarLeaf}},
      {kC4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}, {kCycle, kCycle, kCycle, kCycle}},
      {kPaw, {{0, 1}, {1, 2}, {0, 2}, {2, 3}}, {kPawSide, kPawSide, kPawHub, kPawPendant}},
      {kDiamond, {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}}, {kDiamondRim, kDiamondSpine, kDiamondSpine, kDiamondRim}},
      {kK4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}, {kClique, kClique, kClique, kClique}},
  };
  return t;
}

struct Brute {
  std::vector<OrbitRow> rows;
  std::array<std::uint64_t, kGraphletCount> occurrences{};
};

// Matches every 4-subset against the templates under all 24 relabelings.
inline Brute brute_orbits(const LabeledGraph& g) {
  const std::size_t n = g.size();
  Brute out;
  out.rows.assign(n, OrbitRow{});
  std::array<NodeId, 4> s{};
  for (s[0] = 0; s[0] < n; ++s[0])
    for (s[1] = s[0] + 1; s[1] < n; ++s[1])
      for (s[2] = s[1] + 1; s[2] < n; ++s[2])
        for (s[3] = s[2] + 1; s[3] < n; ++s[3]) {
          std::array<int, 4> p = {0, 1, 2, 3};
          bool found = false;
          do {
            for (const auto& t : templates()) {
              bool adj[4][4] = {};
              for (auto [a, b] : t.edges) adj[a][b] = adj[b][a] = true;
              bool match = true;
              for (int a = 0; a < 4 && match; ++a)
                for (int b = a + 1; b < 4 && match; ++b) match = g.has_edge(s[p[a]], s[p[b]]) == adj[a][b];
              if (!match) continue;
              for (int a = 0; a < 4; ++a) ++out.rows[s[p[a]]][t.orbit[a]];
              ++out.occurrences[t.graphlet];
              found = true;
              break;
            }
          } while (!found && std::next_permutation(p.begin(), p.end()));
        }
  return out;
}

}  // namespace gard::test
