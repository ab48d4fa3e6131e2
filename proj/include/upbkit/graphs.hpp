#pragma once

// Orthogonality-graph combinatorics for five-member three-qubit families:
// per-party constraints, isomorphism classes, the exhaustive 3^10 edge
// labeling scan of K5, and random realization of labelings as product states.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "upbkit/product_state.hpp"

namespace upbkit::graphs {

enum class Party : int { A = 0, B = 1, C = 2 };
char party_name(Party p);

class PartyGraph {
 public:
  explicit PartyGraph(int vertices = 0);
  PartyGraph(int vertices, const std::vector<std::pair<int, int>>& edges);

  void add_edge(int i, int j);
  bool has_edge(int i, int j) const;
  int vertices() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int degree(int v) const;
  /// Sorted edges with i < j.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  bool operator==(const PartyGraph&) const = default;

 private:
  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;
};

struct Violation {
  enum class Kind { Valence, OddCycle };
  Kind kind;
  int vertex = -1;          // Valence: the offending vertex
  std::vector<int> cycle;   // OddCycle: vertices of one odd cycle, in order
};

/// Vertices of valence >= 3 and one odd cycle per non-bipartite component.
std::vector<Violation> check_party_constraints(const PartyGraph& g);

/// Relabeling-invariant form: the lexicographically smallest sorted edge list
/// over all vertex permutations.
PartyGraph canonical_form(const PartyGraph& g);
bool isomorphic(const PartyGraph& a, const PartyGraph& b);

/// Graphs on n vertices with >= min_edges edges, max valence 2 and no odd
/// cycles, one representative per isomorphism class.
std::vector<PartyGraph> enumerate_valid_party_graphs(int n = 5, int min_edges = 4);

/// One party label per vertex pair of K_n, pairs in lexicographic order.
struct EdgeColoring {
  int vertices = 5;
  std::vector<Party> labels;

  static std::vector<std::pair<int, int>> pairs(int n);
  PartyGraph party_graph(Party p) const;
};

struct Survivor {
  EdgeColoring coloring;
  std::vector<Party> heavy_parties;  // parties with >= 4 edges
};

struct ColoringScan {
  std::uint64_t scanned = 0;
  std::vector<Survivor> survivors;
};

/// Scans every single-party labeling of K5's ten edges and keeps those whose
/// three induced graphs all pass check_party_constraints. The result does not
/// depend on `threads`.
ColoringScan enumerate_colorings(int threads = 1);

/// Relabeling-invariant form of a coloring: the lexicographically smallest
/// label sequence over all vertex permutations (parties keep their names).
EdgeColoring canonical_coloring(const EdgeColoring& c);

struct SurvivorClass {
  EdgeColoring representative;  // canonical form
  int members = 0;              // survivors in the class
};

/// Survivors grouped by canonical_coloring, ordered by representative.
std::vector<SurvivorClass> survivor_classes(const ColoringScan& scan);

struct ForcedPair {
  Party party;
  int i = 0;
  int j = 0;
};

/// Non-adjacent pairs that qubit geometry forces to be orthogonal: vertices
/// on opposite sides of a bipartite component are orthogonal in C^2 whether
/// or not the edge is labeled. Empty iff realize_coloring can succeed.
std::vector<ForcedPair> forced_orthogonal_pairs(const EdgeColoring& c);

/// Random qubit states consistent with the labeling: labeled pairs exactly
/// orthogonal, all other pairs with |overlap| > margin. Returns nullopt when
/// no attempt satisfies the margin.
std::optional<std::vector<ProductState>> realize_coloring(const EdgeColoring& c, std::uint64_t seed,
                                                          double margin = 0.05, int attempts = 100);

std::string describe(const PartyGraph& g);

}  // namespace upbkit::graphs
