#include "upbkit/graphs.hpp"

#include <algorithm>
#include <bit>
#include <numbers>
#include <numeric>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "upbkit/parallel.hpp"
#include "upbkit/random.hpp"

namespace upbkit::graphs {

char party_name(Party p) { return static_cast<char>('A' + static_cast<int>(p)); }

PartyGraph::PartyGraph(int vertices) : n_(vertices) {
  if (vertices < 0) throw std::invalid_argument("graph vertex count must be non-negative");
}

PartyGraph::PartyGraph(int vertices, const std::vector<std::pair<int, int>>& edges) : PartyGraph(vertices) {
  for (auto [i, j] : edges) add_edge(i, j);
}

void PartyGraph::add_edge(int i, int j) {
  if (i == j) throw std::invalid_argument("orthogonality graphs have no self-loops");
  if (i < 0 || j < 0 || i >= n_ || j >= n_) throw std::invalid_argument("edge endpoint out of range");
  const auto e = std::minmax(i, j);
  const std::pair<int, int> edge{e.first, e.second};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), edge);
  if (it == edges_.end() || *it != edge) edges_.insert(it, edge);
}

bool PartyGraph::has_edge(int i, int j) const {
  const auto e = std::minmax(i, j);
  return std::binary_search(edges_.begin(), edges_.end(), std::pair<int, int>{e.first, e.second});
}

int PartyGraph::degree(int v) const {
  return static_cast<int>(
      std::count_if(edges_.begin(), edges_.end(), [v](const auto& e) { return e.first == v || e.second == v; }));
}

namespace {

std::vector<std::vector<int>> adjacency(const PartyGraph& g) {
  std::vector<std::vector<int>> adj(g.vertices());
  for (auto [i, j] : g.edges()) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  return adj;
}

}  // namespace

std::vector<Violation> check_party_constraints(const PartyGraph& g) {
  std::vector<Violation> out;
  for (int v = 0; v < g.vertices(); ++v)
    if (g.degree(v) >= 3) out.push_back({Violation::Kind::Valence, v, {}});

  const auto adj = adjacency(g);
  std::vector<int> color(g.vertices(), -1), parent(g.vertices(), -1), depth(g.vertices(), 0);
  for (int root = 0; root < g.vertices(); ++root) {
    if (color[root] >= 0) continue;
    color[root] = 0;
    std::queue<int> queue;
    queue.push(root);
    std::optional<std::pair<int, int>> conflict;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop();
      for (int w : adj[u]) {
        if (color[w] < 0) {
          color[w] = 1 - color[u];
          parent[w] = u;
          depth[w] = depth[u] + 1;
          queue.push(w);
        } else if (color[w] == color[u] && !conflict) {
          conflict = std::pair{u, w};
        }
      }
    }
    if (!conflict) continue;
    // Close the cycle through the BFS tree: walk both ends up to their common ancestor.
    auto [u, w] = *conflict;
    std::vector<int> left{u}, right{w};
    while (u != w) {
      if (depth[u] >= depth[w]) {
        u = parent[u];
        left.push_back(u);
      } else {
        w = parent[w];
        right.push_back(w);
      }
    }
    right.pop_back();
    left.insert(left.end(), right.rbegin(), right.rend());
    out.push_back({Violation::Kind::OddCycle, -1, left});
  }
  return out;
}

PartyGraph canonical_form(const PartyGraph& g) {
  std::vector<int> perm(g.vertices());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::pair<int, int>> best;
  bool first = true;
  do {
    std::vector<std::pair<int, int>> relabeled;
    for (auto [i, j] : g.edges()) relabeled.push_back(std::minmax(perm[i], perm[j]));
    std::sort(relabeled.begin(), relabeled.end());
    if (first || relabeled < best) {
      best = std::move(relabeled);
      first = false;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return PartyGraph(g.vertices(), best);
}

bool isomorphic(const PartyGraph& a, const PartyGraph& b) {
  return a.vertices() == b.vertices() && a.edge_count() == b.edge_count() && canonical_form(a) == canonical_form(b);
}

std::vector<PartyGraph> enumerate_valid_party_graphs(int n, int min_edges) {
  if (n < 1 || n > 7) throw std::invalid_argument("enumerate_valid_party_graphs supports 1..7 vertices");
  const auto pairs = EdgeColoring::pairs(n);
  std::set<std::vector<std::pair<int, int>>> classes;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << pairs.size()); ++mask) {
    if (std::popcount(mask) < min_edges) continue;
    PartyGraph g(n);
    for (std::size_t k = 0; k < pairs.size(); ++k)
      if (mask >> k & 1U) g.add_edge(pairs[k].first, pairs[k].second);
    if (!check_party_constraints(g).empty()) continue;
    classes.insert(canonical_form(g).edges());
  }
  std::vector<PartyGraph> out;
  for (const auto& edges : classes) out.emplace_back(n, edges);
  return out;
}

std::vector<std::pair<int, int>> EdgeColoring::pairs(int n) {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out.emplace_back(i, j);
  return out;
}

PartyGraph EdgeColoring::party_graph(Party p) const {
  const auto all = pairs(vertices);
  if (labels.size() != all.size()) throw std::invalid_argument("edge coloring is not total");
  PartyGraph g(vertices);
  for (std::size_t k = 0; k < all.size(); ++k)
    if (labels[k] == p) g.add_edge(all[k].first, all[k].second);
  return g;
}

ColoringScan enumerate_colorings(int threads) {
  constexpr int kEdges = 10;
  constexpr std::uint64_t kTotal = 59049;  // 3^10
  constexpr std::uint64_t kChunk = 2048;
  const std::size_t chunks = (kTotal + kChunk - 1) / kChunk;
  std::vector<std::vector<Survivor>> found(chunks);
  std::vector<std::uint64_t> counted(chunks, 0);

  detail::parallel_for(chunks, threads, [&](std::size_t chunk) {
    const std::uint64_t lo = chunk * kChunk;
    const std::uint64_t hi = std::min(kTotal, lo + kChunk);
    for (std::uint64_t code = lo; code < hi; ++code) {
      ++counted[chunk];
      EdgeColoring c;
      c.labels.resize(kEdges);
      std::uint64_t rest = code;
      for (int k = 0; k < kEdges; ++k) {
        c.labels[k] = static_cast<Party>(rest % 3);
        rest /= 3;
      }
      Survivor s{c, {}};
      bool ok = true;
      for (Party p : {Party::A, Party::B, Party::C}) {
        const auto g = c.party_graph(p);
        if (!check_party_constraints(g).empty()) {
          ok = false;
          break;
        }
        if (g.edge_count() >= 4) s.heavy_parties.push_back(p);
      }
      if (ok) found[chunk].push_back(std::move(s));
    }
  });

  ColoringScan scan;
  for (std::size_t k = 0; k < chunks; ++k) {
    scan.scanned += counted[k];
    for (auto& s : found[k]) scan.survivors.push_back(std::move(s));
  }
  return scan;
}

std::optional<std::vector<ProductState>> realize_coloring(const EdgeColoring& c, std::uint64_t seed, double margin,
                                                          int attempts) {
  const int n = c.vertices;
  std::array<PartyGraph, 3> graphs{c.party_graph(Party::A), c.party_graph(Party::B), c.party_graph(Party::C)};

  // Two-coloring per component; a non-bipartite graph has no qubit realization.
  std::array<std::vector<int>, 3> side, component;
  for (int p = 0; p < 3; ++p) {
    const auto adj = adjacency(graphs[p]);
    side[p].assign(n, -1);
    component[p].assign(n, -1);
    int next = 0;
    for (int root = 0; root < n; ++root) {
      if (side[p][root] >= 0) continue;
      side[p][root] = 0;
      component[p][root] = next;
      std::vector<int> stack{root};
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int w : adj[u]) {
          if (side[p][w] < 0) {
            side[p][w] = 1 - side[p][u];
            component[p][w] = next;
            stack.push_back(w);
          } else if (side[p][w] == side[p][u]) {
            return std::nullopt;
          }
        }
      }
      ++next;
    }
  }

  for (int attempt = 0; attempt < attempts; ++attempt) {
    auto rng = random::stream(seed, static_cast<std::uint64_t>(attempt));
    std::array<std::vector<Vector>, 3> local;
    bool ok = true;
    for (int p = 0; p < 3 && ok; ++p) {
      const int components = *std::max_element(component[p].begin(), component[p].end()) + 1;
      std::vector<Vector> base(components);
      for (auto& b : base) b = random::haar_state(2, rng);
      local[p].resize(n);
      for (int v = 0; v < n; ++v) {
        const Vector& b = base[component[p][v]];
        const cplx phase = std::polar(1.0, random::uniform(0.0, 2.0 * std::numbers::pi, rng));
        local[p][v] = phase * (side[p][v] == 0 ? b : qubit_orthogonal(b));
      }
      for (int i = 0; i < n && ok; ++i)
        for (int j = i + 1; j < n && ok; ++j) {
          const double ov = linalg::abs_overlap(local[p][i], local[p][j]);
          ok = graphs[p].has_edge(i, j) ? ov <= 1e-12 : ov > margin;
        }
    }
    if (!ok) continue;

    std::vector<ProductState> members;
    for (int v = 0; v < n; ++v) members.push_back(ProductState::normalized({local[0][v], local[1][v], local[2][v]}));
    for (int i = 0; i < n && ok; ++i)
      for (int j = i + 1; j < n && ok; ++j) ok = std::abs(members[i].tensor().dot(members[j].tensor())) <= 1e-12;
    if (ok) return members;
  }
  return std::nullopt;
}

EdgeColoring canonical_coloring(const EdgeColoring& c) {
  const auto all = EdgeColoring::pairs(c.vertices);
  if (c.labels.size() != all.size()) throw std::invalid_argument("edge coloring is not total");
  std::vector<int> perm(c.vertices);
  std::iota(perm.begin(), perm.end(), 0);
  EdgeColoring best = c;
  do {
    EdgeColoring relabeled{c.vertices, std::vector<Party>(all.size())};
    for (std::size_t k = 0; k < all.size(); ++k) {
      const auto e = std::minmax(perm[all[k].first], perm[all[k].second]);
      const auto pos = std::find(all.begin(), all.end(), std::pair<int, int>{e.first, e.second}) - all.begin();
      relabeled.labels[static_cast<std::size_t>(pos)] = c.labels[k];
    }
    if (relabeled.labels < best.labels) best = std::move(relabeled);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::vector<SurvivorClass> survivor_classes(const ColoringScan& scan) {
  std::map<std::vector<Party>, int> counts;
  for (const auto& s : scan.survivors) ++counts[canonical_coloring(s.coloring).labels];
  std::vector<SurvivorClass> out;
  for (const auto& [labels, n] : counts) out.push_back({EdgeColoring{5, labels}, n});
  return out;
}

std::vector<ForcedPair> forced_orthogonal_pairs(const EdgeColoring& c) {
  std::vector<ForcedPair> out;
  for (Party p : {Party::A, Party::B, Party::C}) {
    const auto g = c.party_graph(p);
    const auto adj = adjacency(g);
    std::vector<int> side(c.vertices, -1), component(c.vertices, -1);
    for (int root = 0; root < c.vertices; ++root) {
      if (side[root] >= 0) continue;
      side[root] = 0;
      component[root] = root;
      std::vector<int> stack{root};
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int w : adj[u])
          if (side[w] < 0) {
            side[w] = 1 - side[u];
            component[w] = root;
            stack.push_back(w);
          }
      }
    }
    for (int i = 0; i < c.vertices; ++i)
      for (int j = i + 1; j < c.vertices; ++j)
        if (component[i] == component[j] && side[i] != side[j] && !g.has_edge(i, j)) out.push_back({p, i, j});
  }
  return out;
}

std::string describe(const PartyGraph& g) {
  std::ostringstream out;
  out << "n=" << g.vertices() << " {";
  for (std::size_t k = 0; k < g.edges().size(); ++k)
    out << (k ? "," : "") << g.edges()[k].first + 1 << g.edges()[k].second + 1;
  out << "}";
  return out.str();
}

}  // namespace upbkit::graphs
