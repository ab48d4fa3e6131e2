#pragma once

// Numerical search for product vectors inside a linear subspace.
//
// The search is a grid-seeded multistart: all parties but the largest group
// are sampled on a grid of generalized spherical charts, the largest group is
// solved exactly for each grid point (smallest eigenvector of a small Gram
// matrix), and grid-local minima are refined by damped Gauss-Newton on the
// product manifold. The result is a found-set at the configured resolution,
// not a certified-complete enumeration.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "upbkit/linalg.hpp"
#include "upbkit/product_state.hpp"

namespace upbkit::search {

/// Grouping of parties into the tensor factors a product vector splits over.
/// Tripartite {{0},{1},{2}}; the A|BC cut is {{0},{1,2}}.
struct Partition {
  std::vector<std::vector<int>> groups;

  static Partition each_party(int parties);
  /// Two groups: `left` and the remaining parties.
  static Partition bipartite(std::vector<int> left, int parties);

  /// Throws unless the groups are disjoint, sorted, and cover all parties.
  void check(int parties) const;
  Dims group_dims(const Dims& dims) const;
  bool operator==(const Partition&) const = default;
};

/// Orthonormal basis of a subspace of the tensor product space, with its
/// complement projector cached.
class Subspace {
 public:
  /// `basis` columns must be orthonormal within 1e-12.
  Subspace(Dims dims, Matrix basis);
  /// Orthonormalizes arbitrary spanning columns first.
  static Subspace spanned_by(Dims dims, const Matrix& columns);
  static Subspace full(Dims dims);

  const Dims& dims() const { return dims_; }
  const Matrix& basis() const { return basis_; }
  const Matrix& complement_projector() const { return complement_projector_; }
  int dimension() const { return static_cast<int>(basis_.cols()); }
  int ambient_dimension() const { return static_cast<int>(basis_.rows()); }
  Subspace complement() const;

 private:
  Dims dims_;
  Matrix basis_;
  Matrix complement_projector_;
};

struct SearchConfig {
  int grid = 16;                 // grid points per chart angle
  double tolerance = 1e-9;       // accept residual <= tolerance
  int max_iterations = 50;       // Gauss-Newton iterations per seed
  double dedup = 1e-6;           // hits equal if every factor overlap > 1 - dedup
  std::uint64_t seed = 0;        // jitters the grid's phase offsets
  int refine_best = 32;          // always refine this many best grid points
  int max_candidates = 4096;     // cap on refined grid points
  int threads = 1;

  /// Defaults tuned per local dimension: grid 16 for qubits, 12 / 40 iterations for qutrits.
  static SearchConfig for_dims(const Dims& dims);
  void check() const;
};

struct ProductVectorHit {
  std::vector<Vector> factors;  // one per partition group, phase-normalized
  double residual = 0.0;        // ||(I - P_H) (x) factors||
};

/// Expands per-group factors into the ambient tensor ordering.
Vector embed_product(std::span<const Vector> factors, const Partition& partition, const Dims& dims);

/// ||(I - P_H) v|| for the normalized product of `factors`.
double residual(std::span<const Vector> factors, const Subspace& subspace, const Partition& partition);
double residual(const ProductState& state, const Subspace& subspace);

/// Product vectors inside `subspace`, deduplicated up to phase, sorted by
/// residual. `prior` hits are re-refined first, so raising the resolution
/// with earlier hits as prior never loses them.
std::vector<ProductVectorHit> find_product_vectors(const Subspace& subspace, const Partition& partition,
                                                   const SearchConfig& config,
                                                   std::span<const ProductVectorHit> prior = {});

/// Best product vector in the orthogonal complement of the members' span, if any.
std::optional<ProductVectorHit> is_extendible(std::span<const ProductState> members, const SearchConfig& config);
std::optional<ProductVectorHit> is_extendible(std::span<const ProductState> members);

/// True when every factor of `a` overlaps the matching factor of `b` above 1 - threshold.
bool same_product_vector(std::span<const Vector> a, std::span<const Vector> b, double threshold);

}  // namespace upbkit::search
