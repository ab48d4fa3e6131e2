#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "upbkit/graphs.hpp"
#include "upbkit/json_io.hpp"
#include "upbkit/linalg.hpp"
#include "upbkit/product_state.hpp"
#include "upbkit/search.hpp"

namespace upbkit {

/// Ordered family of product states over declared party dimensions, with the
/// span and its orthogonal complement cached. Construction checks structure
/// and linear independence only; `validate` reports orthonormality and
/// unextendibility.
class Upb {
 public:
  Upb(Dims dims, std::vector<ProductState> members);

  const Dims& dims() const { return dims_; }
  const std::vector<ProductState>& members() const { return members_; }
  const ProductState& member(int j) const { return members_.at(static_cast<std::size_t>(j)); }
  int size() const { return static_cast<int>(members_.size()); }
  int parties() const { return static_cast<int>(dims_.size()); }
  int ambient_dimension() const { return linalg::total_dim(dims_); }

  /// Member tensors as columns.
  Matrix member_matrix() const;
  const Matrix& span_basis() const { return span_basis_; }
  const Matrix& complement_basis() const { return complement_basis_; }
  Matrix span_projector() const { return linalg::projector(span_basis_); }
  Matrix complement_projector() const { return linalg::projector(complement_basis_); }
  search::Subspace span() const { return {dims_, span_basis_}; }
  search::Subspace complement() const { return {dims_, complement_basis_}; }

  /// max |<S_i|S_j> - delta_ij|.
  double orthonormality_error() const;

  /// U_A (x) U_B (x) U_C applied to every member, members reordered so that
  /// result[permutation[j]] is the image of member j.
  Upb transformed(const std::vector<Matrix>& local_ops, const std::vector<int>& permutation) const;

 private:
  Dims dims_;
  std::vector<ProductState> members_;
  Matrix span_basis_;
  Matrix complement_basis_;
};

/// Angle triple labeling a three-qubit UPB class; each angle lies strictly
/// inside (0, pi), with boundary tolerance 1e-8.
struct CanonicalAngles {
  double theta_a = 0.0;
  double theta_b = 0.0;
  double theta_c = 0.0;

  static constexpr double boundary_tolerance = 1e-8;
  /// Throws std::invalid_argument for angles on or outside the boundary.
  static CanonicalAngles make(double a, double b, double c);
  std::array<double, 3> as_array() const { return {theta_a, theta_b, theta_c}; }
  double max_difference(const CanonicalAngles& other) const;
};

/// Local unitaries and member relabeling matching one UPB onto another:
/// (U_A (x) U_B (x) U_C) |S_j> = phase * |T_{permutation[j]}>.
struct EquivalenceWitness {
  std::vector<int> permutation;
  std::vector<Matrix> unitaries;
  double max_error = 0.0;
};

struct Canonicalization {
  CanonicalAngles angles;
  EquivalenceWitness witness;  // maps the input onto build_canonical(angles)
};

struct ValidationReport {
  double orthonormality_error = 0.0;
  double productness_error = 0.0;
  bool orthonormal = false;
  bool unextendible = false;
  std::optional<search::ProductVectorHit> extension;
  std::vector<graphs::PartyGraph> graphs;

  bool ok() const { return orthonormal && unextendible && productness_error <= 1e-12; }
};

/// |000>, |1,B,C>, |A,1,C_perp>, |A_perp,B_perp,1> with X = cos(t/2)|0> + sin(t/2)|1>.
Upb build_canonical(const CanonicalAngles& angles);

/// {|000>, |1,-,+>, |+,1,->, |-,+,1>}.
Upb shifts();

/// (I - sum_j |S_j><S_j|) / (D - n).
linalg::DensityMatrix state_of(const Upb& upb);

ValidationReport validate(const Upb& upb, const search::SearchConfig& config);
ValidationReport validate(const Upb& upb);

/// Per party: edge (i, j) iff |<P_i|P_j>| <= tol.
std::vector<graphs::PartyGraph> orthogonality_graphs(const Upb& upb, double tol = 1e-10);

/// Reduces a three-qubit UPB to canonical form: member 1 rotated to |000>,
/// members ordered so the |1> factors sit on the diagonal, relative phases
/// removed and angles folded into (0, pi). Throws if the input is not a
/// four-member orthonormal three-qubit family of that structure or an angle
/// lands on the boundary.
Canonicalization canonicalize(const Upb& upb);

/// Witness iff the canonical angles agree within 1e-8.
std::optional<EquivalenceWitness> equivalent(const Upb& s, const Upb& t);

/// max_j min_phase || U S_j - phase T_{perm(j)} ||.
double witness_error(const EquivalenceWitness& w, const Upb& from, const Upb& to);

/// max over parties of || marginal - I/d ||_max.
double normal_form_residual(const linalg::DensityMatrix& rho);

/// max_j || (I - P_T) X S_j || / || X S_j ||: zero iff X maps span(S) into span(T).
double span_map_residual(const Matrix& x, const Upb& s, const Upb& t);

/// Reads the shared UPB document: {"dims": [...], "members": [[factor, ...], ...]}
/// with factors as lists of [re, im], or the shorthand {"canonical": [a, b, c]}.
/// Factors are normalized on load. Throws std::invalid_argument when malformed.
Upb upb_from_json(const json_io::json& doc);
json_io::json upb_to_json(const Upb& upb);
Upb load_upb_file(const std::string& path);

/// Distance of X^dag X / (tr X^dag X / d) from the identity (max norm); zero iff X = r U.
double unitarity_defect(const Matrix& x);

}  // namespace upbkit
