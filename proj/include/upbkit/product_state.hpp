#pragma once

#include <vector>

#include "upbkit/linalg.hpp"

namespace upbkit {

/// A pure product state: one local unit vector per party plus the expanded tensor.
class ProductState {
 public:
  /// Factors must already be unit vectors (within 1e-12).
  explicit ProductState(std::vector<Vector> factors);

  /// Rescales each factor to unit norm; throws on a zero factor.
  static ProductState normalized(std::vector<Vector> factors);

  const std::vector<Vector>& factors() const { return factors_; }
  const Vector& factor(int party) const { return factors_.at(static_cast<std::size_t>(party)); }
  const Vector& tensor() const { return tensor_; }
  int parties() const { return static_cast<int>(factors_.size()); }
  Dims dims() const;

  /// Max deviation between the stored tensor and the Kronecker product of factors.
  double productness_error() const;

  /// Applies one local operator per party.
  ProductState transformed(const std::vector<Matrix>& local_ops) const;

 private:
  std::vector<Vector> factors_;
  Vector tensor_;
};

/// Single-qubit state cos(theta/2)|0> + sin(theta/2)|1>.
Vector qubit_state(double theta);
/// The orthogonal partner -sin(theta/2)|0> + cos(theta/2)|1>.
Vector qubit_perp(double theta);
/// Some unit vector orthogonal to a qubit state.
Vector qubit_orthogonal(const Vector& v);
Vector basis_vector(int dim, int index);

}  // namespace upbkit
