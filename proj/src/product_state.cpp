#include "upbkit/product_state.hpp"

#include <cmath>
#include <stdexcept>

namespace upbkit {

ProductState::ProductState(std::vector<Vector> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw std::invalid_argument("product state needs at least one factor");
  for (const auto& f : factors_) {
    if (f.size() < 1) throw std::invalid_argument("product state factor is empty");
    if (!linalg::all_finite(f)) throw std::invalid_argument("product state factor is not finite");
    if (std::abs(f.norm() - 1.0) > 1e-12) throw std::invalid_argument("product state factor is not unit norm");
  }
  tensor_ = linalg::kron(factors_);
}

ProductState ProductState::normalized(std::vector<Vector> factors) {
  for (auto& f : factors) {
    const double n = f.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("product state factor has zero norm");
    f /= n;
  }
  return ProductState(std::move(factors));
}

Dims ProductState::dims() const {
  Dims d;
  for (const auto& f : factors_) d.push_back(static_cast<int>(f.size()));
  return d;
}

double ProductState::productness_error() const {
  return linalg::max_abs(tensor_ - linalg::kron(factors_));
}

ProductState ProductState::transformed(const std::vector<Matrix>& local_ops) const {
  if (local_ops.size() != factors_.size()) throw std::invalid_argument("one local operator per party required");
  std::vector<Vector> out;
  out.reserve(factors_.size());
  for (std::size_t p = 0; p < factors_.size(); ++p) out.push_back(local_ops[p] * factors_[p]);
  return normalized(std::move(out));
}

Vector qubit_state(double theta) {
  Vector v(2);
  v << std::cos(theta / 2), std::sin(theta / 2);
  return v;
}

Vector qubit_perp(double theta) {
  Vector v(2);
  v << -std::sin(theta / 2), std::cos(theta / 2);
  return v;
}

Vector qubit_orthogonal(const Vector& v) {
  if (v.size() != 2) throw std::invalid_argument("qubit_orthogonal expects a qubit vector");
  Vector w(2);
  w << -std::conj(v(1)), std::conj(v(0));
  return w.normalized();
}

Vector basis_vector(int dim, int index) {
  Vector v = Vector::Zero(dim);
  v(index) = 1.0;
  return v;
}

}  // namespace upbkit
