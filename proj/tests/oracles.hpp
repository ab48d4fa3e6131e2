#pragma once

// Independent reference computations for the tests: explicit index loops
// instead of the library's permutation and Kronecker helpers.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "upbkit/linalg.hpp"
#include "upbkit/random.hpp"

namespace oracle {

using upbkit::cplx;
using upbkit::Dims;
using upbkit::Matrix;
using upbkit::Vector;

inline constexpr double pi = std::numbers::pi;

inline std::vector<int> digits(int index, const Dims& dims) {
  std::vector<int> d(dims.size());
  for (int p = static_cast<int>(dims.size()) - 1; p >= 0; --p) {
    d[p] = index % dims[p];
    index /= dims[p];
  }
  return d;
}

inline int index_of(const std::vector<int>& d, const Dims& dims) {
  int idx = 0;
  for (std::size_t p = 0; p < dims.size(); ++p) idx = idx * dims[p] + d[p];
  return idx;
}

inline int total(const Dims& dims) {
  int n = 1;
  for (int d : dims) n *= d;
  return n;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      for (int k = 0; k < b.rows(); ++k)
        for (int l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

inline Vector kron3(const Vector& a, const Vector& b, const Vector& c) {
  Vector out(a.size() * b.size() * c.size());
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < b.size(); ++j)
      for (int k = 0; k < c.size(); ++k) out((i * b.size() + j) * c.size() + k) = a(i) * b(j) * c(k);
  return out;
}

inline Matrix partial_trace(const Matrix& m, const Dims& dims, const std::vector<int>& keep) {
  Dims kept;
  for (int p : keep) kept.push_back(dims[p]);
  const int n = total(dims), k = total(kept);
  Matrix out = Matrix::Zero(k, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const auto di = digits(i, dims), dj = digits(j, dims);
      bool traced_equal = true;
      for (std::size_t p = 0; p < dims.size(); ++p) {
        bool kept_party = false;
        for (int q : keep) kept_party = kept_party || q == static_cast<int>(p);
        if (!kept_party && di[p] != dj[p]) traced_equal = false;
      }
      if (!traced_equal) continue;
      std::vector<int> ki, kj;
      for (int q : keep) {
        ki.push_back(di[q]);
        kj.push_back(dj[q]);
      }
      out(index_of(ki, kept), index_of(kj, kept)) += m(i, j);
    }
  return out;
}

inline Matrix partial_transpose(const Matrix& m, const Dims& dims, const std::vector<int>& parties) {
  const int n = total(dims);
  Matrix out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      auto di = digits(i, dims), dj = digits(j, dims);
      for (int p : parties) std::swap(di[p], dj[p]);
      out(index_of(di, dims), index_of(dj, dims)) = m(i, j);
    }
  return out;
}

/// Eigenvalues by the general (non-Hermitian) complex solver, sorted ascending by real part.
inline std::vector<double> eigenvalues_general(const Matrix& m) {
  Eigen::ComplexEigenSolver<Matrix> es(m, false);
  std::vector<double> out;
  for (int k = 0; k < es.eigenvalues().size(); ++k) out.push_back(es.eigenvalues()(k).real());
  std::sort(out.begin(), out.end());
  return out;
}

inline double min_eigenvalue(const Matrix& m) { return eigenvalues_general(m).front(); }

/// F(|psi><psi|, sigma) = sqrt(<psi|sigma|psi>).
inline double pure_fidelity(const Vector& psi, const Matrix& sigma) {
  return std::sqrt(std::max(0.0, psi.dot(sigma * psi).real()));
}

inline Vector ket(std::initializer_list<cplx> entries) {
  Vector v(static_cast<Eigen::Index>(entries.size()));
  Eigen::Index k = 0;
  for (cplx e : entries) v(k++) = e;
  return v;
}

inline Matrix random_density(int dim, upbkit::random::Rng& rng) { return upbkit::random::random_density(dim, rng); }

inline double angle(upbkit::random::Rng& rng, double margin = 0.05) {
  return upbkit::random::uniform(margin, pi - margin, rng);
}

}  // namespace oracle
