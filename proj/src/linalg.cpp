#include "upbkit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace upbkit::linalg {

namespace {

// Digits of a flat index in the mixed radix given by dims (party 0 leading).
void to_digits(int index, const Dims& dims, std::vector<int>& digits) {
  for (int p = static_cast<int>(dims.size()) - 1; p >= 0; --p) {
    digits[p] = index % dims[p];
    index /= dims[p];
  }
}

int from_digits(const std::vector<int>& digits, const Dims& dims) {
  int index = 0;
  for (std::size_t p = 0; p < dims.size(); ++p) index = index * dims[p] + digits[p];
  return index;
}

void check_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw std::invalid_argument(std::string(what) + ": matrix is not square");
}

void check_dims(const Matrix& m, const Dims& dims) {
  check_square(m, "dims");
  if (dims.empty()) throw std::invalid_argument("party dimension list is empty");
  for (int d : dims)
    if (d < 1) throw std::invalid_argument("party dimensions must be positive");
  if (total_dim(dims) != m.rows())
    throw std::invalid_argument("matrix size does not match party dimensions");
}

std::vector<int> normalized_party_set(std::vector<int> parties, int n) {
  std::sort(parties.begin(), parties.end());
  parties.erase(std::unique(parties.begin(), parties.end()), parties.end());
  for (int p : parties)
    if (p < 0 || p >= n) throw std::invalid_argument("party index out of range");
  return parties;
}

}  // namespace

int total_dim(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<>());
}

bool all_finite(const Matrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const cplx z = m.data()[i];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double hermiticity_error(const Matrix& m) {
  check_square(m, "hermiticity_error");
  return max_abs(m - m.adjoint());
}

Matrix hermitian_part(const Matrix& m) { return (m + m.adjoint()) * 0.5; }

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Vector kron(std::span<const Vector> factors) {
  Vector out = Vector::Ones(1);
  for (const auto& f : factors) {
    Vector next(out.size() * f.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) next.segment(i * f.size(), f.size()) = out(i) * f;
    out = std::move(next);
  }
  return out;
}

PartitionCut PartitionCut::of(std::vector<int> left, int parties) {
  PartitionCut cut;
  cut.left = normalized_party_set(std::move(left), parties);
  for (int p = 0; p < parties; ++p)
    if (!std::binary_search(cut.left.begin(), cut.left.end(), p)) cut.right.push_back(p);
  cut.check(parties);
  return cut;
}

void PartitionCut::check(int parties) const {
  if (left.empty() || right.empty()) throw std::invalid_argument("partition cut has an empty side");
  std::set<int> seen;
  for (int p : left) seen.insert(p);
  for (int p : right) {
    if (seen.count(p)) throw std::invalid_argument("partition cut sides overlap");
    seen.insert(p);
  }
  if (static_cast<int>(seen.size()) != parties || *seen.begin() != 0 || *seen.rbegin() != parties - 1)
    throw std::invalid_argument("partition cut does not cover all parties");
  if (static_cast<int>(left.size() + right.size()) != parties)
    throw std::invalid_argument("partition cut lists a party twice");
}

DensityMatrix::DensityMatrix(Dims dims, Matrix matrix) : dims_(std::move(dims)), matrix_(std::move(matrix)) {
  check_dims(matrix_, dims_);
  if (!all_finite(matrix_)) throw std::invalid_argument("density matrix has non-finite entries");
  if (hermiticity_error(matrix_) > tol::hermitian)
    throw std::invalid_argument("density matrix is not Hermitian");
  if (std::abs(matrix_.trace() - cplx(1.0)) > tol::trace)
    throw std::invalid_argument("density matrix trace differs from 1");
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(matrix_), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol::negative_eig)
    throw std::invalid_argument("density matrix has a negative eigenvalue");
}

DensityMatrix DensityMatrix::from_unnormalized(Dims dims, const Matrix& matrix) {
  check_dims(matrix, dims);
  Matrix h = hermitian_part(matrix);
  const double tr = h.trace().real();
  if (!(tr > 0.0)) throw NumericalError("operator has non-positive trace");
  h /= tr;
  return DensityMatrix(std::move(dims), std::move(h));
}

DensityMatrix DensityMatrix::pure(Dims dims, const Vector& psi) {
  const double n = psi.norm();
  if (!(n > 0.0)) throw std::invalid_argument("pure state vector is zero");
  const Vector u = psi / n;
  return from_unnormalized(std::move(dims), u * u.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(Dims dims) {
  const int d = total_dim(dims);
  return DensityMatrix(std::move(dims), Matrix::Identity(d, d) / static_cast<double>(d));
}

Matrix partial_trace(const Matrix& m, const Dims& dims, std::vector<int> keep) {
  check_dims(m, dims);
  const int n = static_cast<int>(dims.size());
  keep = normalized_party_set(std::move(keep), n);
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep set is empty");

  std::vector<int> traced;
  for (int p = 0; p < n; ++p)
    if (!std::binary_search(keep.begin(), keep.end(), p)) traced.push_back(p);
  Dims kept_dims;
  for (int p : keep) kept_dims.push_back(dims[p]);

  const int d = total_dim(dims);
  Matrix out = Matrix::Zero(total_dim(kept_dims), total_dim(kept_dims));
  std::vector<int> di(n), dj(n), ki(keep.size()), kj(keep.size());
  for (int i = 0; i < d; ++i) {
    to_digits(i, dims, di);
    for (int j = 0; j < d; ++j) {
      to_digits(j, dims, dj);
      bool diagonal = true;
      for (int p : traced)
        if (di[p] != dj[p]) {
          diagonal = false;
          break;
        }
      if (!diagonal) continue;
      for (std::size_t k = 0; k < keep.size(); ++k) {
        ki[k] = di[keep[k]];
        kj[k] = dj[keep[k]];
      }
      out(from_digits(ki, kept_dims), from_digits(kj, kept_dims)) += m(i, j);
    }
  }
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::vector<int> keep) {
  keep = normalized_party_set(std::move(keep), rho.parties());
  Dims kept_dims;
  for (int p : keep) kept_dims.push_back(rho.dims()[p]);
  return DensityMatrix::from_unnormalized(std::move(kept_dims), partial_trace(rho.matrix(), rho.dims(), keep));
}

Matrix partial_transpose(const Matrix& m, const Dims& dims, const std::vector<int>& parties) {
  check_dims(m, dims);
  const int n = static_cast<int>(dims.size());
  const auto flip = normalized_party_set(parties, n);
  const int d = total_dim(dims);
  Matrix out(d, d);
  std::vector<int> di(n), dj(n);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      to_digits(i, dims, di);
      to_digits(j, dims, dj);
      for (int p : flip) std::swap(di[p], dj[p]);
      out(from_digits(di, dims), from_digits(dj, dims)) = m(i, j);
    }
  }
  return out;
}

Matrix partial_transpose(const DensityMatrix& rho, const PartitionCut& cut) {
  cut.check(rho.parties());
  return partial_transpose(rho.matrix(), rho.dims(), cut.right);
}

EigenSystem eigh(const Matrix& h) {
  check_square(h, "eigh");
  if (!all_finite(h)) throw std::invalid_argument("eigh: non-finite input");
  if (hermiticity_error(h) > tol::eigh_input) throw std::invalid_argument("eigh: input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(h));
  if (es.info() != Eigen::Success) throw NumericalError("eigh: eigensolver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

namespace {
// Eigenvalues inside the solver's backward-error band (n * eps * ||m||) are
// zeroed; their square roots would otherwise contribute ~1e-8 each.
RealVector clipped_eigenvalues(const RealVector& values) {
  RealVector out = values;
  const double scale = out.size() ? out.cwiseAbs().maxCoeff() : 0.0;
  const double noise = static_cast<double>(out.size()) * std::numeric_limits<double>::epsilon() * scale;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (std::abs(out(i)) <= noise) {
      out(i) = 0.0;
      continue;
    }
    if (out(i) < -tol::negative_eig) {
      std::ostringstream msg;
      msg << "matrix is not positive semidefinite (eigenvalue " << out(i) << ")";
      throw NumericalError(msg.str());
    }
    out(i) = std::max(out(i), 0.0);
  }
  return out;
}
}  // namespace

Matrix psd_sqrt(const Matrix& m) {
  const auto es = eigh(m);
  const RealVector roots = clipped_eigenvalues(es.values).cwiseSqrt();
  return es.vectors * roots.cast<cplx>().asDiagonal() * es.vectors.adjoint();
}

double trace_sqrt(const Matrix& m) {
  const auto es = eigh(m);
  return clipped_eigenvalues(es.values).cwiseSqrt().sum();
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dims() != sigma.dims()) throw std::invalid_argument("fidelity: dimension mismatch");
  const Matrix root = psd_sqrt(rho.matrix());
  const Matrix inner = hermitian_part(root * sigma.matrix() * root);
  return std::clamp(trace_sqrt(inner), 0.0, 1.0);
}

double fidelity_projector_form(const Matrix& p, const DensityMatrix& rho) {
  check_square(p, "fidelity_projector_form");
  if (p.rows() != rho.dim()) throw std::invalid_argument("fidelity_projector_form: dimension mismatch");
  if (hermiticity_error(p) > tol::projector) throw std::invalid_argument("projector is not Hermitian");
  if (max_abs(p * p - p) > tol::projector) throw std::invalid_argument("projector is not idempotent");
  const double rank = std::round(p.trace().real());
  if (rank < 1.0) throw std::invalid_argument("projector has rank zero");
  const Matrix sandwich = hermitian_part(p * rho.matrix() * p);
  return std::clamp(trace_sqrt(sandwich) / std::sqrt(rank), 0.0, 1.0);
}

Matrix orthonormal_basis(const Matrix& columns) {
  if (columns.cols() == 0) return Matrix(columns.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(columns, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const double cutoff = std::max(1.0, s(0)) * 1e-10;
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;
  return svd.matrixU().leftCols(rank);
}

Matrix complement_basis(const Matrix& columns) {
  const Eigen::Index d = columns.rows();
  if (columns.cols() == 0) return Matrix::Identity(d, d);
  if (columns.cols() > d) throw NumericalError("complement_basis: more vectors than dimensions");
  Eigen::JacobiSVD<Matrix> svd(columns, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) <= std::max(1.0, s(0)) * 1e-10)
    throw NumericalError("complement_basis: input vectors are linearly dependent");
  return svd.matrixU().rightCols(d - columns.cols());
}

Matrix projector(const Matrix& q) { return q * q.adjoint(); }

double trace_distance(const Matrix& a, const Matrix& b) {
  const auto es = eigh(hermitian_part(a - b));
  return 0.5 * es.values.cwiseAbs().sum();
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

Vector fix_phase(const Vector& v) {
  if (v.size() == 0) return v;
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (std::abs(v(k)) == 0.0) return v;
  return v * (std::abs(v(k)) / v(k));
}

double abs_overlap(const Vector& a, const Vector& b) { return std::abs(a.dot(b)); }

double phase_distance(const Vector& a, const Vector& b) {
  // Direct form: stays accurate near zero where sqrt(2 - 2|<a|b>|) does not.
  const cplx ov = b.dot(a);
  const cplx phase = std::abs(ov) > 0.0 ? ov / std::abs(ov) : cplx(1.0);
  return (a - phase * b).norm();
}

}  // namespace upbkit::linalg
