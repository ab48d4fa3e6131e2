#pragma once

// Dense complex linear algebra for small multipartite Hilbert spaces.
//
// Tensor index convention: party 0 is the most significant digit, so the
// basis vector |i0 i1 ... i_{n-1}> sits at row i0*d1*...*d_{n-1} + ... + i_{n-1}.
// This matches kron(a, b) with `a` acting on the leading party.

#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace upbkit {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Dims = std::vector<int>;

/// Raised when a computation meets a numerical condition it cannot recover
/// from (negative eigenvalues beyond tolerance, rank deficiency, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace tol {
inline constexpr double hermitian = 1e-12;       // DensityMatrix storage
inline constexpr double trace = 1e-12;
inline constexpr double negative_eig = 1e-10;   // clip window for PSD roots
inline constexpr double eigh_input = 1e-10;     // Hermiticity required by eigh
inline constexpr double projector = 1e-10;
}  // namespace tol

namespace linalg {

int total_dim(const Dims& dims);
bool all_finite(const Matrix& m);
double max_abs(const Matrix& m);
double hermiticity_error(const Matrix& m);
Matrix hermitian_part(const Matrix& m);

Matrix kron(const Matrix& a, const Matrix& b);
Vector kron(std::span<const Vector> factors);

/// Bipartition of parties {0..n-1}; the transpose in partial_transpose acts on `right`.
struct PartitionCut {
  std::vector<int> left;
  std::vector<int> right;

  /// Cut with `left` on one side and every remaining party on the other.
  static PartitionCut of(std::vector<int> left, int parties);
  void check(int parties) const;
};

/// Hermitian, unit-trace, PSD matrix over declared party dimensions.
class DensityMatrix {
 public:
  /// Validates the invariants; throws std::invalid_argument on violation.
  DensityMatrix(Dims dims, Matrix matrix);

  /// Symmetrizes and rescales to unit trace before validating.
  static DensityMatrix from_unnormalized(Dims dims, const Matrix& matrix);
  static DensityMatrix pure(Dims dims, const Vector& psi);
  static DensityMatrix maximally_mixed(Dims dims);

  const Dims& dims() const { return dims_; }
  const Matrix& matrix() const { return matrix_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }
  int parties() const { return static_cast<int>(dims_.size()); }

 private:
  Dims dims_;
  Matrix matrix_;
};

/// Reduced operator on the kept parties (ascending order).
Matrix partial_trace(const Matrix& m, const Dims& dims, std::vector<int> keep);
DensityMatrix partial_trace(const DensityMatrix& rho, std::vector<int> keep);

/// Transposes the tensor factors belonging to `parties`. An exact index permutation.
Matrix partial_transpose(const Matrix& m, const Dims& dims, const std::vector<int>& parties);
Matrix partial_transpose(const DensityMatrix& rho, const PartitionCut& cut);

struct EigenSystem {
  RealVector values;  // ascending
  Matrix vectors;     // orthonormal columns
};

EigenSystem eigh(const Matrix& h);

/// Principal square root of a PSD matrix. Eigenvalues in [-1e-10, 0) are
/// clipped to zero, anything more negative raises NumericalError. Eigenvalues
/// within n * eps * ||m|| of zero count as zero.
Matrix psd_sqrt(const Matrix& m);

/// tr sqrt(m) for PSD m, with the same clipping rule as psd_sqrt.
double trace_sqrt(const Matrix& m);

/// Uhlmann fidelity tr[(sqrt(rho) sigma sqrt(rho))^{1/2}], clamped to [0, 1].
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

/// Fidelity between P/rank(P) and rho computed as tr sqrt(P rho P) / sqrt(rank).
/// For a rank-4 projector the prefactor is 1/2.
double fidelity_projector_form(const Matrix& projector, const DensityMatrix& rho);

/// Orthonormal basis (columns) of the span of the given columns.
Matrix orthonormal_basis(const Matrix& columns);

/// Orthonormal basis of the orthogonal complement of the span of `columns`.
/// Throws NumericalError if the columns are linearly dependent.
Matrix complement_basis(const Matrix& columns);

/// Orthogonal projector onto the span of orthonormal columns.
Matrix projector(const Matrix& orthonormal_columns);

double trace_distance(const Matrix& a, const Matrix& b);

/// Largest singular value.
double spectral_norm(const Matrix& m);

/// Multiplies by a phase so the largest-magnitude component is real-positive.
Vector fix_phase(const Vector& v);

/// |<a|b>| for unit vectors.
double abs_overlap(const Vector& a, const Vector& b);

/// Distance between unit vectors modulo a global phase: sqrt(2 - 2|<a|b>|).
double phase_distance(const Vector& a, const Vector& b);

}  // namespace linalg
}  // namespace upbkit
