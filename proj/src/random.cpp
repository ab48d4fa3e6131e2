#include "upbkit/random.hpp"

#include <algorithm>
#include <numeric>

namespace upbkit::random {

Rng stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x5eedu};
  return Rng(seq);
}

Vector gaussian_vector(int dim, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) {
    const double re = n(rng);
    const double im = n(rng);
    v(i) = cplx(re, im);
  }
  return v;
}

Matrix gaussian_matrix(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const double re = n(rng);
      const double im = n(rng);
      m(i, j) = cplx(re, im);
    }
  return m;
}

Vector haar_state(int dim, Rng& rng) { return gaussian_vector(dim, rng).normalized(); }

Matrix haar_unitary(int dim, Rng& rng) {
  const Matrix g = gaussian_matrix(dim, dim, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < dim; ++i) {
    const cplx d = r(i, i);
    if (std::abs(d) > 0) q.col(i) *= d / std::abs(d);
  }
  return q;
}

Matrix random_density(int dim, Rng& rng) {
  const Matrix g = gaussian_matrix(dim, dim, rng);
  Matrix rho = g * g.adjoint();
  rho = linalg::hermitian_part(rho);
  return rho / rho.trace().real();
}

double uniform(double lo, double hi, Rng& rng) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

std::vector<int> random_permutation(int n, Rng& rng) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

}  // namespace upbkit::random
