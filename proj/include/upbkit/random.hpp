#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "upbkit/linalg.hpp"

namespace upbkit::random {

using Rng = std::mt19937_64;

/// Independent generator for stream `index` derived from a base seed.
Rng stream(std::uint64_t seed, std::uint64_t index);

Vector gaussian_vector(int dim, Rng& rng);
Matrix gaussian_matrix(int rows, int cols, Rng& rng);
/// Haar-random unit vector.
Vector haar_state(int dim, Rng& rng);
/// Haar-random unitary (QR of a Ginibre matrix with phase correction).
Matrix haar_unitary(int dim, Rng& rng);
/// Random full-rank density matrix G G^dag / tr.
Matrix random_density(int dim, Rng& rng);
double uniform(double lo, double hi, Rng& rng);
std::vector<int> random_permutation(int n, Rng& rng);

}  // namespace upbkit::random
