#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "upbkit/random.hpp"
#include "upbkit/upb.hpp"

using namespace upbkit;
using doctest::Approx;

namespace {

const double pi = oracle::pi;

CanonicalAngles random_angles(random::Rng& rng) {
  return CanonicalAngles::make(oracle::angle(rng), oracle::angle(rng), oracle::angle(rng));
}

Vector plus() { return oracle::ket({1 / std::sqrt(2.0), 1 / std::sqrt(2.0)}); }
Vector minus() { return oracle::ket({1 / std::sqrt(2.0), -1 / std::sqrt(2.0)}); }
Vector zero() { return basis_vector(2, 0); }
Vector one() { return basis_vector(2, 1); }

// Random local unitaries and member shuffle applied to `s`.
Upb scrambled(const Upb& s, random::Rng& rng) {
  std::vector<Matrix> ops;
  for (int p = 0; p < 3; ++p) ops.push_back(random::haar_unitary(2, rng));
  return s.transformed(ops, random::random_permutation(4, rng));
}

// Independent check of a witness: apply the unitaries to each member with the
// oracle Kronecker product and compare up to phase.
double oracle_witness_error(const EquivalenceWitness& w, const Upb& from, const Upb& to) {
  const Matrix u = oracle::kron(oracle::kron(w.unitaries[0], w.unitaries[1]), w.unitaries[2]);
  double worst = 0.0;
  for (int j = 0; j < 4; ++j) {
    const double ov = linalg::abs_overlap(u * from.member(j).tensor(), to.member(w.permutation[j]).tensor());
    worst = std::max(worst, 1.0 - ov);
  }
  return worst;
}

bool contains_edge(const graphs::PartyGraph& g, int i, int j) { return g.has_edge(i, j) || g.has_edge(j, i); }

}  // namespace

TEST_CASE("canonical angles") {
  CHECK_NOTHROW(CanonicalAngles::make(0.1, 1.0, 3.0));
  CHECK_THROWS_AS(CanonicalAngles::make(0.0, pi / 2, pi / 2), std::invalid_argument);
  CHECK_THROWS_AS(CanonicalAngles::make(pi / 2, pi, pi / 2), std::invalid_argument);
  CHECK_THROWS_AS(CanonicalAngles::make(pi / 2, pi / 2, 5e-9), std::invalid_argument);
  CHECK_THROWS_AS(CanonicalAngles::make(std::nan(""), 1, 1), std::invalid_argument);
  CHECK(CanonicalAngles::make(1, 2, 3).max_difference(CanonicalAngles::make(1, 2.5, 3)) == Approx(0.5));
}

TEST_CASE("build_canonical") {
  auto rng = random::stream(51, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_angles(rng);
    const Upb s = build_canonical(a);
    CHECK(s.size() == 4);
    CHECK(s.orthonormality_error() < 1e-15);
    const Vector x = oracle::ket({std::cos(a.theta_a / 2), std::sin(a.theta_a / 2)});
    const Vector y = oracle::ket({std::cos(a.theta_b / 2), std::sin(a.theta_b / 2)});
    const Vector z = oracle::ket({std::cos(a.theta_c / 2), std::sin(a.theta_c / 2)});
    const Vector xp = oracle::ket({-std::sin(a.theta_a / 2), std::cos(a.theta_a / 2)});
    const Vector yp = oracle::ket({-std::sin(a.theta_b / 2), std::cos(a.theta_b / 2)});
    const Vector zp = oracle::ket({-std::sin(a.theta_c / 2), std::cos(a.theta_c / 2)});
    const std::vector<Vector> expected{oracle::kron3(zero(), zero(), zero()), oracle::kron3(one(), y, z),
                                       oracle::kron3(x, one(), zp), oracle::kron3(xp, yp, one())};
    for (int j = 0; j < 4; ++j) CHECK(linalg::abs_overlap(s.member(j).tensor(), expected[j]) == Approx(1.0).epsilon(1e-14));
  }

  const Upb third = build_canonical(CanonicalAngles::make(pi / 3, pi / 3, pi / 3));
  CHECK(validate(third).ok());
}

TEST_CASE("shifts") {
  const Upb s = shifts();
  CHECK(s.orthonormality_error() < 1e-15);
  const std::vector<Vector> expected{oracle::kron3(zero(), zero(), zero()), oracle::kron3(one(), minus(), plus()),
                                     oracle::kron3(plus(), one(), minus()), oracle::kron3(minus(), plus(), one())};
  for (int j = 0; j < 4; ++j) CHECK(linalg::abs_overlap(s.member(j).tensor(), expected[j]) == Approx(1.0).epsilon(1e-15));

  const auto c = canonicalize(s);
  CHECK(c.angles.max_difference(CanonicalAngles::make(pi / 2, pi / 2, pi / 2)) < 1e-9);
  CHECK(equivalent(s, build_canonical(CanonicalAngles::make(pi / 2, pi / 2, pi / 2))).has_value());

  const auto report = validate(s);
  CHECK(report.ok());
  CHECK(report.unextendible);
  CHECK(report.orthonormality_error < 1e-15);
}

TEST_CASE("state_of") {
  auto rng = random::stream(52, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const Upb s = build_canonical(random_angles(rng));
    const auto rho = state_of(s);
    const auto ev = oracle::eigenvalues_general(rho.matrix());
    for (int k = 0; k < 8; ++k) CHECK(std::abs(ev[k] - (k < 4 ? 0.0 : 0.25)) < 1e-12);
    for (const auto& m : s.members()) CHECK(std::abs(m.tensor().dot(rho.matrix() * m.tensor())) < 1e-15);
    CHECK(normal_form_residual(rho) <= 1e-12);
    for (int p = 0; p < 3; ++p)
      CHECK(linalg::max_abs(oracle::partial_trace(rho.matrix(), {2, 2, 2}, {p}) - Matrix::Identity(2, 2) / 2.0) < 1e-12);
  }
}

TEST_CASE("normal_form_residual") {
  const Vector v = oracle::kron3(zero(), zero(), zero());
  CHECK(normal_form_residual(linalg::DensityMatrix::pure({2, 2, 2}, v)) == Approx(0.5));
  CHECK(normal_form_residual(linalg::DensityMatrix::maximally_mixed({2, 2, 2})) == Approx(0.0));
}

TEST_CASE("validate reports extendible families") {
  const Upb s = shifts();
  const Upb three({2, 2, 2}, {s.members().begin(), s.members().begin() + 3});
  const auto r = validate(three);
  CHECK(r.orthonormal);
  CHECK_FALSE(r.unextendible);
  CHECK_FALSE(r.ok());
  REQUIRE(r.extension.has_value());
  const Vector hit = search::embed_product(r.extension->factors, search::Partition::each_party(3), {2, 2, 2});
  CHECK(linalg::abs_overlap(hit, oracle::kron3(minus(), plus(), one())) == Approx(1.0).epsilon(1e-8));

  // Canonical structure with the first angle on the boundary, |A> = |0>.
  const double b = 1.1, c = 2.0;
  const Upb degenerate({2, 2, 2}, {ProductState({zero(), zero(), zero()}),
                                   ProductState({one(), qubit_state(b), qubit_state(c)}),
                                   ProductState({zero(), one(), qubit_perp(c)}),
                                   ProductState({one(), qubit_perp(b), one()})});
  const auto d = validate(degenerate);
  CHECK(d.orthonormal);
  CHECK_FALSE(d.unextendible);
  REQUIRE(d.extension.has_value());
  CHECK(d.extension->residual <= 1e-9);
  CHECK_THROWS_AS(canonicalize(degenerate), std::invalid_argument);
}

TEST_CASE("Upb construction errors") {
  CHECK_THROWS_AS(Upb({2, 2}, {ProductState({zero(), zero()}), ProductState({zero(), zero()})}), std::invalid_argument);
  CHECK_THROWS_AS(Upb({2, 2}, {ProductState({zero(), zero(), zero()})}), std::invalid_argument);
  CHECK_THROWS_AS(Upb({2, 2}, {}), std::invalid_argument);
}

TEST_CASE("orthogonality graphs") {
  const auto g = orthogonality_graphs(shifts());
  REQUIRE(g.size() == 3);
  CHECK(g[0].edge_count() == 2);
  CHECK(contains_edge(g[0], 0, 1));
  CHECK(contains_edge(g[0], 2, 3));

  auto rng = random::stream(53, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto gs = orthogonality_graphs(scrambled(build_canonical(random_angles(rng)), rng));
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        int covered = 0;
        for (const auto& party : gs) covered += contains_edge(party, i, j);
        CHECK(covered >= 1);
      }
    for (const auto& party : gs)
      for (int v = 0; v < 4; ++v) CHECK(party.degree(v) <= 1);
  }
}

TEST_CASE("canonicalize round trip") {
  auto rng = random::stream(54, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_angles(rng);
    const Upb s = build_canonical(a);
    const auto c = canonicalize(s);
    CHECK(c.angles.max_difference(a) <= 1e-9);
    CHECK(c.witness.max_error <= 1e-7);
    CHECK(oracle_witness_error(c.witness, s, build_canonical(c.angles)) <= 1e-12);
  }
}

TEST_CASE("canonicalize recovers scrambled UPBs") {
  auto rng = random::stream(55, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_angles(rng);
    const Upb s = scrambled(build_canonical(a), rng);
    const auto c = canonicalize(s);
    CHECK(c.angles.max_difference(a) <= 1e-9);
    for (const auto& u : c.witness.unitaries) CHECK(linalg::max_abs(u.adjoint() * u - Matrix::Identity(2, 2)) <= 1e-10);
    CHECK(oracle_witness_error(c.witness, s, build_canonical(c.angles)) <= 1e-12);
  }
}

TEST_CASE("canonicalize rejects wrong inputs") {
  const Upb s = shifts();
  CHECK_THROWS_AS(canonicalize(Upb({2, 2, 2}, {s.members().begin(), s.members().begin() + 3})), std::invalid_argument);
  CHECK_THROWS_AS(canonicalize(Upb({2, 2}, {ProductState({zero(), zero()})})), std::invalid_argument);
  const Upb nonorth({2, 2, 2}, {ProductState({zero(), zero(), zero()}), ProductState({plus(), zero(), zero()}),
                                ProductState({zero(), one(), zero()}), ProductState({zero(), zero(), one()})});
  CHECK_THROWS_AS(canonicalize(nonorth), std::invalid_argument);
}

TEST_CASE("equivalence") {
  auto rng = random::stream(56, 0);
  const Upb s = build_canonical(random_angles(rng));

  const auto self = equivalent(s, s);
  REQUIRE(self.has_value());
  CHECK(self->permutation == std::vector<int>{0, 1, 2, 3});

  CHECK_FALSE(equivalent(build_canonical(CanonicalAngles::make(pi / 2, pi / 2, pi / 2)),
                         build_canonical(CanonicalAngles::make(pi / 3, pi / 2, pi / 2)))
                  .has_value());

  for (int trial = 0; trial < 20; ++trial) {
    const Upb a = build_canonical(random_angles(rng));
    const Upb b = scrambled(a, rng), c = scrambled(a, rng);
    const auto ab = equivalent(a, b), ba = equivalent(b, a), bc = equivalent(b, c), ac = equivalent(a, c);
    REQUIRE(ab.has_value());
    REQUIRE(ba.has_value());
    REQUIRE(bc.has_value());
    REQUIRE(ac.has_value());
    CHECK(oracle_witness_error(*ab, a, b) <= 1e-12);
    CHECK(oracle_witness_error(*ba, b, a) <= 1e-12);
    CHECK(witness_error(*ab, a, b) <= 1e-7);

    // Compose a -> b -> c and check it maps a onto c.
    EquivalenceWitness composed;
    composed.permutation.resize(4);
    for (int j = 0; j < 4; ++j) composed.permutation[j] = bc->permutation[ab->permutation[j]];
    for (int p = 0; p < 3; ++p) composed.unitaries.push_back(bc->unitaries[p] * ab->unitaries[p]);
    CHECK(oracle_witness_error(composed, a, c) <= 1e-12);

    const Upb other = build_canonical(random_angles(rng));
    CHECK(equivalent(a, other).has_value() == equivalent(other, a).has_value());
  }
}

TEST_CASE("maps between spans are proportional to unitaries") {
  auto rng = random::stream(57, 0);
  const Upb s = build_canonical(random_angles(rng));
  const Upb t = scrambled(s, rng);
  const auto w = equivalent(s, t);
  REQUIRE(w.has_value());
  const Matrix u = linalg::kron(linalg::kron(w->unitaries[0], w->unitaries[1]), w->unitaries[2]);
  for (int trial = 0; trial < 50; ++trial) {
    const double r = random::uniform(0.1, 3.0, rng);
    const Matrix x = r * u;
    CHECK(span_map_residual(x, s, t) <= 1e-12);
    CHECK(unitarity_defect(x) <= 1e-12);
  }
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Matrix> f;
    for (int p = 0; p < 3; ++p) f.push_back(random::gaussian_matrix(2, 2, rng));
    const Matrix x = linalg::kron(linalg::kron(f[0], f[1]), f[2]);
    CHECK(unitarity_defect(x) > 1e-6);
    CHECK(span_map_residual(x, s, t) > 1e-6);
  }
}

TEST_CASE("json round trip") {
  auto rng = random::stream(58, 0);
  const Upb s = scrambled(build_canonical(random_angles(rng)), rng);
  const Upb back = upb_from_json(upb_to_json(s));
  for (int j = 0; j < 4; ++j) CHECK(linalg::max_abs(back.member(j).tensor() - s.member(j).tensor()) < 1e-15);

  const Upb c = upb_from_json(json_io::json::parse(R"({"canonical": [1.0, 2.0, 0.5]})"));
  CHECK(canonicalize(c).angles.max_difference(CanonicalAngles::make(1.0, 2.0, 0.5)) < 1e-9);

  const Upb scaled = upb_from_json(json_io::json::parse(
      R"({"dims": [2, 2], "members": [[[[2, 0], [0, 0]], [[0, 0], [0, 3]]]]})"));
  CHECK(scaled.member(0).factor(0).norm() == Approx(1.0));

  for (const char* bad : {R"([1, 2])", R"({"dims": [2]})", R"({"canonical": [1, 2]})", R"({"canonical": [0, 1, 1]})",
                          R"({"dims": [2], "members": [[[[1, 0]]]]})", R"({"dims": [2], "members": [[[[1, 0], [0, 0]], [[1, 0], [0, 0]]]]})"})
    CHECK_THROWS_AS(upb_from_json(json_io::json::parse(bad)), std::invalid_argument);
}
