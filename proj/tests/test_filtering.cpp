#include <doctest.h>

#include "oracles.hpp"
#include "upbkit/filtering.hpp"
#include "upbkit/random.hpp"
#include "upbkit/search.hpp"

using namespace upbkit;
using namespace upbkit::filtering;
using doctest::Approx;

namespace {

const double pi = oracle::pi;

Upb canonical(double a, double b, double c) { return build_canonical(CanonicalAngles::make(a, b, c)); }

const Upb& source() {
  static const Upb s = canonical(pi / 2, pi / 2, pi / 2);
  return s;
}

const Upb& target() {
  static const Upb t = canonical(pi / 3, pi / 3, pi / 3);
  return t;
}

LocalFilter random_filter(random::Rng& rng) {
  std::vector<Matrix> f;
  for (int p = 0; p < 3; ++p) f.push_back(random::gaussian_matrix(2, 2, rng));
  return LocalFilter::normalized(f);
}

Matrix oracle_filter_matrix(const LocalFilter& x) {
  return oracle::kron(oracle::kron(x.factors()[0], x.factors()[1]), x.factors()[2]);
}

// f_T by summing member expectation values.
double oracle_span_weight(const Upb& t, const Matrix& rho) {
  double f = 0.0;
  for (const auto& m : t.members()) f += m.tensor().dot(rho * m.tensor()).real();
  return f;
}

// min over product states of <psi|P|psi> by alternating single-party eigenvector updates.
double oracle_product_min(const Matrix& p, random::Rng& rng, int restarts = 40) {
  double best = 1.0;
  for (int r = 0; r < restarts; ++r) {
    std::vector<Vector> f{random::haar_state(2, rng), random::haar_state(2, rng), random::haar_state(2, rng)};
    double value = 1.0;
    for (int sweep = 0; sweep < 300; ++sweep) {
      for (int q = 0; q < 3; ++q) {
        Matrix local = Matrix::Zero(2, 2);
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) {
            std::vector<Vector> ea = f, eb = f;
            ea[q] = basis_vector(2, a);
            eb[q] = basis_vector(2, b);
            local(a, b) = oracle::kron3(ea[0], ea[1], ea[2]).dot(p * oracle::kron3(eb[0], eb[1], eb[2]));
          }
        Eigen::SelfAdjointEigenSolver<Matrix> es(local);
        f[q] = es.eigenvectors().col(0);
        value = es.eigenvalues()(0);
      }
    }
    best = std::min(best, value);
  }
  return best;
}

OptimizerConfig small_config(int restarts = 6) {
  OptimizerConfig c;
  c.restarts = restarts;
  c.budget = 2000;
  c.boundary_restarts = 4;
  return c;
}

BoundaryApproach random_approach(int member, random::Rng& rng) {
  BoundaryApproach a;
  a.member = member;
  for (int p = 0; p < 3; ++p) {
    a.image.push_back(random::haar_state(2, rng));
    a.directions.push_back(random::haar_state(2, rng));
    a.weights.push_back(random::uniform(0.1, 1.0, rng));
  }
  return a;
}

}  // namespace

TEST_CASE("local filters") {
  CHECK_THROWS_AS(LocalFilter({Matrix::Identity(2, 2) * 2.0, Matrix::Identity(2, 2), Matrix::Identity(2, 2)}),
                  std::invalid_argument);
  CHECK_THROWS_AS(LocalFilter::normalized({Matrix::Zero(2, 2)}), std::invalid_argument);
  auto rng = random::stream(71, 0);
  const LocalFilter x = random_filter(rng);
  for (const auto& f : x.factors()) CHECK(linalg::spectral_norm(f) == Approx(1.0).epsilon(1e-12));
  CHECK(linalg::max_abs(x.matrix() - oracle_filter_matrix(x)) < 1e-15);
  CHECK(x.dims() == Dims{2, 2, 2});
}

TEST_CASE("apply_filter") {
  const auto rho = state_of(source());
  const auto id = apply_filter(LocalFilter::identity({2, 2, 2}), rho);
  CHECK(id.probability == Approx(1.0));
  REQUIRE(id.state.has_value());
  CHECK(linalg::max_abs(id.state->matrix() - rho.matrix()) < 1e-15);

  Matrix p0 = Matrix::Zero(2, 2);
  p0(0, 0) = 1;
  const auto killed = apply_filter(LocalFilter({p0, p0, p0}), rho);
  CHECK(killed.probability < 1e-14);
  CHECK_FALSE(killed.state.has_value());

  auto rng = random::stream(72, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const LocalFilter x = random_filter(rng);
    const auto out = apply_filter(x, rho);
    const Matrix xm = oracle_filter_matrix(x);
    const Matrix raw = xm * rho.matrix() * xm.adjoint();
    CHECK(out.probability == Approx(raw.trace().real()).epsilon(1e-12));
    REQUIRE(out.state.has_value());
    CHECK(linalg::max_abs(out.state->matrix() - raw / out.probability) < 1e-12);

    const auto ev = oracle::eigenvalues_general(out.state->matrix());
    int rank = 0;
    for (double e : ev) rank += e > 1e-10;
    CHECK(rank == 4);
    const auto range = search::Subspace::spanned_by({2, 2, 2}, xm * source().complement_basis());
    CHECK(search::find_product_vectors(range, search::Partition::each_party(3), {}).empty());
  }
}

TEST_CASE("separable superoperators") {
  const auto rho = state_of(source());
  const SeparableSuperoperator identity({{LocalFilter::identity({2, 2, 2}), 1.0}});
  const auto out = apply_separable(identity, rho);
  CHECK(out.probability == Approx(1.0));
  CHECK(linalg::max_abs(out.state->matrix() - rho.matrix()) < 1e-15);

  auto rng = random::stream(73, 0);
  const SeparableSuperoperator half({{random_filter(rng), 0.5}, {random_filter(rng), 0.5}});
  const auto mixed = apply_separable(half, rho);
  REQUIRE(mixed.state.has_value());
  CHECK(mixed.state->matrix().trace().real() == Approx(1.0));
  CHECK(oracle::min_eigenvalue(mixed.state->matrix()) > -1e-12);

  CHECK_THROWS_AS(SeparableSuperoperator({}), std::invalid_argument);
  CHECK_THROWS_AS(SeparableSuperoperator({{LocalFilter::identity({2, 2, 2}), 1.5}}), std::invalid_argument);
  CHECK_THROWS_AS(SeparableSuperoperator({{LocalFilter::identity({2, 2, 2}), -0.1}}), std::invalid_argument);
  std::vector<SeparableSuperoperator::Term> many(SeparableSuperoperator::max_terms + 1,
                                                 {LocalFilter::identity({2, 2, 2}), 1e-5});
  CHECK_THROWS_AS(SeparableSuperoperator{many}, std::invalid_argument);
}

TEST_CASE("span weight is linear over ensembles") {
  const auto rho = state_of(source());
  auto rng = random::stream(74, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const int terms = 1 + trial % 5;
    std::vector<SeparableSuperoperator::Term> list;
    for (int l = 0; l < terms; ++l) list.push_back({random_filter(rng), random::uniform(0.0, 1.0, rng) / terms});
    const SeparableSuperoperator e(list);
    const auto out = apply_separable(e, rho);
    REQUIRE(out.state.has_value());
    double weighted = 0.0;
    for (const auto& term : list) {
      const auto single = apply_filter(term.filter, rho);
      weighted += term.weight * single.probability * span_weight(target(), *single.state);
    }
    CHECK(std::abs(out.probability * span_weight(target(), *out.state) - weighted) <= 1e-10);
    CHECK(linalg::fidelity(state_of(target()), *out.state) < 1.0);
  }
}

TEST_CASE("separable maps never reach the target exactly") {
  const auto rho = state_of(source());
  const auto rho_t = state_of(target());
  auto rng = random::stream(75, 0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SeparableSuperoperator::Term> list;
    for (int l = 0; l < 3; ++l) list.push_back({random_filter(rng), 1.0 / 3.0});
    const auto out = apply_separable(SeparableSuperoperator(list), rho);
    REQUIRE(out.state.has_value());
    CHECK(linalg::fidelity(rho_t, *out.state) < 1.0 - 1e-6);
  }
}

TEST_CASE("span weight") {
  const Upb& t = target();
  CHECK(span_weight(t, state_of(t)) == Approx(0.0));
  CHECK(span_weight(t, linalg::DensityMatrix::maximally_mixed({2, 2, 2})) == Approx(0.5));
  const double f = span_weight(t, state_of(source()));
  CHECK(f > 1e-3);
  CHECK(f == Approx(oracle_span_weight(t, state_of(source()).matrix())).epsilon(1e-12));
}

TEST_CASE("rank-deficient filters leave product vectors in the range") {
  const auto rho = state_of(source());
  auto rng = random::stream(76, 0);
  int tested = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Matrix> f;
    for (int p = 0; p < 3; ++p) f.push_back(random::gaussian_matrix(2, 2, rng));
    const int q = trial % 3;
    f[q] = random::gaussian_vector(2, rng) * random::gaussian_vector(2, rng).adjoint();
    const LocalFilter x = LocalFilter::normalized(f);
    const auto out = apply_filter(x, rho);
    if (!out.state) continue;
    ++tested;
    const auto range = search::Subspace::spanned_by({2, 2, 2}, x.matrix() * source().complement_basis());
    CHECK_FALSE(search::find_product_vectors(range, search::Partition::each_party(3), {}).empty());
    CHECK(span_weight(target(), *out.state) > 1e-8);
  }
  CHECK(tested == 50);
}

TEST_CASE("filters preserve PPT across A|BC") {
  const auto rho = state_of(source());
  auto rng = random::stream(77, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto out = apply_filter(random_filter(rng), rho);
    for (int p = 0; p < 3; ++p)
      CHECK(oracle::min_eigenvalue(oracle::partial_transpose(out.state->matrix(), {2, 2, 2}, {p})) > -1e-12);
  }
}

TEST_CASE("boundary limits") {
  const Upb& s = source();
  const auto rho = state_of(s);
  auto rng = random::stream(78, 0);

  SUBCASE("single weight gives a pure product state") {
    BoundaryApproach a = random_approach(1, rng);
    a.weights = {1.0, 0.0, 0.0};
    const auto limit = boundary_limit(s, a);
    const Vector expected = oracle::kron3(a.directions[0], a.image[1], a.image[2]);
    CHECK(linalg::max_abs(limit.matrix() - expected * expected.adjoint()) < 1e-12);
  }

  SUBCASE("mixture weights follow the source state") {
    const BoundaryApproach a = random_approach(2, rng);
    const auto limit = boundary_limit(s, a);
    CHECK(limit.matrix().trace().real() == Approx(1.0));
    Matrix m = Matrix::Zero(8, 8);
    double total = 0.0;
    for (int p = 0; p < 3; ++p) {
      std::vector<Vector> perp = s.member(2).factors(), state = a.image;
      perp[p] = qubit_orthogonal(perp[p]);
      state[p] = a.directions[p];
      const Vector pv = oracle::kron3(perp[0], perp[1], perp[2]);
      const Vector sv = oracle::kron3(state[0], state[1], state[2]);
      const double w = a.weights[p] * pv.dot(rho.matrix() * pv).real();
      m += w * sv * sv.adjoint();
      total += w;
    }
    CHECK(linalg::max_abs(limit.matrix() - m / total) < 1e-12);
  }

  SUBCASE("filters along the approach converge to the limit") {
    for (int trial = 0; trial < 20; ++trial) {
      const BoundaryApproach a = random_approach(trial % 4, rng);
      const auto out = apply_filter(approach_filter(s, a, 1e-5), rho);
      REQUIRE(out.state.has_value());
      CHECK(linalg::trace_distance(out.state->matrix(), boundary_limit(s, a).matrix()) <= 1e-4);
    }
  }

  SUBCASE("errors") {
    BoundaryApproach a = random_approach(0, rng);
    a.weights = {0.0, 0.0, 0.0};
    CHECK_THROWS_AS(boundary_limit(s, a), std::invalid_argument);
    a = random_approach(4, rng);
    CHECK_THROWS_AS(boundary_limit(s, a), std::invalid_argument);
    a = random_approach(0, rng);
    CHECK_THROWS_AS(approach_filter(s, a, 0.0), std::invalid_argument);
  }
}

TEST_CASE("equal source and target") {
  const OptimizerConfig config = small_config(3);
  const auto min = minimize_span_weight(source(), source(), config);
  CHECK(min.value == Approx(0.0));
  CHECK(min.best_restart == 0);
  const auto max = maximize_fidelity(source(), source(), config);
  CHECK(max.value == Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(certify_gap(source(), shifts(), config), std::invalid_argument);
}

TEST_CASE("optimizer outputs are valid orbit points") {
  const auto min = minimize_span_weight(source(), target(), small_config(4));
  const auto rho = state_of(source());
  const Matrix xm = oracle_filter_matrix(min.point.filter);
  const Matrix raw = xm * rho.matrix() * xm.adjoint();
  CHECK(min.point.probability == Approx(raw.trace().real()).epsilon(1e-10));
  CHECK(linalg::max_abs(min.point.state.matrix() - raw / min.point.probability) <= 1e-10);
  CHECK(min.value == Approx(oracle_span_weight(target(), min.point.state.matrix())).epsilon(1e-12));
  CHECK(min.records.size() == 4);
  for (const auto& r : min.records) CHECK(r.value >= min.value - 1e-12);
  CHECK(oracle::min_eigenvalue(min.point.state.matrix()) > -1e-12);

  OptimizerConfig bad = small_config();
  bad.restarts = 0;
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
}

TEST_CASE("boundary minimum equals the product-state minimum of the target span") {
  auto rng = random::stream(79, 0);
  const double oracle_min = oracle_product_min(target().span_projector(), rng);
  const auto b = minimize_boundary_span_weight(source(), target(), small_config());
  CHECK(b.value == Approx(oracle_min).epsilon(1e-6));
  CHECK(b.value == Approx(span_weight(target(), b.state)).epsilon(1e-12));
}

TEST_CASE("boundary fidelities stay below the interior maximum") {
  const auto max = maximize_fidelity(source(), target(), small_config());
  const auto rho_t = state_of(target());
  auto rng = random::stream(80, 0);
  for (int trial = 0; trial < 50; ++trial)
    CHECK(linalg::fidelity(rho_t, boundary_limit(source(), random_approach(trial % 4, rng))) <= max.value + 1e-6);
}

TEST_CASE("gap certificates") {
  const OptimizerConfig config = small_config();
  const auto far = certify_gap(source(), target(), config);
  CHECK(far.status == "empirical");
  CHECK(far.delta_hat > 1e-3);
  CHECK(far.fidelity_hat <= 1.0 - 1e-4);
  CHECK(far.epsilon_hat == Approx(far.delta_hat / 2));
  CHECK(far.chain_holds());
  CHECK(far.consistent);
  CHECK(far.consistent == (far.fidelity_hat <= 1.0 - far.epsilon_hat + config.slack));
  CHECK(far.complement_bound == Approx(1.0 - far.delta_hat));
  CHECK(far.sqrt_bound == Approx(std::sqrt(1.0 - far.delta_hat)));

  const auto near = certify_gap(source(), canonical(pi / 2 + 0.01, pi / 2, pi / 2), config);
  CHECK(near.delta_hat < far.delta_hat);

  auto rng = random::stream(81, 0);
  for (int trial = 0; trial < 5; ++trial) {
    const Upb a = canonical(oracle::angle(rng, 0.2), oracle::angle(rng, 0.2), oracle::angle(rng, 0.2));
    const Upb b = canonical(oracle::angle(rng, 0.2), oracle::angle(rng, 0.2), oracle::angle(rng, 0.2));
    const auto c = certify_gap(a, b, small_config(3));
    CHECK(c.consistent);
    CHECK(c.chain_holds());
  }

  const auto doc = to_json(far);
  CHECK(doc.at("status") == "empirical");
  CHECK(doc.at("delta_hat").get<double>() == far.delta_hat);
  CHECK(doc.at("consistent").get<bool>() == far.consistent);
}
