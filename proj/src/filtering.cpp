#include "upbkit/filtering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "upbkit/optimize.hpp"
#include "upbkit/parallel.hpp"
#include "upbkit/random.hpp"

namespace upbkit::filtering {

LocalFilter::LocalFilter(std::vector<Matrix> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw std::invalid_argument("filter needs at least one factor");
  for (const auto& f : factors_) {
    if (f.rows() != f.cols() || f.rows() < 1) throw std::invalid_argument("filter factors must be square");
    if (!linalg::all_finite(f)) throw std::invalid_argument("filter factor is not finite");
    if (std::abs(linalg::spectral_norm(f) - 1.0) > 1e-10)
      throw std::invalid_argument("filter factors must have spectral norm 1");
  }
}

LocalFilter LocalFilter::normalized(std::vector<Matrix> factors) {
  for (auto& f : factors) {
    const double n = linalg::spectral_norm(f);
    if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("filter factor is zero");
    f /= n;
  }
  return LocalFilter(std::move(factors));
}

LocalFilter LocalFilter::identity(const Dims& dims) {
  std::vector<Matrix> f;
  for (int d : dims) f.push_back(Matrix::Identity(d, d));
  return LocalFilter(std::move(f));
}

Dims LocalFilter::dims() const {
  Dims d;
  for (const auto& f : factors_) d.push_back(static_cast<int>(f.rows()));
  return d;
}

Matrix LocalFilter::matrix() const {
  Matrix m = factors_.front();
  for (std::size_t k = 1; k < factors_.size(); ++k) m = linalg::kron(m, factors_[k]);
  return m;
}

SeparableSuperoperator::SeparableSuperoperator(std::vector<Term> terms) : terms_(std::move(terms)) {
  if (terms_.empty() || terms_.size() > max_terms)
    throw std::invalid_argument("separable superoperator needs between 1 and 8192 filters");
  const Dims dims = terms_.front().filter.dims();
  for (const auto& t : terms_) {
    if (t.filter.dims() != dims) throw std::invalid_argument("all filters must act on the same dims");
    if (!(t.weight >= 0.0) || !std::isfinite(t.weight)) throw std::invalid_argument("filter weights must be >= 0");
  }
  if (completeness_excess() > 1e-9) throw std::invalid_argument("sum of w X^dag X exceeds the identity");
}

double SeparableSuperoperator::completeness_excess() const {
  const Matrix first = terms_.front().filter.matrix();
  Matrix sum = Matrix::Zero(first.rows(), first.cols());
  for (const auto& t : terms_) {
    const Matrix x = t.filter.matrix();
    sum += t.weight * (x.adjoint() * x);
  }
  return linalg::eigh(linalg::hermitian_part(sum)).values.maxCoeff() - 1.0;
}

namespace {

FilterOutcome outcome_of(const Matrix& unnormalized, const Dims& dims) {
  FilterOutcome out;
  out.probability = unnormalized.trace().real();
  if (out.probability > probability_floor)
    out.state = linalg::DensityMatrix(dims, linalg::hermitian_part(unnormalized / out.probability));
  return out;
}

}  // namespace

// Filtering through a square root keeps X rho X^dag PSD when X nearly
// annihilates rho and p is tiny.
FilterOutcome apply_filter(const LocalFilter& x, const linalg::DensityMatrix& rho) {
  if (x.dims() != rho.dims()) throw std::invalid_argument("filter and state dims differ");
  const Matrix xr = x.matrix() * linalg::psd_sqrt(rho.matrix());
  return outcome_of(xr * xr.adjoint(), rho.dims());
}

FilterOutcome apply_separable(const SeparableSuperoperator& e, const linalg::DensityMatrix& rho) {
  Matrix sum = Matrix::Zero(rho.dim(), rho.dim());
  const Matrix root = linalg::psd_sqrt(rho.matrix());
  for (const auto& t : e.terms()) {
    if (t.filter.dims() != rho.dims()) throw std::invalid_argument("filter and state dims differ");
    const Matrix xr = t.filter.matrix() * root;
    sum += t.weight * (xr * xr.adjoint());
  }
  return outcome_of(sum, rho.dims());
}

double span_weight(const Upb& t, const linalg::DensityMatrix& rho) {
  if (t.dims() != rho.dims()) throw std::invalid_argument("UPB and state dims differ");
  const Matrix& b = t.span_basis();
  return (b.adjoint() * rho.matrix() * b).trace().real();
}

namespace {

struct BoundaryTerms {
  std::vector<Vector> states;      // product tensors, one per party
  std::vector<double> weights;     // weight_P * <perp_P|rho_S|perp_P>
};

Vector unit(const Vector& v, const char* what) {
  const double n = v.norm();
  if (v.size() != 2 || !(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument(what);
  return v / n;
}

BoundaryTerms boundary_terms(const Upb& s, const BoundaryApproach& a) {
  if (s.dims() != Dims{2, 2, 2}) throw std::invalid_argument("boundary limits are defined for three qubits");
  if (a.member < 0 || a.member >= s.size()) throw std::invalid_argument("member index out of range");
  if (a.image.size() != 3 || a.directions.size() != 3 || a.weights.size() != 3)
    throw std::invalid_argument("boundary approach needs one image, direction and weight per party");
  double total = 0.0;
  for (double w : a.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("boundary weights must be >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("boundary weights are all zero");

  const ProductState& member = s.member(a.member);
  const Matrix& cs = s.complement_basis();
  const double rank = static_cast<double>(cs.cols());
  std::vector<Vector> image;
  for (int p = 0; p < 3; ++p) image.push_back(unit(a.image[p], "image states must be nonzero qubit vectors"));

  BoundaryTerms out;
  for (int p = 0; p < 3; ++p) {
    std::vector<Vector> perp = member.factors();
    perp[p] = qubit_orthogonal(member.factor(p));
    const double lambda = (cs.adjoint() * linalg::kron(perp)).squaredNorm() / rank;
    std::vector<Vector> limit = image;
    limit[p] = unit(a.directions[p], "directions must be nonzero qubit vectors");
    out.states.push_back(linalg::kron(limit));
    out.weights.push_back(a.weights[p] * lambda);
  }
  return out;
}

}  // namespace

linalg::DensityMatrix boundary_limit(const Upb& s, const BoundaryApproach& approach) {
  const auto terms = boundary_terms(s, approach);
  Matrix m = Matrix::Zero(8, 8);
  double total = 0.0;
  for (std::size_t k = 0; k < terms.states.size(); ++k) {
    m += terms.weights[k] * terms.states[k] * terms.states[k].adjoint();
    total += terms.weights[k];
  }
  if (!(total > 0.0)) throw NumericalError("boundary limit has zero weight");
  return linalg::DensityMatrix(s.dims(), linalg::hermitian_part(m / total));
}

LocalFilter approach_filter(const Upb& s, const BoundaryApproach& approach, double scale) {
  (void)boundary_terms(s, approach);
  if (!(scale > 0.0)) throw std::invalid_argument("approach scale must be positive");
  const ProductState& member = s.member(approach.member);
  std::vector<Matrix> factors;
  for (int p = 0; p < 3; ++p) {
    const Vector& sp = member.factor(p);
    const Vector img = unit(approach.image[p], "image states must be nonzero qubit vectors");
    const Vector dir = unit(approach.directions[p], "directions must be nonzero qubit vectors");
    factors.push_back(img * sp.adjoint() +
                      scale * std::sqrt(approach.weights[p]) * dir * qubit_orthogonal(sp).adjoint());
  }
  return LocalFilter::normalized(std::move(factors));
}

void OptimizerConfig::check() const {
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  if (budget < 10) throw std::invalid_argument("budget must be >= 10");
  if (!(slack >= 0.0) || !std::isfinite(slack)) throw std::invalid_argument("slack must be >= 0");
  if (boundary_restarts < 1) throw std::invalid_argument("boundary restarts must be >= 1");
  if (threads < 0) throw std::invalid_argument("threads must be >= 0");
}

namespace {

constexpr double kPenalty = 2.0;

// Filters on the orbit of rho_S, evaluated through the complement bases:
// X rho_S X^dag is proportional to (X C_S)(X C_S)^dag.
class OrbitObjective {
 public:
  OrbitObjective(const Upb& s, const Upb& t) : dims_(s.dims()), cs_(s.complement_basis()), ct_(t.complement_basis()) {
    if (s.dims() != t.dims()) throw std::invalid_argument("UPB dims differ");
    for (int d : dims_) parameters_ += 2 * d * d;
  }

  int parameters() const { return parameters_; }

  std::vector<Matrix> factors(const RealVector& x) const {
    std::vector<Matrix> out;
    Eigen::Index k = 0;
    for (int d : dims_) {
      Matrix m(d, d);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c, k += 2) m(r, c) = cplx(x(k), x(k + 1));
      out.push_back(std::move(m));
    }
    return out;
  }

  RealVector pack(const std::vector<Matrix>& f) const {
    RealVector x(parameters_);
    Eigen::Index k = 0;
    for (const auto& m : f)
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c, k += 2) {
          x(k) = m(r, c).real();
          x(k + 1) = m(r, c).imag();
        }
    return x;
  }

  void project(RealVector& x) const {
    auto f = factors(x);
    for (auto& m : f) {
      const double n = linalg::spectral_norm(m);
      if (n > 0.0) m /= n;
    }
    x = pack(f);
  }

  // Returns false when the filter lands below the probability floor.
  bool evaluate(const RealVector& x, double& span, double& fidelity) const {
    const auto f = factors(x);
    Matrix m = f.front();
    for (std::size_t k = 1; k < f.size(); ++k) m = linalg::kron(m, f[k]);
    const Matrix y = m * cs_;
    const double norm2 = y.squaredNorm();
    if (!(norm2 / static_cast<double>(cs_.cols()) > probability_floor)) return false;
    const Matrix w = ct_.adjoint() * y;
    span = std::clamp(1.0 - w.squaredNorm() / norm2, 0.0, 1.0);
    const Eigen::SelfAdjointEigenSolver<Matrix> es(w.adjoint() * w, Eigen::EigenvaluesOnly);
    double nuclear = 0.0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) nuclear += std::sqrt(std::max(0.0, es.eigenvalues()(k)));
    fidelity = std::clamp(nuclear / std::sqrt(static_cast<double>(ct_.cols()) * norm2), 0.0, 1.0);
    return true;
  }

 private:
  Dims dims_;
  Matrix cs_;
  Matrix ct_;
  int parameters_ = 0;
};

enum class Goal { MinSpan, MaxFidelity };

OrbitOptimum run_orbit(const Upb& s, const Upb& t, const OptimizerConfig& config, Goal goal) {
  config.check();
  const OrbitObjective obj(s, t);
  auto value_of = [&](const RealVector& x) {
    double span = 0.0, fid = 0.0;
    if (!obj.evaluate(x, span, fid)) return kPenalty;
    return goal == Goal::MinSpan ? span : -fid;
  };
  optimize::PatternSearchConfig ps;
  ps.budget = config.budget;

  const auto n = static_cast<std::size_t>(config.restarts);
  std::vector<optimize::PatternSearchResult> results(n);
  detail::parallel_for(n, config.threads, [&](std::size_t r) {
    RealVector x0;
    if (r == 0) {
      x0 = obj.pack(LocalFilter::identity(s.dims()).factors());
    } else {
      auto rng = random::stream(config.seed, r);
      std::vector<Matrix> f;
      for (int d : s.dims()) f.push_back(random::gaussian_matrix(d, d, rng));
      x0 = obj.pack(f);
    }
    results[r] = optimize::pattern_search(value_of, std::move(x0), ps, [&](RealVector& x) { obj.project(x); });
  });

  OrbitOptimum out;
  std::size_t best = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (results[r].value < results[best].value) best = r;
    const double v = results[r].value >= kPenalty ? std::numeric_limits<double>::quiet_NaN()
                                                  : (goal == Goal::MinSpan ? results[r].value : -results[r].value);
    out.records.push_back({static_cast<int>(r), v, results[r].evaluations});
  }
  if (results[best].value >= kPenalty) throw NumericalError("every restart fell below the probability floor");
  out.best_restart = static_cast<int>(best);
  const LocalFilter filter = LocalFilter::normalized(obj.factors(results[best].x));
  const auto outcome = apply_filter(filter, state_of(s));
  if (!outcome.state) throw NumericalError("optimum filter fell below the probability floor");
  out.point = OrbitPoint{filter, outcome.probability, *outcome.state};
  out.value = goal == Goal::MinSpan ? span_weight(t, *outcome.state) : linalg::fidelity(state_of(t), *outcome.state);
  return out;
}

// Parameters: image (3 x 4 reals), directions (3 x 4 reals), then 3 weight roots.
BoundaryApproach approach_of(int member, const RealVector& x) {
  BoundaryApproach a;
  a.member = member;
  for (int p = 0; p < 3; ++p) {
    Vector img(2), dir(2);
    img << cplx(x(4 * p), x(4 * p + 1)), cplx(x(4 * p + 2), x(4 * p + 3));
    dir << cplx(x(12 + 4 * p), x(12 + 4 * p + 1)), cplx(x(12 + 4 * p + 2), x(12 + 4 * p + 3));
    a.image.push_back(img);
    a.directions.push_back(dir);
    a.weights.push_back(x(24 + p) * x(24 + p));
  }
  return a;
}

void project_approach(RealVector& x) {
  for (int block = 0; block < 6; ++block) {
    const double n = x.segment(4 * block, 4).norm();
    if (n > 0.0) x.segment(4 * block, 4) /= n;
  }
  const double w = x.tail(3).norm();
  if (w > 0.0) x.tail(3) /= w;
}

}  // namespace

OrbitOptimum minimize_span_weight(const Upb& s, const Upb& t, const OptimizerConfig& config) {
  return run_orbit(s, t, config, Goal::MinSpan);
}

OrbitOptimum maximize_fidelity(const Upb& s, const Upb& t, const OptimizerConfig& config) {
  return run_orbit(s, t, config, Goal::MaxFidelity);
}

BoundaryOptimum minimize_boundary_span_weight(const Upb& s, const Upb& t, const OptimizerConfig& config) {
  config.check();
  if (s.dims() != t.dims()) throw std::invalid_argument("UPB dims differ");
  const Matrix& bt = t.span_basis();
  optimize::PatternSearchConfig ps;
  ps.budget = config.budget;

  const int per = config.boundary_restarts;
  const auto n = static_cast<std::size_t>(s.size() * per);
  std::vector<optimize::PatternSearchResult> results(n);
  detail::parallel_for(n, config.threads, [&](std::size_t r) {
    const int member = static_cast<int>(r) / per;
    auto value_of = [&](const RealVector& x) {
      if (!(x.tail(3).squaredNorm() > 0.0) || !(x.head(24).array().isFinite().all())) return kPenalty;
      BoundaryTerms terms;
      try {
        terms = boundary_terms(s, approach_of(member, x));
      } catch (const std::invalid_argument&) {
        return kPenalty;
      }
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < terms.states.size(); ++k) {
        num += terms.weights[k] * (bt.adjoint() * terms.states[k]).squaredNorm();
        den += terms.weights[k];
      }
      return den > 0.0 ? num / den : kPenalty;
    };
    // Streams for boundary restarts start after the orbit restarts so the two never share draws.
    auto rng = random::stream(config.seed, static_cast<std::uint64_t>(config.restarts) + r);
    RealVector x0(27);
    for (Eigen::Index k = 0; k < 27; ++k) x0(k) = std::normal_distribution<double>()(rng);
    results[r] = optimize::pattern_search(value_of, std::move(x0), ps, project_approach);
  });

  BoundaryOptimum out;
  std::size_t best = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (results[r].value < results[best].value) best = r;
    out.records.push_back({static_cast<int>(r), results[r].value, results[r].evaluations});
  }
  if (results[best].value >= kPenalty) throw NumericalError("no valid boundary approach found");
  out.approach = approach_of(static_cast<int>(best) / per, results[best].x);
  out.state = boundary_limit(s, out.approach);
  out.value = span_weight(t, out.state);
  return out;
}

bool GapCertificate::chain_holds(double tol) const {
  return complement_weight <= complement_bound + tol && trace_sqrt_value <= trace_sqrt_bound + tol &&
         fidelity_hat <= sqrt_bound + tol && sqrt_bound <= linear_bound + tol;
}

GapCertificate certify_gap(const Upb& s, const Upb& t, const OptimizerConfig& config) {
  config.check();
  if (equivalent(s, t)) throw std::invalid_argument("S and T are equivalent: the gap certificate is undefined");
  GapCertificate c;
  c.source = canonicalize(s).angles;
  c.target = canonicalize(t).angles;
  c.config = config;
  c.minimum = minimize_span_weight(s, t, config);
  c.maximum = maximize_fidelity(s, t, config);
  c.boundary = minimize_boundary_span_weight(s, t, config);

  c.interior_min = c.minimum.value;
  c.boundary_min = c.boundary.value;
  c.argmax_span_weight = span_weight(t, c.maximum.point.state);
  c.delta_hat = c.interior_min;
  c.delta_attained_by = "interior";
  if (c.boundary_min < c.delta_hat) {
    c.delta_hat = c.boundary_min;
    c.delta_attained_by = "boundary";
  }
  if (c.argmax_span_weight < c.delta_hat) {
    c.delta_hat = c.argmax_span_weight;
    c.delta_attained_by = "fidelity-argmax";
  }
  c.delta_hat = std::max(0.0, c.delta_hat);
  c.fidelity_hat = c.maximum.value;
  c.epsilon_hat = c.delta_hat / 2.0;

  const Matrix p = t.complement_projector();
  const Matrix& rho = c.maximum.point.state.matrix();
  c.complement_weight = (p * rho).trace().real();
  c.complement_bound = 1.0 - c.delta_hat;
  c.trace_sqrt_value = linalg::trace_sqrt(linalg::hermitian_part(p * rho * p));
  c.trace_sqrt_bound = 2.0 * std::sqrt(c.complement_bound);
  c.sqrt_bound = std::sqrt(c.complement_bound);
  c.linear_bound = 1.0 - c.delta_hat / 2.0;
  c.consistent = c.fidelity_hat <= 1.0 - c.epsilon_hat + config.slack;
  return c;
}

namespace {

json_io::json records_json(const std::vector<RestartRecord>& records) {
  json_io::json out = json_io::json::array();
  for (const auto& r : records) {
    json_io::json v = std::isnan(r.value) ? json_io::json(nullptr) : json_io::json(r.value);
    out.push_back({{"restart", r.restart}, {"value", v}, {"evaluations", r.evaluations}});
  }
  return out;
}

json_io::json filter_json(const LocalFilter& f) {
  json_io::json out = json_io::json::array();
  for (const auto& m : f.factors()) out.push_back(json_io::matrix_to_json(m));
  return out;
}

}  // namespace

json_io::json to_json(const GapCertificate& c) {
  using json_io::json;
  json boundary_approach = {
      {"member", c.boundary.approach.member},
      {"image", json::array()},
      {"directions", json::array()},
      {"weights", c.boundary.approach.weights},
  };
  for (int p = 0; p < 3 && !c.boundary.approach.image.empty(); ++p) {
    boundary_approach["image"].push_back(json_io::to_json(linalg::fix_phase(c.boundary.approach.image[p].normalized())));
    boundary_approach["directions"].push_back(
        json_io::to_json(linalg::fix_phase(c.boundary.approach.directions[p].normalized())));
  }
  return {
      {"status", c.status},
      {"source_angles", c.source.as_array()},
      {"target_angles", c.target.as_array()},
      {"delta_hat", c.delta_hat},
      {"fidelity_hat", c.fidelity_hat},
      {"epsilon_hat", c.epsilon_hat},
      {"delta_attained_by", c.delta_attained_by},
      {"interior_min", c.interior_min},
      {"boundary_min", c.boundary_min},
      {"argmax_span_weight", c.argmax_span_weight},
      {"consistent", c.consistent},
      {"chain",
       {{"complement_weight", c.complement_weight},
        {"complement_bound", c.complement_bound},
        {"trace_sqrt", c.trace_sqrt_value},
        {"trace_sqrt_bound", c.trace_sqrt_bound},
        {"sqrt_bound", c.sqrt_bound},
        {"linear_bound", c.linear_bound},
        {"holds", c.chain_holds()}}},
      {"optimizer",
       {{"restarts", c.config.restarts},
        {"seed", c.config.seed},
        {"budget", c.config.budget},
        {"slack", c.config.slack},
        {"boundary_restarts", c.config.boundary_restarts}}},
      {"minimum",
       {{"value", c.minimum.value},
        {"best_restart", c.minimum.best_restart},
        {"probability", c.minimum.point.probability},
        {"filter", filter_json(c.minimum.point.filter)},
        {"restarts", records_json(c.minimum.records)}}},
      {"maximum",
       {{"value", c.maximum.value},
        {"best_restart", c.maximum.best_restart},
        {"probability", c.maximum.point.probability},
        {"filter", filter_json(c.maximum.point.filter)},
        {"restarts", records_json(c.maximum.records)}}},
      {"boundary", {{"value", c.boundary.value}, {"approach", boundary_approach}, {"restarts", records_json(c.boundary.records)}}},
  };
}

}  // namespace upbkit::filtering
