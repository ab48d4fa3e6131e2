#pragma once

// Local filtering of UPB states, separable superoperators, the span-weight
// functional f_T(rho) = tr(rho P_T), the closed-form separable limits at the
// boundary of the filter orbit, and the multistart gap certificate.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "upbkit/json_io.hpp"
#include "upbkit/linalg.hpp"
#include "upbkit/upb.hpp"

namespace upbkit::filtering {

/// States are defined only above this probability.
inline constexpr double probability_floor = 1e-14;

/// Product operator X_A (x) X_B (x) X_C with each factor of spectral norm 1.
class LocalFilter {
 public:
  /// Factors must be square and have spectral norm 1 within 1e-10.
  explicit LocalFilter(std::vector<Matrix> factors);
  /// Rescales each factor to spectral norm 1; throws on a zero factor.
  static LocalFilter normalized(std::vector<Matrix> factors);
  static LocalFilter identity(const Dims& dims);

  const std::vector<Matrix>& factors() const { return factors_; }
  Dims dims() const;
  Matrix matrix() const;

 private:
  std::vector<Matrix> factors_;
};

/// rho -> sum_l w_l X_l rho X_l^dag.
class SeparableSuperoperator {
 public:
  struct Term {
    LocalFilter filter;
    double weight = 1.0;
  };
  static constexpr std::size_t max_terms = 8192;

  /// Requires 1..max_terms terms, non-negative weights and
  /// lambda_max(sum_l w_l X_l^dag X_l) <= 1 + 1e-9.
  explicit SeparableSuperoperator(std::vector<Term> terms);
  const std::vector<Term>& terms() const { return terms_; }
  /// lambda_max(sum_l w_l X_l^dag X_l) - 1.
  double completeness_excess() const;

 private:
  std::vector<Term> terms_;
};

struct FilterOutcome {
  double probability = 0.0;
  std::optional<linalg::DensityMatrix> state;  // set when probability > probability_floor
};

FilterOutcome apply_filter(const LocalFilter& x, const linalg::DensityMatrix& rho);
FilterOutcome apply_separable(const SeparableSuperoperator& e, const linalg::DensityMatrix& rho);

/// f_T(rho) = sum_j <T_j|rho|T_j>.
double span_weight(const Upb& t, const linalg::DensityMatrix& rho);

/// Where the filter sequence converges and how it approaches: the limit
/// operator is |image><S_j|, and party P's correction is
/// sqrt(weight_P) |direction_P><perp(S_j,P)|.
struct BoundaryApproach {
  int member = 0;
  std::vector<Vector> image;       // one unit qubit state per party
  std::vector<Vector> directions;  // one unit qubit state per party
  std::vector<double> weights;     // non-negative, not all zero
};

/// Closed-form limit of the normalized filtered states along `approach`: the
/// mixture over parties P of |direction_P on P, image elsewhere> with weight
/// proportional to weight_P * <perp_P|rho_S|perp_P>. Separable by construction.
linalg::DensityMatrix boundary_limit(const Upb& s, const BoundaryApproach& approach);

/// |image><S_j| + scale * (first-order corrections), normalized per factor.
LocalFilter approach_filter(const Upb& s, const BoundaryApproach& approach, double scale);

struct OptimizerConfig {
  int restarts = 200;
  std::uint64_t seed = 0;
  int budget = 5000;            // objective evaluations per restart
  double slack = 1e-9;
  int boundary_restarts = 16;   // per UPB member
  int threads = 1;

  void check() const;
};

struct OrbitPoint {
  LocalFilter filter = LocalFilter::identity({2, 2, 2});
  double probability = 0.0;
  linalg::DensityMatrix state = linalg::DensityMatrix::maximally_mixed({2, 2, 2});
};

struct RestartRecord {
  int restart = 0;
  double value = 0.0;
  int evaluations = 0;
};

struct OrbitOptimum {
  double value = 0.0;
  int best_restart = 0;
  OrbitPoint point;
  std::vector<RestartRecord> records;
};

struct BoundaryOptimum {
  double value = 0.0;
  BoundaryApproach approach;
  linalg::DensityMatrix state = linalg::DensityMatrix::maximally_mixed({2, 2, 2});
  std::vector<RestartRecord> records;  // restart index = member * boundary_restarts + k
};

/// Multistart minimum of f_T over filtered copies of rho_S. Restart 0 starts
/// at the identity filter; the others from Gaussian factors drawn from
/// random::stream(seed, restart).
OrbitOptimum minimize_span_weight(const Upb& s, const Upb& t, const OptimizerConfig& config);

/// Multistart maximum of F(rho_T, X rho_S X^dag / p), same seeding.
OrbitOptimum maximize_fidelity(const Upb& s, const Upb& t, const OptimizerConfig& config);

/// Minimum of f_T over the boundary limits of every member.
BoundaryOptimum minimize_boundary_span_weight(const Upb& s, const Upb& t, const OptimizerConfig& config);

struct GapCertificate {
  CanonicalAngles source;
  CanonicalAngles target;
  std::string status = "empirical";

  double delta_hat = 0.0;
  double fidelity_hat = 0.0;
  double epsilon_hat = 0.0;
  double interior_min = 0.0;
  double boundary_min = 0.0;
  double argmax_span_weight = 0.0;
  std::string delta_attained_by;  // "interior", "boundary" or "fidelity-argmax"

  // Inequality chain at the fidelity argmax, with P the projector onto span(T)'s complement.
  double complement_weight = 0.0;    // tr(P rho P)
  double complement_bound = 0.0;     // 1 - delta_hat
  double trace_sqrt_value = 0.0;     // tr sqrt(P rho P)
  double trace_sqrt_bound = 0.0;     // 2 sqrt(1 - delta_hat)
  double sqrt_bound = 0.0;           // sqrt(1 - delta_hat)
  double linear_bound = 0.0;         // 1 - delta_hat / 2
  bool consistent = false;           // fidelity_hat <= 1 - epsilon_hat + slack

  OptimizerConfig config;
  OrbitOptimum minimum;
  OrbitOptimum maximum;
  BoundaryOptimum boundary;

  bool chain_holds(double tol = 1e-12) const;
};

/// Throws std::invalid_argument if S and T are equivalent.
GapCertificate certify_gap(const Upb& s, const Upb& t, const OptimizerConfig& config);

json_io::json to_json(const GapCertificate& c);

}  // namespace upbkit::filtering
