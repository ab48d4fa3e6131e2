#include "upbkit/upb.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace upbkit {

namespace {

constexpr double kPi = std::numbers::pi;

Matrix columns_of(const std::vector<ProductState>& members, int dim) {
  Matrix m(dim, static_cast<Eigen::Index>(members.size()));
  for (std::size_t j = 0; j < members.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = members[j].tensor();
  return m;
}

Vector qubit(cplx a, cplx b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

Upb::Upb(Dims dims, std::vector<ProductState> members) : dims_(std::move(dims)), members_(std::move(members)) {
  if (dims_.empty()) throw std::invalid_argument("UPB needs at least one party");
  for (int d : dims_)
    if (d < 2) throw std::invalid_argument("party dimensions must be at least 2");
  if (members_.empty()) throw std::invalid_argument("UPB needs at least one member");
  for (const auto& m : members_)
    if (m.dims() != dims_) throw std::invalid_argument("member dimensions do not match the declared dims");
  const int dim = linalg::total_dim(dims_);
  if (static_cast<int>(members_.size()) > dim) throw std::invalid_argument("more members than the space dimension");
  const Matrix cols = columns_of(members_, dim);
  try {
    complement_basis_ = linalg::complement_basis(cols);
  } catch (const NumericalError&) {
    throw std::invalid_argument("UPB members are linearly dependent");
  }
  span_basis_ = linalg::orthonormal_basis(cols);
}

Matrix Upb::member_matrix() const { return columns_of(members_, ambient_dimension()); }

double Upb::orthonormality_error() const {
  const Matrix m = member_matrix();
  const Matrix gram = m.adjoint() * m;
  return linalg::max_abs(gram - Matrix::Identity(gram.rows(), gram.cols()));
}

Upb Upb::transformed(const std::vector<Matrix>& local_ops, const std::vector<int>& permutation) const {
  if (permutation.size() != members_.size()) throw std::invalid_argument("permutation length must match member count");
  std::vector<int> check = permutation;
  std::sort(check.begin(), check.end());
  for (std::size_t k = 0; k < check.size(); ++k)
    if (check[k] != static_cast<int>(k)) throw std::invalid_argument("not a permutation");
  std::vector<ProductState> out(members_.size(), members_.front());
  for (std::size_t j = 0; j < members_.size(); ++j)
    out[static_cast<std::size_t>(permutation[j])] = members_[j].transformed(local_ops);
  return Upb(dims_, std::move(out));
}

CanonicalAngles CanonicalAngles::make(double a, double b, double c) {
  for (double t : {a, b, c})
    if (!std::isfinite(t) || t < boundary_tolerance || t > kPi - boundary_tolerance)
      throw std::invalid_argument("canonical angles must lie strictly inside (0, pi)");
  return {a, b, c};
}

double CanonicalAngles::max_difference(const CanonicalAngles& o) const {
  return std::max({std::abs(theta_a - o.theta_a), std::abs(theta_b - o.theta_b), std::abs(theta_c - o.theta_c)});
}

Upb build_canonical(const CanonicalAngles& angles) {
  const auto checked = CanonicalAngles::make(angles.theta_a, angles.theta_b, angles.theta_c);
  const Vector zero = basis_vector(2, 0), one = basis_vector(2, 1);
  const Vector a = qubit_state(checked.theta_a), a_perp = qubit_perp(checked.theta_a);
  const Vector b = qubit_state(checked.theta_b), b_perp = qubit_perp(checked.theta_b);
  const Vector c = qubit_state(checked.theta_c), c_perp = qubit_perp(checked.theta_c);
  return Upb({2, 2, 2}, {ProductState({zero, zero, zero}), ProductState({one, b, c}), ProductState({a, one, c_perp}),
                         ProductState({a_perp, b_perp, one})});
}

Upb shifts() {
  const double r = 1.0 / std::sqrt(2.0);
  const Vector zero = basis_vector(2, 0), one = basis_vector(2, 1);
  const Vector plus = qubit(r, r), minus = qubit(r, -r);
  return Upb({2, 2, 2}, {ProductState({zero, zero, zero}), ProductState({one, minus, plus}),
                         ProductState({plus, one, minus}), ProductState({minus, plus, one})});
}

linalg::DensityMatrix state_of(const Upb& upb) {
  const int dim = upb.ambient_dimension();
  const int rank = dim - upb.size();
  if (rank <= 0) throw std::invalid_argument("members span the whole space; no complement state");
  const Matrix m = upb.member_matrix();
  const Matrix rest = Matrix::Identity(dim, dim) - m * m.adjoint();
  return linalg::DensityMatrix(upb.dims(), linalg::hermitian_part(rest / static_cast<double>(rank)));
}

std::vector<graphs::PartyGraph> orthogonality_graphs(const Upb& upb, double tol) {
  std::vector<graphs::PartyGraph> out;
  for (int p = 0; p < upb.parties(); ++p) {
    graphs::PartyGraph g(upb.size());
    for (int i = 0; i < upb.size(); ++i)
      for (int j = i + 1; j < upb.size(); ++j)
        if (linalg::abs_overlap(upb.member(i).factor(p), upb.member(j).factor(p)) <= tol) g.add_edge(i, j);
    out.push_back(std::move(g));
  }
  return out;
}

ValidationReport validate(const Upb& upb, const search::SearchConfig& config) {
  ValidationReport r;
  r.orthonormality_error = upb.orthonormality_error();
  r.orthonormal = r.orthonormality_error <= 1e-10;
  for (const auto& m : upb.members()) r.productness_error = std::max(r.productness_error, m.productness_error());
  r.extension = search::is_extendible(upb.members(), config);
  r.unextendible = !r.extension.has_value();
  r.graphs = orthogonality_graphs(upb);
  return r;
}

ValidationReport validate(const Upb& upb) { return validate(upb, search::SearchConfig::for_dims(upb.dims())); }

namespace {

// Required orthogonal pairs, in the positions of the canonical family:
// A: (0,1) (2,3); B: (0,2) (1,3); C: (0,3) (1,2).
constexpr std::array<std::array<std::array<int, 2>, 2>, 3> kPattern{{
    {{{0, 1}, {2, 3}}},
    {{{0, 2}, {1, 3}}},
    {{{0, 3}, {1, 2}}},
}};

// Position (in canonical order) of the member whose factor for a party is the
// angle-carrying state; the companion |1> member is the partner of position 0.
constexpr std::array<int, 3> kAngleSlot{2, 1, 1};

constexpr double kStructureTol = 1e-9;

// Local unitary mapping `zero_state` to |0>, with the relative phase of
// `angle_state` removed so that its image is cos(t/2)|0> + sin(t/2)|1>.
Matrix local_frame(const Vector& zero_state, const Vector& angle_state, double& theta) {
  const Vector perp = qubit_orthogonal(zero_state);
  Matrix u(2, 2);
  u.row(0) = zero_state.adjoint();
  u.row(1) = perp.adjoint();
  const Vector img = u * angle_state;
  const double ax = std::abs(img(0)), ay = std::abs(img(1));
  theta = 2.0 * std::atan2(ay, ax);
  if (ax > 0.0 && ay > 0.0) {
    Matrix phase = Matrix::Identity(2, 2);
    phase(1, 1) = std::polar(1.0, std::arg(img(0)) - std::arg(img(1)));
    u = phase * u;
  }
  return u;
}

}  // namespace

Canonicalization canonicalize(const Upb& upb) {
  if (upb.dims() != Dims{2, 2, 2}) throw std::invalid_argument("canonicalize requires three qubits");
  if (upb.size() != 4) throw std::invalid_argument("a three-qubit UPB has exactly four members");
  if (upb.orthonormality_error() > 1e-10) throw std::invalid_argument("members are not orthonormal");

  std::array<int, 4> p{0, 1, 2, 3};
  bool boundary = false;
  do {
    bool fits = true;
    for (int party = 0; party < 3 && fits; ++party)
      for (const auto& pair : kPattern[party]) {
        const double ov = linalg::abs_overlap(upb.member(p[pair[0]]).factor(party), upb.member(p[pair[1]]).factor(party));
        if (ov > kStructureTol) {
          fits = false;
          break;
        }
      }
    if (!fits) continue;

    std::array<double, 3> theta{};
    std::vector<Matrix> unitaries;
    for (int party = 0; party < 3; ++party)
      unitaries.push_back(local_frame(upb.member(p[0]).factor(party), upb.member(p[kAngleSlot[party]]).factor(party),
                                      theta[party]));
    bool inside = true;
    for (double t : theta)
      if (t < CanonicalAngles::boundary_tolerance || t > kPi - CanonicalAngles::boundary_tolerance) inside = false;
    if (!inside) {
      boundary = true;
      continue;
    }

    Canonicalization out;
    out.angles = CanonicalAngles{theta[0], theta[1], theta[2]};
    out.witness.unitaries = std::move(unitaries);
    out.witness.permutation.assign(4, 0);
    for (int k = 0; k < 4; ++k) out.witness.permutation[p[k]] = k;
    out.witness.max_error = witness_error(out.witness, upb, build_canonical(out.angles));
    if (out.witness.max_error > 1e-7)
      throw NumericalError("canonical witness does not reproduce the input (error " +
                           std::to_string(out.witness.max_error) + ")");
    return out;
  } while (std::next_permutation(p.begin(), p.end()));

  if (boundary) throw std::invalid_argument("canonical angle lies on the boundary {0, pi}: the family is extendible");
  throw std::invalid_argument("members do not have the orthogonality structure of a three-qubit UPB");
}

double witness_error(const EquivalenceWitness& w, const Upb& from, const Upb& to) {
  if (w.permutation.size() != static_cast<std::size_t>(from.size()) || from.size() != to.size())
    throw std::invalid_argument("witness does not match the member counts");
  double err = 0.0;
  for (int j = 0; j < from.size(); ++j) {
    const Vector img = from.member(j).transformed(w.unitaries).tensor();
    err = std::max(err, linalg::phase_distance(img, to.member(w.permutation[static_cast<std::size_t>(j)]).tensor()));
  }
  return err;
}

std::optional<EquivalenceWitness> equivalent(const Upb& s, const Upb& t) {
  const auto cs = canonicalize(s);
  const auto ct = canonicalize(t);
  if (cs.angles.max_difference(ct.angles) > 1e-8) return std::nullopt;
  EquivalenceWitness w;
  for (int party = 0; party < 3; ++party)
    w.unitaries.push_back(ct.witness.unitaries[party].adjoint() * cs.witness.unitaries[party]);
  std::vector<int> inverse_t(4);
  for (int k = 0; k < 4; ++k) inverse_t[ct.witness.permutation[k]] = k;
  w.permutation.resize(4);
  for (int j = 0; j < 4; ++j) w.permutation[j] = inverse_t[cs.witness.permutation[j]];
  w.max_error = witness_error(w, s, t);
  return w;
}

double normal_form_residual(const linalg::DensityMatrix& rho) {
  double worst = 0.0;
  for (int p = 0; p < rho.parties(); ++p) {
    const Matrix m = linalg::partial_trace(rho.matrix(), rho.dims(), {p});
    const int d = rho.dims()[static_cast<std::size_t>(p)];
    worst = std::max(worst, linalg::max_abs(m - Matrix::Identity(d, d) / static_cast<double>(d)));
  }
  return worst;
}

double span_map_residual(const Matrix& x, const Upb& s, const Upb& t) {
  const Matrix pt_perp = t.complement_projector();
  double worst = 0.0;
  for (const auto& m : s.members()) {
    const Vector img = x * m.tensor();
    const double n = img.norm();
    if (n == 0.0) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, (pt_perp * img).norm() / n);
  }
  return worst;
}

double unitarity_defect(const Matrix& x) {
  const Matrix g = x.adjoint() * x;
  const double scale = g.trace().real() / static_cast<double>(g.rows());
  if (!(scale > 0.0)) return std::numeric_limits<double>::infinity();
  return linalg::max_abs(g / scale - Matrix::Identity(g.rows(), g.cols()));
}

Upb upb_from_json(const json_io::json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("UPB document must be an object");
  if (doc.contains("canonical")) {
    const auto& a = doc.at("canonical");
    if (!a.is_array() || a.size() != 3) throw std::invalid_argument("canonical shorthand needs three angles");
    for (const auto& t : a)
      if (!t.is_number()) throw std::invalid_argument("canonical angles must be numbers");
    return build_canonical(CanonicalAngles::make(a[0].get<double>(), a[1].get<double>(), a[2].get<double>()));
  }
  if (!doc.contains("dims") || !doc.contains("members")) throw std::invalid_argument("UPB document needs dims and members");
  const auto& jd = doc.at("dims");
  const auto& jm = doc.at("members");
  if (!jd.is_array() || !jm.is_array()) throw std::invalid_argument("dims and members must be arrays");
  Dims dims;
  for (const auto& d : jd) {
    if (!d.is_number_integer()) throw std::invalid_argument("dims must be integers");
    dims.push_back(d.get<int>());
  }
  std::vector<ProductState> members;
  for (const auto& member : jm) {
    if (!member.is_array() || member.size() != dims.size())
      throw std::invalid_argument("each member needs one factor per party");
    std::vector<Vector> factors;
    for (std::size_t p = 0; p < dims.size(); ++p) {
      Vector f = json_io::vector_from_json(member[p]);
      if (f.size() != dims[p]) throw std::invalid_argument("factor length does not match its party dimension");
      factors.push_back(std::move(f));
    }
    members.push_back(ProductState::normalized(std::move(factors)));
  }
  return Upb(std::move(dims), std::move(members));
}

json_io::json upb_to_json(const Upb& upb) {
  json_io::json members = json_io::json::array();
  for (const auto& m : upb.members()) {
    json_io::json factors = json_io::json::array();
    for (const auto& f : m.factors()) factors.push_back(json_io::to_json(f));
    members.push_back(std::move(factors));
  }
  return {{"dims", upb.dims()}, {"members", std::move(members)}};
}

Upb load_upb_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open UPB file: " + path);
  json_io::json doc;
  try {
    doc = json_io::json::parse(in);
  } catch (const json_io::json::parse_error& e) {
    throw std::invalid_argument("malformed UPB file " + path + ": " + e.what());
  }
  return upb_from_json(doc);
}

}  // namespace upbkit
