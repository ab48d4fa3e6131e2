#include "upbkit/search.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "upbkit/parallel.hpp"
#include "upbkit/random.hpp"

namespace upbkit::search {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kMaxGridPoints = std::size_t{1} << 22;

// Precomputed mapping from ambient basis index to per-group sub-indices.
struct Layout {
  Dims dims;
  Dims group_dims;
  std::vector<std::vector<int>> sub_index;  // [ambient][group]

  Layout(const Dims& d, const Partition& partition) : dims(d), group_dims(partition.group_dims(d)) {
    const int n = static_cast<int>(dims.size());
    const int total = linalg::total_dim(dims);
    std::vector<int> digits(n);
    sub_index.assign(total, std::vector<int>(partition.groups.size()));
    for (int i = 0; i < total; ++i) {
      int rest = i;
      for (int p = n - 1; p >= 0; --p) {
        digits[p] = rest % dims[p];
        rest /= dims[p];
      }
      for (std::size_t g = 0; g < partition.groups.size(); ++g) {
        int sub = 0;
        for (int p : partition.groups[g]) sub = sub * dims[p] + digits[p];
        sub_index[i][g] = sub;
      }
    }
  }

  int groups() const { return static_cast<int>(group_dims.size()); }

  Vector embed(std::span<const Vector> factors) const {
    Vector out(static_cast<Eigen::Index>(sub_index.size()));
    for (std::size_t i = 0; i < sub_index.size(); ++i) {
      cplx amp = 1.0;
      for (std::size_t g = 0; g < factors.size(); ++g) amp *= factors[g](sub_index[i][g]);
      out(static_cast<Eigen::Index>(i)) = amp;
    }
    return out;
  }
};

Vector project_out(const Matrix& basis, const Vector& v) {
  if (basis.cols() == 0) return v;
  return v - basis * (basis.adjoint() * v);
}

// Generalized spherical chart: x0 = cos t1, x1 = e^{i p1} sin t1 cos t2, ...,
// x_{d-1} = e^{i p_{d-1}} sin t1 ... sin t_{d-1}.
Vector chart_vector(int d, const double* polar, const double* phase) {
  Vector x(d);
  double s = 1.0;
  for (int k = 0; k < d - 1; ++k) {
    const double mag = s * std::cos(polar[k]);
    x(k) = k == 0 ? cplx(mag) : std::polar(mag, phase[k - 1]);
    s *= std::sin(polar[k]);
  }
  x(d - 1) = d == 1 ? cplx(1.0) : std::polar(s, phase[d - 2]);
  return x;
}

struct Axis {
  int group;
  bool periodic;
  double offset;
};

struct Grid {
  std::vector<Axis> axes;
  int resolution;
  std::size_t points = 1;

  double value(std::size_t axis, int index) const {
    const auto& a = axes[axis];
    if (a.periodic) return 2.0 * kPi * (index + a.offset) / resolution;
    return (index + 0.5) * (kPi / 2.0) / resolution;
  }
};

class Searcher {
 public:
  Searcher(const Subspace& subspace, const Partition& partition, const SearchConfig& config)
      : subspace_(subspace), partition_(partition), config_(config), layout_(subspace.dims(), partition) {
    eliminated_ = 0;
    for (int g = 0; g < layout_.groups(); ++g)
      if (layout_.group_dims[g] >= layout_.group_dims[eliminated_]) eliminated_ = g;

    auto rng = random::stream(config.seed, 0x9e1d);
    grid_.resolution = config.grid;
    for (int g = 0; g < layout_.groups(); ++g) {
      if (g == eliminated_) continue;
      const int d = layout_.group_dims[g];
      for (int k = 0; k < d - 1; ++k) grid_.axes.push_back({g, false, 0.0});
      for (int k = 0; k < d - 1; ++k) grid_.axes.push_back({g, true, random::uniform(0.0, 1.0, rng)});
    }
    for (std::size_t a = 0; a < grid_.axes.size(); ++a) {
      grid_.points *= static_cast<std::size_t>(grid_.resolution);
      if (grid_.points > kMaxGridPoints)
        throw std::invalid_argument("product-vector search grid is too large for this partition");
    }
  }

  std::vector<ProductVectorHit> run(std::span<const ProductVectorHit> prior) {
    std::vector<std::vector<Vector>> seeds;
    for (const auto& hit : prior) {
      if (hit.factors.size() != static_cast<std::size_t>(layout_.groups()))
        throw std::invalid_argument("prior hit does not match the partition");
      seeds.push_back(hit.factors);
    }
    if (subspace_.dimension() > 0) {
      for (std::size_t idx : grid_candidates()) seeds.push_back(seed_factors(idx));
    }

    std::vector<std::optional<ProductVectorHit>> refined(seeds.size());
    detail::parallel_for(seeds.size(), config_.threads, [&](std::size_t i) { refined[i] = refine(seeds[i]); });

    std::vector<ProductVectorHit> hits;
    for (auto& r : refined) {
      if (!r) continue;
      auto dup = std::find_if(hits.begin(), hits.end(), [&](const ProductVectorHit& h) {
        return same_product_vector(h.factors, r->factors, config_.dedup);
      });
      if (dup == hits.end())
        hits.push_back(std::move(*r));
      else if (r->residual < dup->residual)
        *dup = std::move(*r);
    }
    std::stable_sort(hits.begin(), hits.end(),
                     [](const ProductVectorHit& a, const ProductVectorHit& b) { return a.residual < b.residual; });
    return hits;
  }

 private:
  std::vector<Vector> free_factors(std::size_t index) const {
    std::vector<Vector> factors(layout_.groups());
    std::vector<double> polar, phase;
    std::size_t rest = index;
    std::vector<int> coords(grid_.axes.size());
    for (std::size_t a = grid_.axes.size(); a-- > 0;) {
      coords[a] = static_cast<int>(rest % grid_.resolution);
      rest /= grid_.resolution;
    }
    std::size_t a = 0;
    for (int g = 0; g < layout_.groups(); ++g) {
      if (g == eliminated_) continue;
      const int d = layout_.group_dims[g];
      polar.assign(d - 1, 0.0);
      phase.assign(d - 1, 0.0);
      for (int k = 0; k < d - 1; ++k, ++a) polar[k] = grid_.value(a, coords[a]);
      for (int k = 0; k < d - 1; ++k, ++a) phase[k] = grid_.value(a, coords[a]);
      factors[g] = chart_vector(d, polar.data(), phase.data());
    }
    return factors;
  }

  // Smallest eigenpair of the Gram matrix of the residual map restricted to
  // the eliminated group, with all other factors fixed.
  std::pair<double, Vector> eliminate(std::vector<Vector>& factors) const {
    const int de = layout_.group_dims[eliminated_];
    Matrix w(subspace_.ambient_dimension(), de);
    for (int k = 0; k < de; ++k) {
      factors[eliminated_] = basis_vector(de, k);
      w.col(k) = project_out(subspace_.basis(), layout_.embed(factors));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(linalg::hermitian_part(w.adjoint() * w));
    return {std::max(0.0, es.eigenvalues()(0)), es.eigenvectors().col(0)};
  }

  std::vector<Vector> seed_factors(std::size_t index) const {
    auto factors = free_factors(index);
    factors[eliminated_] = eliminate(factors).second;
    return factors;
  }

  std::vector<std::size_t> grid_candidates() const {
    std::vector<double> q(grid_.points);
    detail::parallel_for(grid_.points, config_.threads, [&](std::size_t i) {
      auto factors = free_factors(i);
      q[i] = eliminate(factors).first;
    });

    const std::size_t naxes = grid_.axes.size();
    std::vector<std::size_t> stride(naxes, 1);
    for (std::size_t a = naxes; a-- > 1;) stride[a - 1] = stride[a] * grid_.resolution;

    auto better = [&](std::size_t i, std::size_t j) { return q[i] < q[j] || (q[i] == q[j] && i < j); };

    std::vector<std::size_t> minima;
    for (std::size_t i = 0; i < grid_.points; ++i) {
      bool is_min = true;
      for (std::size_t a = 0; a < naxes && is_min; ++a) {
        const int c = static_cast<int>((i / stride[a]) % grid_.resolution);
        for (int step : {-1, 1}) {
          int nc = c + step;
          if (grid_.axes[a].periodic)
            nc = (nc + grid_.resolution) % grid_.resolution;
          else if (nc < 0 || nc >= grid_.resolution)
            continue;
          const std::size_t j = i + (static_cast<std::ptrdiff_t>(nc) - c) * static_cast<std::ptrdiff_t>(stride[a]);
          if (j != i && better(j, i)) {
            is_min = false;
            break;
          }
        }
      }
      if (is_min) minima.push_back(i);
    }
    std::sort(minima.begin(), minima.end(), better);
    if (minima.size() > static_cast<std::size_t>(config_.max_candidates)) minima.resize(config_.max_candidates);

    std::vector<std::size_t> order(grid_.points);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t best = std::min<std::size_t>(config_.refine_best, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(best), order.end(), better);

    std::set<std::size_t> seen(minima.begin(), minima.end());
    for (std::size_t k = 0; k < best; ++k)
      if (seen.insert(order[k]).second) minima.push_back(order[k]);
    return minima;
  }

  Eigen::VectorXd residual_real(const Vector& r) const {
    Eigen::VectorXd out(2 * r.size());
    out << r.real(), r.imag();
    return out;
  }

  // Damped Gauss-Newton on the product of unit spheres. Steps live in the
  // tangent space of each factor (orthogonal to it) and are retracted by
  // renormalization, so the global phase of each factor stays fixed to first order.
  std::optional<ProductVectorHit> refine(std::vector<Vector> x) const {
    const int groups = layout_.groups();
    for (auto& f : x) f.normalize();
    auto residual_of = [&](const std::vector<Vector>& f) { return project_out(subspace_.basis(), layout_.embed(f)); };

    Vector r = residual_of(x);
    double cost = r.squaredNorm();
    double lambda = 1e-3;
    const double target = std::pow(config_.tolerance * 1e-3, 2);
    int stalled = 0;

    for (int iter = 0; iter < config_.max_iterations && cost > target; ++iter) {
      std::vector<Matrix> tangents(groups);
      int params = 0;
      for (int g = 0; g < groups; ++g) {
        tangents[g] = linalg::complement_basis(x[g]);
        params += 2 * static_cast<int>(tangents[g].cols());
      }
      if (params == 0) break;

      const Eigen::Index dim = r.size();
      Eigen::MatrixXd jac(2 * dim, params);
      int col = 0;
      for (int g = 0; g < groups; ++g) {
        auto moved = x;
        for (Eigen::Index k = 0; k < tangents[g].cols(); ++k) {
          moved[g] = tangents[g].col(k);
          const Vector c = project_out(subspace_.basis(), layout_.embed(moved));
          jac.col(col).head(dim) = c.real();
          jac.col(col).tail(dim) = c.imag();
          const Vector ic = c * cplx(0.0, 1.0);
          jac.col(col + 1).head(dim) = ic.real();
          jac.col(col + 1).tail(dim) = ic.imag();
          col += 2;
        }
      }
      const Eigen::VectorXd rr = residual_real(r);
      const Eigen::MatrixXd normal = jac.transpose() * jac;
      const Eigen::VectorXd grad = jac.transpose() * rr;

      auto retract = [&](const Eigen::VectorXd& step) {
        auto next = x;
        int c = 0;
        for (int g = 0; g < groups; ++g) {
          Vector delta = Vector::Zero(tangents[g].cols());
          for (Eigen::Index k = 0; k < tangents[g].cols(); ++k, c += 2) delta(k) = cplx(step(c), step(c + 1));
          next[g] = (x[g] + tangents[g] * delta).normalized();
        }
        return next;
      };

      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(normal, Eigen::EigenvaluesOnly);
      const double lo = es.eigenvalues()(0);
      const double hi = es.eigenvalues()(params - 1);
      const bool ill_conditioned = !(lo > 0.0) || hi / lo > 1e8;

      bool accepted = false;
      std::vector<Vector> next;
      Vector next_r;
      double next_cost = cost;
      if (ill_conditioned) {
        for (double eta = 1.0; eta > 1e-12 && !accepted; eta *= 0.5) {
          next = retract(-eta * grad);
          next_r = residual_of(next);
          next_cost = next_r.squaredNorm();
          accepted = next_cost < cost;
        }
      } else {
        for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
          const Eigen::MatrixXd damped = normal + lambda * Eigen::MatrixXd::Identity(params, params);
          const Eigen::VectorXd step = -damped.ldlt().solve(grad);
          next = retract(step);
          next_r = residual_of(next);
          next_cost = next_r.squaredNorm();
          if (next_cost < cost) {
            accepted = true;
            lambda = std::max(lambda / 3.0, 1e-12);
          } else {
            lambda *= 4.0;
          }
        }
      }
      if (!accepted) break;
      stalled = (cost - next_cost < 1e-4 * cost) ? stalled + 1 : 0;
      x = std::move(next);
      r = std::move(next_r);
      cost = next_cost;
      if (stalled >= 4) break;
    }

    for (auto& f : x) f = linalg::fix_phase(f);
    ProductVectorHit hit{x, residual(x, subspace_, partition_)};
    if (!(hit.residual <= config_.tolerance)) return std::nullopt;
    return hit;
  }

  const Subspace& subspace_;
  const Partition& partition_;
  const SearchConfig& config_;
  Layout layout_;
  int eliminated_ = 0;
  Grid grid_;
};

}  // namespace

Partition Partition::each_party(int parties) {
  Partition p;
  for (int i = 0; i < parties; ++i) p.groups.push_back({i});
  return p;
}

Partition Partition::bipartite(std::vector<int> left, int parties) {
  const auto cut = linalg::PartitionCut::of(std::move(left), parties);
  Partition p;
  p.groups = {cut.left, cut.right};
  return p;
}

void Partition::check(int parties) const {
  if (groups.empty()) throw std::invalid_argument("partition has no groups");
  std::vector<int> seen;
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("partition has an empty group");
    if (!std::is_sorted(g.begin(), g.end())) throw std::invalid_argument("partition group is not sorted");
    seen.insert(seen.end(), g.begin(), g.end());
  }
  std::sort(seen.begin(), seen.end());
  if (static_cast<int>(seen.size()) != parties) throw std::invalid_argument("partition does not match party count");
  for (int i = 0; i < parties; ++i)
    if (seen[i] != i) throw std::invalid_argument("partition groups overlap or skip a party");
}

Dims Partition::group_dims(const Dims& dims) const {
  check(static_cast<int>(dims.size()));
  Dims out;
  for (const auto& g : groups) {
    int d = 1;
    for (int p : g) d *= dims[p];
    out.push_back(d);
  }
  return out;
}

Subspace::Subspace(Dims dims, Matrix basis) : dims_(std::move(dims)), basis_(std::move(basis)) {
  const int d = linalg::total_dim(dims_);
  if (basis_.rows() != d) throw std::invalid_argument("subspace basis does not match ambient dimension");
  if (basis_.cols() > 0) {
    const Matrix gram = basis_.adjoint() * basis_;
    if (linalg::max_abs(gram - Matrix::Identity(basis_.cols(), basis_.cols())) > 1e-12)
      throw std::invalid_argument("subspace basis is not orthonormal");
  }
  complement_projector_ = Matrix::Identity(d, d) - linalg::projector(basis_);
}

Subspace Subspace::spanned_by(Dims dims, const Matrix& columns) {
  return Subspace(std::move(dims), linalg::orthonormal_basis(columns));
}

Subspace Subspace::full(Dims dims) {
  const int d = linalg::total_dim(dims);
  return Subspace(std::move(dims), Matrix::Identity(d, d));
}

Subspace Subspace::complement() const {
  if (basis_.cols() == 0) return full(dims_);
  return Subspace(dims_, linalg::complement_basis(basis_));
}

SearchConfig SearchConfig::for_dims(const Dims& dims) {
  SearchConfig c;
  if (!dims.empty() && *std::max_element(dims.begin(), dims.end()) >= 3) {
    c.grid = 12;
    c.max_iterations = 40;
  }
  return c;
}

void SearchConfig::check() const {
  if (grid < 8) throw std::invalid_argument("search grid resolution must be at least 8");
  if (!(tolerance > 0.0)) throw std::invalid_argument("search tolerance must be positive");
  if (!(dedup > 0.0)) throw std::invalid_argument("dedup threshold must be positive");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be positive");
  if (max_candidates < 1 || refine_best < 0) throw std::invalid_argument("candidate limits must be positive");
}

Vector embed_product(std::span<const Vector> factors, const Partition& partition, const Dims& dims) {
  const Layout layout(dims, partition);
  if (factors.size() != partition.groups.size()) throw std::invalid_argument("one factor per group required");
  for (std::size_t g = 0; g < factors.size(); ++g)
    if (factors[g].size() != layout.group_dims[g]) throw std::invalid_argument("factor dimension mismatch");
  return layout.embed(factors);
}

double residual(std::span<const Vector> factors, const Subspace& subspace, const Partition& partition) {
  std::vector<Vector> unit(factors.begin(), factors.end());
  for (auto& f : unit) {
    const double n = f.norm();
    if (!(n > 0.0)) throw std::invalid_argument("residual: zero factor");
    f /= n;
  }
  const Vector v = embed_product(unit, partition, subspace.dims());
  return project_out(subspace.basis(), v).norm();
}

double residual(const ProductState& state, const Subspace& subspace) {
  if (state.dims() != subspace.dims()) throw std::invalid_argument("residual: dimension mismatch");
  return residual(state.factors(), subspace, Partition::each_party(state.parties()));
}

std::vector<ProductVectorHit> find_product_vectors(const Subspace& subspace, const Partition& partition,
                                                   const SearchConfig& config,
                                                   std::span<const ProductVectorHit> prior) {
  config.check();
  partition.check(static_cast<int>(subspace.dims().size()));
  Searcher searcher(subspace, partition, config);
  return searcher.run(prior);
}

std::optional<ProductVectorHit> is_extendible(std::span<const ProductState> members, const SearchConfig& config) {
  if (members.empty()) throw std::invalid_argument("is_extendible: no members");
  const Dims dims = members.front().dims();
  Matrix cols(linalg::total_dim(dims), static_cast<Eigen::Index>(members.size()));
  for (std::size_t j = 0; j < members.size(); ++j) {
    if (members[j].dims() != dims) throw std::invalid_argument("is_extendible: members have different dims");
    cols.col(static_cast<Eigen::Index>(j)) = members[j].tensor();
  }
  const Subspace complement(dims, linalg::complement_basis(cols));
  if (complement.dimension() == 0) return std::nullopt;
  auto hits = find_product_vectors(complement, Partition::each_party(static_cast<int>(dims.size())), config);
  if (hits.empty()) return std::nullopt;
  return hits.front();
}

std::optional<ProductVectorHit> is_extendible(std::span<const ProductState> members) {
  if (members.empty()) throw std::invalid_argument("is_extendible: no members");
  return is_extendible(members, SearchConfig::for_dims(members.front().dims()));
}

bool same_product_vector(std::span<const Vector> a, std::span<const Vector> b, double threshold) {
  if (a.size() != b.size()) return false;
  for (std::size_t g = 0; g < a.size(); ++g) {
    if (a[g].size() != b[g].size()) return false;
    if (linalg::abs_overlap(a[g].normalized(), b[g].normalized()) <= 1.0 - threshold) return false;
  }
  return true;
}

}  // namespace upbkit::search
