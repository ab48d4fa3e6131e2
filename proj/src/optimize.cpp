#include "upbkit/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace upbkit::optimize {

PatternSearchResult pattern_search(const Objective& f, RealVector x0, const PatternSearchConfig& config,
                                   const Projection& project) {
  if (config.budget < 1) throw std::invalid_argument("pattern search budget must be positive");
  if (!(config.initial_step > 0.0) || !(config.min_step > 0.0) || !(config.expand >= 1.0) ||
      !(config.shrink > 0.0 && config.shrink < 1.0))
    throw std::invalid_argument("invalid pattern search step schedule");

  PatternSearchResult r;
  if (project) project(x0);
  r.x = std::move(x0);
  r.value = f(r.x);
  r.evaluations = 1;
  const Eigen::Index n = r.x.size();
  RealVector step = RealVector::Constant(n, config.initial_step);

  auto accept = [&](RealVector& trial) {
    if (project) project(trial);
    const double v = f(trial);
    ++r.evaluations;
    if (v < r.value) {
      r.value = v;
      r.x = trial;
      return true;
    }
    return false;
  };

  while (r.evaluations < config.budget && step.maxCoeff() >= config.min_step) {
    const RealVector start = r.x;
    bool improved = false;
    for (Eigen::Index i = 0; i < n && r.evaluations < config.budget; ++i) {
      if (step(i) < config.min_step) continue;
      bool moved = false;
      for (double sign : {1.0, -1.0}) {
        if (r.evaluations >= config.budget) break;
        RealVector trial = r.x;
        trial(i) += sign * step(i);
        if (accept(trial)) {
          moved = true;
          break;
        }
      }
      step(i) = moved ? std::min(step(i) * config.expand, 8.0 * config.initial_step) : step(i) * config.shrink;
      improved = improved || moved;
    }
    if (improved && r.evaluations < config.budget) {
      RealVector trial = r.x + (r.x - start);
      accept(trial);
    }
  }
  return r;
}

}  // namespace upbkit::optimize
