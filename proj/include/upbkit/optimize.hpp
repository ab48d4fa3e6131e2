#pragma once

#include <functional>

#include "upbkit/linalg.hpp"

namespace upbkit::optimize {

struct PatternSearchConfig {
  int budget = 5000;           // objective evaluations
  double initial_step = 0.25;
  double min_step = 1e-9;
  double expand = 2.0;
  double shrink = 0.5;
};

struct PatternSearchResult {
  RealVector x;
  double value = 0.0;
  int evaluations = 0;
};

using Objective = std::function<double(const RealVector&)>;
/// Maps an accepted point back onto the feasible set, in place.
using Projection = std::function<void(RealVector&)>;

/// Coordinate-adaptive pattern search: each coordinate keeps its own step,
/// which grows after a successful probe and shrinks after a failed one. A
/// pattern move along the last sweep's displacement follows each improving
/// sweep. Stops when every step is below min_step or the budget is spent.
PatternSearchResult pattern_search(const Objective& f, RealVector x0, const PatternSearchConfig& config,
                                   const Projection& project = {});

}  // namespace upbkit::optimize
