#pragma once

#include <functional>
#include <string>
#include <vector>

#include "reachnet/game.hpp"

namespace reachnet {

enum class ReferenceKind { Analytic, GridDpp, None };

struct Preset {
  GameSpec spec;
  MinMaxConfig config;     // recommended training budget
  ReferenceKind reference = ReferenceKind::None;
  int net_hidden = 3;
  int net_width = 20;
  // Continuous value at time-to-go T when a closed form exists.
  std::function<double(const double*)> reference_fn;
  // Suggested oracle solve box (sampling box enlarged 20%).
  std::vector<double> oracle_lo, oracle_hi;
};

// Known names: ex1, ex1-obstacle, ex2, ex3-minmax, ex3-maxmin, ex4, rotation.
Preset preset(const std::string& name);
std::vector<std::string> preset_names();

// Example-3 dynamics carried two variants across revisions; the current one
// is (2(1-|a-b|), a+b), the legacy one clamps |a-b| instead.
GameSpec make_ex3_spec(Objective objective, bool legacy_dynamics = false);

// Separable test game for the time-discretization rate check:
// f(x,a,b) = (a - x2, b + x1), scalar controls in [-1,1], phi = |x|_2 - 1,
// no obstacle, Euler stepping.
GameSpec make_separable_spec();

}  // namespace reachnet
