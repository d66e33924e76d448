#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "reachnet/game.hpp"
#include "reachnet/rng.hpp"

namespace reachnet {

// Cartesian-grid tabulated value function with multilinear interpolation.
// Queries outside the box are clamped to the boundary.
struct GridValue {
  std::vector<double> lo, hi;
  std::vector<int> res;        // nodes per axis, >= 2
  std::vector<double> data;    // row-major, last axis fastest

  int dim() const { return (int)res.size(); }
  std::size_t node_count() const;
  void allocate();
  std::vector<double> node_coord(std::size_t flat) const;
  double interp(const double* x) const;
  double& at_flat(std::size_t flat) { return data[flat]; }
};

// Finite discretization of a compact control set.
struct ControlGrid {
  int dim = 1;
  std::vector<std::vector<double>> points;
  std::size_t size() const { return points.size(); }
};

ControlGrid interval_grid(double lo, double hi, int n);         // endpoints included
ControlGrid ball_grid(int n_radii, int n_angles);               // polar product + center, dim 2

// Discretizes the control set implied by an output activation: [-1,1]^dim for
// tanh/identity (n points per axis), the unit ball for the ball map.
ControlGrid control_grid_for(OutputActivation xi, int dim, int n);

// Backward dynamic-programming value iteration on a grid:
//   V_N = phi (max'ed with g when an obstacle is present),
//   V_k(x) = max_b min_a [ G(x,a,b) v V_{k+1}(F(x,a,b)) ],
// with F and the substep max G using the spec's step scheme. Returns levels
// [0..N] with levels[k] = V_k.
std::vector<GridValue> grid_dpp_solve(const GameSpec& spec, const std::vector<double>& lo,
                                      const std::vector<double>& hi, const std::vector<int>& res,
                                      const ControlGrid& ctrl_a, const ControlGrid& ctrl_b,
                                      int workers = 1);

// Closed-form references; s is time-to-go (s = 0 recovers the terminal cost).
double analytic_example1(double s, const double* x, double c = 0.3);
double analytic_example2(double s, const double* x);
double analytic_example3(double s, const double* x, int sign);  // -1 -> inf-sup, +1 -> sup-inf
double analytic_rotation(double s, const double* x, double c = 0.2);

// Finite deterministic game instance for exhaustive verification: states are
// integers, transitions tabulated, costs per state.
struct FiniteInstance {
  int num_states = 0;
  int num_a = 0;
  int num_b = 0;
  int steps = 0;
  int x0 = 0;
  std::vector<int> trans;     // [(s * num_a + a) * num_b + b]
  std::vector<double> g, phi;

  int next(int s, int a, int b) const { return trans[(std::size_t)((s * num_a + a) * num_b + b)]; }
};

FiniteInstance random_instance(Rng& rng, int num_states, int num_a, int num_b, int steps);

struct ValueAgreement {
  double v_tree;       // inf over non-anticipative strategy trees, sup over control sequences
  double v_alternate;  // alternating max-min backward recursion
  double v_feedback;   // inf over per-step feedback maps on reachable states x B
};

// Exhaustive evaluation of the three value definitions. Throws ConfigError
// when either enumeration exceeds `budget` candidate strategies.
ValueAgreement enumerate_value_definitions(const FiniteInstance& inst, std::uint64_t budget = 10000000);

struct RateCheckResult {
  std::vector<int> n_list;
  std::vector<double> dt;
  std::vector<double> errors;  // max-node |V0^(N) - reference| over the inner region
  double slope = 0.0;          // least-squares log-log fit
};

// Empirical time-discretization order: solves the game on a grid for each N,
// compares against the `ref_n` solve, and fits the slope of error vs dt.
// `inner_lo/inner_hi` restrict the max-node error to a region away from the
// box boundary.
RateCheckResult o_tau_rate_check(const GameSpec& spec, const std::vector<int>& n_list, int ref_n,
                                 const std::vector<double>& lo, const std::vector<double>& hi,
                                 const std::vector<int>& res, const ControlGrid& ctrl_a,
                                 const ControlGrid& ctrl_b, const std::vector<double>& inner_lo,
                                 const std::vector<double>& inner_hi, int workers = 1);

}  // namespace reachnet
