#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "reachnet/dynamics.hpp"
#include "reachnet/minimax.hpp"
#include "reachnet/nn.hpp"

namespace reachnet {

// Which optimization problem the strategies solve: MinMax is the usual
// inf_alpha sup_b value, MaxMin swaps the players' goals (sup_alpha inf_b).
enum class Objective { MinMax, MaxMin };

// Which scheme drives training: Global optimizes all time steps jointly,
// Local marches backward one step at a time, Reversed puts the adverse
// control outside (sup_b inf_a with state-only a networks).
enum class SchemeMode { Global, Local, Reversed };

SchemeMode parse_mode(const std::string& s);
std::string to_string(SchemeMode m);

struct GameSpec {
  std::string name;
  Dynamics dyn;
  StateCost phi;       // terminal cost
  StateCost obstacle;  // g; an absent raw/build pair means no obstacle
  double horizon = 1.0;
  int steps = 1;  // N
  StepScheme scheme;
  std::vector<double> omega_lo, omega_hi;  // sampling box
  OutputActivation xi_a = OutputActivation::Tanh;
  OutputActivation xi_b = OutputActivation::Tanh;
  Objective objective = Objective::MinMax;

  double dt() const { return horizon / steps; }
  bool has_obstacle() const { return obstacle.present(); }
  void validate() const;
};

// Per-time-step strategy networks alpha_k and adverse networks b_k, bound to
// groups of one ParamSet (alpha_0..alpha_{N-1}, then b_0..b_{N-1}).
struct StrategyPair {
  std::vector<Network> alpha, b;
  bool alpha_state_only = false;  // reversed mode: a = a(x)

  int steps() const { return (int)alpha.size(); }
  std::vector<int> alpha_groups() const;
  std::vector<int> b_groups() const;
};

// Fresh Glorot-initialized strategies; network k's weights depend only on
// (seed, k), so the local scheme's stage n reproduces the global scheme's
// step-n networks.
StrategyPair make_strategies(const GameSpec& spec, int hidden_layers, int width,
                             std::uint64_t seed, ParamSet& ps, bool alpha_state_only = false);

struct Rollout {
  std::vector<std::vector<double>> states;  // x_0..x_N
  std::vector<std::vector<double>> ctrl_a, ctrl_b;
  std::vector<double> substep_max;  // G per step when an obstacle is present
  double cost = 0.0;
};

// Builds the rollout cost from step `from_step` to N on the tape:
// (max_k G(x_k,a_k,b_k)) v terminal(x_N), with terminal = phi for the global
// functional and phi v g for the local scheme's V_N.
Val build_rollout_cost(Tape& t, const GameSpec& spec, const StrategyPair& sp, const ParamSet& ps,
                       Val x0, int from_step, bool terminal_includes_g);

Rollout rollout(const GameSpec& spec, const StrategyPair& sp, const ParamSet& ps,
                const std::vector<double>& x);

// Mini-batch mean of the rollout cost; optional gradient accumulation. The
// batch must come from uniform sampling on Omega (see sample_batch).
double batch_cost(const GameSpec& spec, const StrategyPair& sp, const ParamSet& ps,
                  const std::vector<std::vector<double>>& batch, GradBuffer* grads = nullptr,
                  int workers = 1);

std::vector<std::vector<double>> sample_batch(const GameSpec& spec, int n, Rng& rng);

// Plug-in value estimate: the rollout cost from x (total; no domain clamp).
double value_estimate(const GameSpec& spec, const StrategyPair& sp, const ParamSet& ps,
                      const std::vector<double>& x);

struct TraceRow {
  int epoch = 0;
  double outer_loss = 0.0;
  double inner_loss = 0.0;
  double wall_s = 0.0;
};

struct TrainResult {
  StrategyPair strategies;
  ParamSet params;
  std::vector<TraceRow> trace;
};

// Algorithm 1: one joint min-max optimization of the full-horizon functional.
TrainResult algorithm1_global(const GameSpec& spec, const MinMaxConfig& cfg, std::uint64_t seed,
                              int hidden_layers = 3, int width = 20);

// Algorithm 2: backward time marching; stage n trains (alpha_n, b_n) against
// the re-simulated suffix (only strategies are stored, never values).
TrainResult algorithm2_local(const GameSpec& spec, const MinMaxConfig& cfg, std::uint64_t seed,
                             int hidden_layers = 3, int width = 20);

// Reversed formulation sup_b inf_alpha with a = a(x): the outer loop ascends
// on b, the inner loop descends on alpha.
TrainResult reversed_supinf(const GameSpec& spec, const MinMaxConfig& cfg, std::uint64_t seed,
                            int hidden_layers = 3, int width = 20);

// Post-training certificate: improvement of the outer objective obtainable by
// q fresh inner ascent steps on b, measured on a fixed evaluation batch.
double eta_certificate(const GameSpec& spec, const TrainResult& result, const MinMaxConfig& cfg,
                       std::uint64_t seed, int eval_batch = 2000);

struct McEquivalenceReport {
  double pointwise_expectation = 0.0;  // E[min_a max_b Q(X,a,b)] by quadrature
  double feedback_value = 0.0;         // min-max over tabulated feedback controls of the sample mean
  double gap = 0.0;
  double standard_error = 0.0;
  bool pass = false;  // gap <= 3 standard errors
};

// Monte-Carlo check that optimizing tabulated feedback controls of the sample
// mean reproduces the expectation of the pointwise min-max value. Q is
// evaluated by brute force over the control grids on each sample.
McEquivalenceReport mc_expectation_equivalence_test(
    const std::function<double(double, double, double)>& q, double x_lo, double x_hi,
    const std::vector<double>& a_grid, const std::vector<double>& b_grid, int samples,
    std::uint64_t seed, bool point_mass = false);

// Weight persistence: one file per network, alpha_<k>.w / b_<k>.w under dir.
void save_strategies(const std::string& dir, const StrategyPair& sp, const ParamSet& ps);
// Rebuilds the pair from files; throws ArtifactError on missing/corrupt files.
StrategyPair load_strategies(const std::string& dir, int steps, bool alpha_state_only,
                             ParamSet& ps);

}  // namespace reachnet
