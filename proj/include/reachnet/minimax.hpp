#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reachnet/autodiff.hpp"
#include "reachnet/rng.hpp"

namespace reachnet {

enum class MinMaxAlgorithm { Sgda, Agda, GammaGda, Pote, Poteb };
enum class OptimizerKind { Adam, SgLinearDecay };

MinMaxAlgorithm parse_algorithm(const std::string& s);
OptimizerKind parse_optimizer(const std::string& s);
std::string to_string(MinMaxAlgorithm a);
std::string to_string(OptimizerKind k);

struct MinMaxConfig {
  MinMaxAlgorithm algorithm = MinMaxAlgorithm::Pote;
  OptimizerKind optimizer = OptimizerKind::Adam;
  int m_epoch = 500;
  int m_epoch_pote = 5;  // q, inner iterations
  int n_batch = 1000;
  double eta = 2e-3;  // outer initial rate
  double rho = 2e-3;  // inner initial rate
  double gamma = 2.0; // gamma-GDA timescale ratio, > 1
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
  double sg_floor = 1e-5;   // linear-decay terminal rate
  double eta2_margin = 1e-2;  // post-training ascent-improvement certificate
  int workers = 1;

  void validate() const;
};

// Stochastic saddle objective: one call evaluates the mini-batch mean and, if
// grads != nullptr, accumulates gradients for every parameter group. `noise`
// selects the fresh mini-batch.
struct SaddleOracle {
  virtual ~SaddleOracle() = default;
  virtual double eval(std::uint64_t noise, GradBuffer* grads) = 0;
  long evals = 0;
};

// A player side: the parameter groups it owns and the update direction.
struct Side {
  std::vector<int> groups;
  bool ascend = false;
};

struct AdamState {
  std::vector<std::vector<double>> m, v;
  long t = 0;
  void init(const ParamSet& ps);
};

// Per-side optimizer. Adam keeps bias-corrected first/second moments; the SG
// variant applies the rate as given (schedules are the caller's job).
class Updater {
 public:
  Updater() = default;
  Updater(OptimizerKind kind, const MinMaxConfig& cfg, const ParamSet& ps);
  void apply(ParamSet& ps, const GradBuffer& g, const Side& side, double rate);

 private:
  OptimizerKind kind_ = OptimizerKind::Adam;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  AdamState adam_;
};

// Standard bias-corrected Adam update of one flat parameter vector.
void adam_update(std::vector<double>& m, std::vector<double>& v, long t, std::vector<double>& params,
                 const std::vector<double>& grads, double rate, bool ascend, double beta1,
                 double beta2, double eps);

struct StepLosses {
  double outer = 0.0;
  double inner = 0.0;
};

// One simultaneous descent/ascent step, shared mini-batch.
StepLosses sgda_step(ParamSet& ps, SaddleOracle& oracle, const Side& x, const Side& y, Updater& ux,
                     Updater& uy, double eta_x, double eta_y, std::uint64_t noise,
                     GradBuffer& scratch);

// Alternating step: x first, then y evaluated at the updated x, independent
// mini-batches.
StepLosses agda_step(ParamSet& ps, SaddleOracle& oracle, const Side& x, const Side& y, Updater& ux,
                     Updater& uy, double eta_x, double eta_y, std::uint64_t noise_x,
                     std::uint64_t noise_y, GradBuffer& scratch);

// Simultaneous step with the x rate divided by gamma.
StepLosses gamma_gda_step(ParamSet& ps, SaddleOracle& oracle, const Side& x, const Side& y,
                          Updater& ux, Updater& uy, double eta, double gamma, std::uint64_t noise,
                          GradBuffer& scratch);

// Potential-reduction outer iteration: q inner steps on y (fresh noise each),
// then one outer step on x at the updated y (fresh noise).
StepLosses pote_outer(ParamSet& ps, SaddleOracle& oracle, const Side& x, const Side& y, Updater& ux,
                      Updater& uy, int q, double eta, double rho, Rng& noise, GradBuffer& scratch);

// Saddle objective whose inner ascent is expressible on the tape, so the
// unrolled loop can be differentiated end to end with respect to x.
struct UnrolledSaddle {
  virtual ~UnrolledSaddle() = default;
  virtual Val build_value(Tape& t, Val x, Val y, std::uint64_t noise) = 0;
  virtual Val build_grad_y(Tape& t, Val x, Val y, std::uint64_t noise) = 0;
  long value_builds = 0;
  long grad_builds = 0;
};

// One POTEB iteration on plain vectors: unrolls q ascent steps y^{k+1} =
// y^k + rho grad_y, differentiates f(x, y^q) through the unrolled graph with
// respect to x, applies a descent step on x, and replaces y by y^q.
// Returns f(x, y^q) before the x update. q is capped at 50 to bound the tape.
double poteb_step(std::vector<double>& x, std::vector<double>& y, UnrolledSaddle& oracle, int q,
                  double rho, double eta, const std::vector<std::uint64_t>& inner_noise,
                  std::uint64_t outer_noise, std::vector<double>* grad_x_out = nullptr);

struct RotationBenchResult {
  int successes = 0;
  std::vector<double> errors;  // final banded L1 error per run
};

// Trains the rotation game (no obstacle) `runs` times with the given
// algorithm/optimizer and counts runs whose banded L1 error against the
// closed-form solution stays within `threshold`.
RotationBenchResult rotation_benchmark(MinMaxAlgorithm algo, OptimizerKind opt, int runs,
                                       std::uint64_t seed_base, double threshold = 0.1,
                                       int workers = 1);

}  // namespace reachnet
