#include "reachnet/game.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <thread>

#include "reachnet/common.hpp"

namespace reachnet {

namespace {
// Substream tags for the per-run seed.
constexpr std::uint64_t kInitAlphaTag = 0xA1FA0000ULL;
constexpr std::uint64_t kInitBTag = 0xB0000000ULL;
constexpr std::uint64_t kTrainTag = 0x71210000ULL;
constexpr std::uint64_t kCertTag = 0xCE170000ULL;

constexpr double kBlowupLimit = 1e6;

double batch_cost_range(const GameSpec& spec, const StrategyPair& sp, const ParamSet& ps,
                        const std::vector<std::vector<double>>& batch, int from_step,
                        bool terminal_includes_g, GradBuffer* grads, int workers);
}  // namespace

SchemeMode parse_mode(const std::string& s) {
  if (s == "global") return SchemeMode::Global;
  if (s == "local") return SchemeMode::Local;
  if (s == "reversed") return SchemeMode::Reversed;
  throw ConfigError("unknown mode: " + s);
}

std::string to_string(SchemeMode m) {
  switch (m) {
    case SchemeMode::Global: return "global";
    case SchemeMode::Local: return "local";
    case SchemeMode::Reversed: return "reversed";
  }
  return "?";
}

void GameSpec::validate() const {
  if (steps < 1) throw ConfigError("game needs steps >= 1");
  if (!(horizon > 0.0)) throw ConfigError("game needs a positive horizon");
  if (omega_lo.size() != (std::size_t)dyn.dim || omega_hi.size() != (std::size_t)dyn.dim)
    throw ConfigError("sampling box dimension mismatch");
  for (std::size_t i = 0; i < omega_lo.size(); ++i)
    if (!(omega_lo[i] < omega_hi[i])) throw ConfigError("sampling box is empty");
  if (!dyn.build || !dyn.raw || !phi.build || !phi.raw)
    throw ConfigError("game needs dynamics and terminal cost");
}

std::vector<int> StrategyPair::alpha_groups() const {
  std::vector<int> g;
  for (const Network& n : alpha) g.push_back(n.group());
  return g;
}

std::vector<int> StrategyPair::b_groups() const {
  std::vector<int> g;
  for (const Network& n : b) g.push_back(n.group());
  return g;
}

StrategyPair make_strategies(const GameSpec& spec, int hidden_layers, int width,
                             std::uint64_t seed, ParamSet& ps, bool alpha_state_only) {
  StrategyPair sp;
  sp.alpha_state_only = alpha_state_only;
  Rng root(seed);
  const int d = spec.dyn.dim;
  const int in_a = alpha_state_only ? d : d + spec.dyn.dim_b;
  ps.clear();
  for (int k = 0; k < spec.steps; ++k) {
    Network net(in_a, spec.dyn.dim_a, hidden_layers, width, spec.xi_a);
    net.bind((int)ps.size());
    ps.push_back(Network::init_params(net, "alpha_" + std::to_string(k),
                                      root.substream(kInitAlphaTag + (std::uint64_t)k).next_u64()));
    sp.alpha.push_back(net);
  }
  for (int k = 0; k < spec.steps; ++k) {
    Network net(d, spec.dyn.dim_b, hidden_layers, width, spec.xi_b);
    net.bind((int)ps.size());
    ps.push_back(Network::init_params(net, "b_" + std::to_string(k),
                                      root.substream(kInitBTag + (std::uint64_t)k).next_u64()));
    sp.b.push_back(net);
  }
  return sp;
}

namespace {
struct RolloutCapture {
  std::vector<Val> states, ctrl_a, ctrl_b, gmax;
};

Val build_cost_impl(Tape& t, const GameSpec& spec, const StrategyPair& sp, const ParamSet& ps,
                    Val x0, int from_step, bool terminal_includes_g, RolloutCapture* cap) {
  const double dt = spec.dt();
  Val x = x0;
  Val running{};
  if (cap) cap->states.push_back(x);
  for (int k = from_step; k < spec.steps; ++k) {
    Val b_out = sp.b[(std::size_t)k].forward(t, ps, x);
    Val a_in = sp.alpha_state_only ? x : t.concat(x, b_out);
    Val a_out = sp.alpha[(std::size_t)k].forward(t, ps, a_in);
    if (cap) {
      cap->ctrl_a.push_back(a_out);
      cap->ctrl_b.push_back(b_out);
    }
    if (spec.has_obstacle()) {
      Val g = substep_max(t, spec.dyn, spec.scheme, spec.obstacle, x, a_out, b_out, dt);
      if (cap) cap->gmax.push_back(g);
      running = running.valid() ? t.max2(running, g) : g;
    }
    x = multi_step(t, spec.dyn, spec.scheme, x, a_out, b_out, dt);
    for (double c : t.value(x))
      if (!std::isfinite(c) || std::fabs(c) > kBlowupLimit)
        throw NumericError("rollout blow-up at step " + std::to_string(k));
    if (cap) cap->states.push_back(x);
  }
  Val term = spec.phi.build(t, x);
  if (terminal_includes_g && spec.has_obstacle())
    term = t.max2(term, spec.obstacle.build(t, x));
  return running.valid() ? t.max2(running, term) : term;
}
}  // namespace

Val build_rollout_cost(Tape& t, const GameSpec& spec, const StrategyPair& sp, const ParamSet& ps,
                       Val x0, int from_step, bool terminal_includes_g) {
  return build_cost_impl(t, spec, sp, ps, x0, from_step, terminal_includes_g, nullptr);
}

Rollout rollout(const GameSpec& spec, const StrategyPair& sp, const ParamSet& ps,
                const std::vector<double>& x) {
  if ((int)x.size() != spec.dyn.dim) throw ConfigError("rollout: state dimension mismatch");
  Tape t;
  RolloutCapture cap;
  Val x0 = t.input(x);
  Val cost = build_cost_impl(t, spec, sp, ps, x0, 0, false, &cap);
  Rollout r;
  r.cost = t.scalar(cost);
  for (Val v : cap.states) r.states.emplace_back(t.value(v).begin(), t.value(v).end());
  for (Val v : cap.ctrl_a) r.ctrl_a.emplace_back(t.value(v).begin(), t.value(v).end());
  for (Val v : cap.ctrl_b) r.ctrl_b.emplace_back(t.value(v).begin(), t.value(v).end());
  for (Val v : cap.gmax) r.substep_max.push_back(t.scalar(v));
  return r;
}

std::vector<std::vector<double>> sample_batch(const GameSpec& spec, int n, Rng& rng) {
  std::vector<std::vector<double>> batch((std::size_t)n);
  for (auto& x : batch) {
    x.resize((std::size_t)spec.dyn.dim);
    for (int i = 0; i < spec.dyn.dim; ++i)
      x[(std::size_t)i] = rng.uniform(spec.omega_lo[(std::size_t)i], spec.omega_hi[(std::size_t)i]);
  }
  return batch;
}

double batch_cost(const GameSpec& spec, const StrategyPair& sp, const ParamSet& ps,
                  const std::vector<std::vector<double>>& batch, GradBuffer* grads, int workers) {
  return batch_cost_range(spec, sp, ps, batch, 0, false, grads, workers);
}

namespace {
// Shared batched evaluator; from_step/terminal flags serve the local scheme.
double batch_cost_range(const GameSpec& spec, const StrategyPair& sp, const ParamSet& ps,
                        const std::vector<std::vector<double>>& batch, int from_step,
                        bool terminal_includes_g, GradBuffer* grads, int workers) {
  if (batch.empty()) throw ConfigError("batch_cost: empty batch");
  const double w = 1.0 / (double)batch.size();
  const int nw = std::max(1, std::min<int>(workers, (int)batch.size()));

  std::vector<double> partial((std::size_t)nw, 0.0);
  std::vector<GradBuffer> bufs((std::size_t)nw);
  std::vector<std::exception_ptr> errors((std::size_t)nw);

  auto run_range = [&](int wi, std::size_t b, std::size_t e) {
    try {
      if (grads) bufs[(std::size_t)wi].init(ps);
      Tape t(grads ? &bufs[(std::size_t)wi] : nullptr);
      double acc = 0.0;
      for (std::size_t i = b; i < e; ++i) {
        t.clear();
        Val x0 = t.input(batch[i]);
        Val cost = build_cost_impl(t, spec, sp, ps, x0, from_step, terminal_includes_g, nullptr);
        acc += t.scalar(cost);
        if (grads) t.backward(cost, w);
      }
      partial[(std::size_t)wi] = acc;
    } catch (...) {
      errors[(std::size_t)wi] = std::current_exception();
    }
  };

  if (nw == 1) {
    run_range(0, 0, batch.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (batch.size() + (std::size_t)nw - 1) / (std::size_t)nw;
    for (int wi = 0; wi < nw; ++wi) {
      const std::size_t b = (std::size_t)wi * chunk;
      if (b >= batch.size()) break;
      pool.emplace_back(run_range, wi, b, std::min(batch.size(), b + chunk));
    }
    for (auto& th : pool) th.join();
  }
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);

  double loss = 0.0;
  for (double p : partial) loss += p;  // fixed reduction order
  loss *= w;
  if (grads)
    for (auto& buf : bufs) grads->add(buf);
  return loss;
}
}  // namespace

double value_estimate(const GameSpec& spec, const StrategyPair& sp, const ParamSet& ps,
                      const std::vector<double>& x) {
  Tape t;
  Val x0 = t.input(x);
  Val cost = build_cost_impl(t, spec, sp, ps, x0, 0, false, nullptr);
  return t.scalar(cost);
}

namespace {

// Mini-batch saddle objective on rollout costs. The noise seed drives fresh
// uniform sampling on Omega for every evaluation.
class GameObjective : public SaddleOracle {
 public:
  GameObjective(const GameSpec& spec, const StrategyPair& sp, const ParamSet& ps, int n_batch,
                int workers, int from_step, bool terminal_includes_g)
      : spec_(spec), sp_(sp), ps_(ps), n_batch_(n_batch), workers_(workers),
        from_step_(from_step), terminal_includes_g_(terminal_includes_g) {}

  double eval(std::uint64_t noise, GradBuffer* grads) override {
    ++evals;
    Rng rng(noise);
    const auto batch = sample_batch(spec_, n_batch_, rng);
    return batch_cost_range(spec_, sp_, ps_, batch, from_step_, terminal_includes_g_, grads,
                            workers_);
  }

 private:
  const GameSpec& spec_;
  const StrategyPair& sp_;
  const ParamSet& ps_;
  int n_batch_, workers_, from_step_;
  bool terminal_includes_g_;
};

double scheduled_rate(double r0, int i, int m_epoch, OptimizerKind kind, double floor) {
  if (kind == OptimizerKind::Adam || m_epoch <= 1) return r0;
  return r0 + (floor - r0) * (double)i / (double)(m_epoch - 1);
}

// Shared epoch loop for all three schemes. `outer` descends unless its
// ascend flag is set; POTE's inner loop runs on `inner`.
void run_epochs(const GameSpec& spec, GameObjective& obj, ParamSet& ps, const Side& outer,
                const Side& inner, const MinMaxConfig& cfg, Rng train,
                std::vector<TraceRow>& trace, int epoch_offset,
                std::chrono::steady_clock::time_point t0) {
  Updater u_outer(cfg.optimizer, cfg, ps);
  Updater u_inner(cfg.optimizer, cfg, ps);
  GradBuffer scratch;
  scratch.init(ps);

  for (int i = 0; i < cfg.m_epoch; ++i) {
    const double eta_i = scheduled_rate(cfg.eta, i, cfg.m_epoch, cfg.optimizer, cfg.sg_floor);
    const double rho_i = scheduled_rate(cfg.rho, i, cfg.m_epoch, cfg.optimizer, cfg.sg_floor);
    StepLosses losses;
    try {
      switch (cfg.algorithm) {
        case MinMaxAlgorithm::Pote:
          losses = pote_outer(ps, obj, outer, inner, u_outer, u_inner, cfg.m_epoch_pote, eta_i,
                              rho_i, train, scratch);
          break;
        case MinMaxAlgorithm::Sgda:
          losses = sgda_step(ps, obj, outer, inner, u_outer, u_inner, eta_i, eta_i,
                             train.next_u64(), scratch);
          break;
        case MinMaxAlgorithm::GammaGda:
          losses = gamma_gda_step(ps, obj, outer, inner, u_outer, u_inner, eta_i, cfg.gamma,
                                  train.next_u64(), scratch);
          break;
        case MinMaxAlgorithm::Agda: {
          const std::uint64_t nx = train.next_u64();
          const std::uint64_t ny = train.next_u64();
          losses = agda_step(ps, obj, outer, inner, u_outer, u_inner, eta_i, eta_i, nx, ny,
                             scratch);
          break;
        }
        case MinMaxAlgorithm::Poteb:
          throw ConfigError("poteb needs a traceable inner gradient; not available for rollouts");
      }
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(i) + ")");
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    trace.push_back({epoch_offset + i, losses.outer, losses.inner, wall});
  }
}

}  // namespace

TrainResult algorithm1_global(const GameSpec& spec, const MinMaxConfig& cfg, std::uint64_t seed,
                              int hidden_layers, int width) {
  spec.validate();
  cfg.validate();
  TrainResult r;
  r.strategies = make_strategies(spec, hidden_layers, width, seed, r.params);
  GameObjective obj(spec, r.strategies, r.params, cfg.n_batch, cfg.workers, 0, false);
  const bool maxmin = spec.objective == Objective::MaxMin;
  Side outer{r.strategies.alpha_groups(), /*ascend=*/maxmin};
  Side inner{r.strategies.b_groups(), /*ascend=*/!maxmin};
  const auto t0 = std::chrono::steady_clock::now();
  run_epochs(spec, obj, r.params, outer, inner, cfg, Rng(seed).substream(kTrainTag), r.trace, 0,
             t0);
  return r;
}

TrainResult algorithm2_local(const GameSpec& spec, const MinMaxConfig& cfg, std::uint64_t seed,
                             int hidden_layers, int width) {
  spec.validate();
  cfg.validate();
  TrainResult r;
  r.strategies = make_strategies(spec, hidden_layers, width, seed, r.params);
  const bool maxmin = spec.objective == Objective::MaxMin;
  const auto t0 = std::chrono::steady_clock::now();
  for (int n = spec.steps - 1; n >= 0; --n) {
    GameObjective obj(spec, r.strategies, r.params, cfg.n_batch, cfg.workers, n, true);
    Side outer{{r.strategies.alpha[(std::size_t)n].group()}, maxmin};
    Side inner{{r.strategies.b[(std::size_t)n].group()}, !maxmin};
    run_epochs(spec, obj, r.params, outer, inner, cfg, Rng(seed).substream(kTrainTag + (std::uint64_t)n),
               r.trace, (spec.steps - 1 - n) * cfg.m_epoch, t0);
  }
  return r;
}

TrainResult reversed_supinf(const GameSpec& spec, const MinMaxConfig& cfg, std::uint64_t seed,
                            int hidden_layers, int width) {
  spec.validate();
  cfg.validate();
  TrainResult r;
  r.strategies = make_strategies(spec, hidden_layers, width, seed, r.params,
                                 /*alpha_state_only=*/true);
  GameObjective obj(spec, r.strategies, r.params, cfg.n_batch, cfg.workers, 0, false);
  // sup over b outside, inf over state-only a inside
  Side outer{r.strategies.b_groups(), /*ascend=*/true};
  Side inner{r.strategies.alpha_groups(), /*ascend=*/false};
  const auto t0 = std::chrono::steady_clock::now();
  run_epochs(spec, obj, r.params, outer, inner, cfg, Rng(seed).substream(kTrainTag), r.trace, 0,
             t0);
  return r;
}

double eta_certificate(const GameSpec& spec, const TrainResult& result, const MinMaxConfig& cfg,
                       std::uint64_t seed, int eval_batch) {
  ParamSet ps = result.params;
  Rng eval_rng = Rng(seed).substream(kCertTag);
  const auto fixed = sample_batch(spec, eval_batch, eval_rng);
  const double before = batch_cost(spec, result.strategies, ps, fixed, nullptr, cfg.workers);

  GameObjective obj(spec, result.strategies, ps, cfg.n_batch, cfg.workers, 0, false);
  const bool maxmin = spec.objective == Objective::MaxMin;
  Side inner{result.strategies.b_groups(), !maxmin};
  Updater u(cfg.optimizer, cfg, ps);
  GradBuffer scratch;
  scratch.init(ps);
  Rng noise = Rng(seed).substream(kCertTag + 1);
  for (int k = 0; k < cfg.m_epoch_pote; ++k) {
    scratch.zero();
    obj.eval(noise.next_u64(), &scratch);
    u.apply(ps, scratch, inner, cfg.rho);
  }
  const double after = batch_cost(spec, result.strategies, ps, fixed, nullptr, cfg.workers);
  return maxmin ? before - after : after - before;
}

namespace {
// Mean that is exact on constant arrays (a point-mass sample must reproduce
// the single value bit for bit).
double exact_mean(const std::vector<double>& v) {
  bool same = true;
  for (double x : v)
    if (x != v[0]) {
      same = false;
      break;
    }
  if (same) return v[0];
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / (double)v.size();
}
}  // namespace

McEquivalenceReport mc_expectation_equivalence_test(
    const std::function<double(double, double, double)>& q, double x_lo, double x_hi,
    const std::vector<double>& a_grid, const std::vector<double>& b_grid, int samples,
    std::uint64_t seed, bool point_mass) {
  if (a_grid.empty() || b_grid.empty()) throw ConfigError("mc test: empty control grid");
  // pointwise brute force over the control grids: sup_b inf_a
  auto pointwise = [&](double x) {
    double best_b = -1e300;
    for (double b : b_grid) {
      double best_a = 1e300;
      for (double a : a_grid) best_a = std::min(best_a, q(x, a, b));
      best_b = std::max(best_b, best_a);
    }
    return best_b;
  };

  McEquivalenceReport rep;
  if (point_mass) x_hi = x_lo;

  // Expectation of the pointwise value (midpoint quadrature; exact for a
  // point mass).
  if (x_lo == x_hi) {
    rep.pointwise_expectation = pointwise(x_lo);
  } else {
    const int quad = 20000;
    std::vector<double> vals((std::size_t)quad);
    for (int i = 0; i < quad; ++i)
      vals[(std::size_t)i] = pointwise(x_lo + (x_hi - x_lo) * (i + 0.5) / quad);
    rep.pointwise_expectation = exact_mean(vals);
  }

  // Feedback-table route on the sample: build the per-sample best-response
  // tables explicitly and evaluate the mean at those tables.
  Rng rng(seed);
  std::vector<double> xs((std::size_t)samples);
  for (double& x : xs) x = x_lo == x_hi ? x_lo : rng.uniform(x_lo, x_hi);

  std::vector<double> table_vals((std::size_t)samples);
  for (int i = 0; i < samples; ++i) {
    const double x = xs[(std::size_t)i];
    // alpha-table column: best response a*(x, b) for every b
    // b-table entry: argmax_b of the resulting inf
    double best_b_val = -1e300;
    double bv = b_grid[0];
    for (double b : b_grid) {
      double best_a_val = 1e300;
      for (double a : a_grid) best_a_val = std::min(best_a_val, q(x, a, b));
      if (best_a_val > best_b_val) {
        best_b_val = best_a_val;
        bv = b;
      }
    }
    // evaluate the tables: a = argmin_a q(x, ., bv), b = bv
    double av = a_grid[0];
    double best = 1e300;
    for (double a : a_grid)
      if (q(x, a, bv) < best) {
        best = q(x, a, bv);
        av = a;
      }
    table_vals[(std::size_t)i] = q(x, av, bv);
  }
  rep.feedback_value = x_lo == x_hi && samples > 0 ? table_vals[0] : exact_mean(table_vals);

  const double mean = rep.feedback_value;
  double var = 0.0;
  for (double v : table_vals) var += (v - mean) * (v - mean);
  var = samples > 1 ? var / (double)(samples - 1) : 0.0;
  rep.standard_error = std::sqrt(var / (double)samples);
  rep.gap = std::fabs(rep.pointwise_expectation - rep.feedback_value);
  rep.pass = rep.gap <= 3.0 * rep.standard_error || rep.gap == 0.0;
  return rep;
}

void save_strategies(const std::string& dir, const StrategyPair& sp, const ParamSet& ps) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (std::size_t k = 0; k < sp.alpha.size(); ++k) {
    std::ofstream os(fs::path(dir) / ("alpha_" + std::to_string(k) + ".w"), std::ios::binary);
    if (!os) throw ArtifactError("cannot write weights in " + dir);
    sp.alpha[k].save(os, ps);
  }
  for (std::size_t k = 0; k < sp.b.size(); ++k) {
    std::ofstream os(fs::path(dir) / ("b_" + std::to_string(k) + ".w"), std::ios::binary);
    if (!os) throw ArtifactError("cannot write weights in " + dir);
    sp.b[k].save(os, ps);
  }
}

StrategyPair load_strategies(const std::string& dir, int steps, bool alpha_state_only,
                             ParamSet& ps) {
  namespace fs = std::filesystem;
  StrategyPair sp;
  sp.alpha_state_only = alpha_state_only;
  ps.clear();
  auto load_one = [&](const std::string& stem) {
    const fs::path path = fs::path(dir) / (stem + ".w");
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ArtifactError("missing weight file: " + path.string());
    std::vector<double> values;
    Network net = Network::load(is, values);
    net.bind((int)ps.size());
    ps.push_back(ParamGroup{stem, std::move(values)});
    return net;
  };
  for (int k = 0; k < steps; ++k) sp.alpha.push_back(load_one("alpha_" + std::to_string(k)));
  for (int k = 0; k < steps; ++k) sp.b.push_back(load_one("b_" + std::to_string(k)));
  return sp;
}

}  // namespace reachnet
