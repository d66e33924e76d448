#include "reachnet/minimax.hpp"

#include <cmath>

#include "reachnet/common.hpp"

namespace reachnet {

MinMaxAlgorithm parse_algorithm(const std::string& s) {
  if (s == "sgda") return MinMaxAlgorithm::Sgda;
  if (s == "agda") return MinMaxAlgorithm::Agda;
  if (s == "gamma-gda") return MinMaxAlgorithm::GammaGda;
  if (s == "pote") return MinMaxAlgorithm::Pote;
  if (s == "poteb") return MinMaxAlgorithm::Poteb;
  throw ConfigError("unknown min-max algorithm: " + s);
}

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "sg-linear-decay") return OptimizerKind::SgLinearDecay;
  throw ConfigError("unknown optimizer: " + s);
}

std::string to_string(MinMaxAlgorithm a) {
  switch (a) {
    case MinMaxAlgorithm::Sgda: return "sgda";
    case MinMaxAlgorithm::Agda: return "agda";
    case MinMaxAlgorithm::GammaGda: return "gamma-gda";
    case MinMaxAlgorithm::Pote: return "pote";
    case MinMaxAlgorithm::Poteb: return "poteb";
  }
  return "?";
}

std::string to_string(OptimizerKind k) {
  return k == OptimizerKind::Adam ? "adam" : "sg-linear-decay";
}

void MinMaxConfig::validate() const {
  if (m_epoch < 0) throw ConfigError("m_epoch must be >= 0");
  if (m_epoch_pote < 1) throw ConfigError("m_epoch_pote must be >= 1");
  if (n_batch < 1) throw ConfigError("n_batch must be >= 1");
  if (!(eta > 0.0) || !(rho > 0.0)) throw ConfigError("learning rates must be positive");
  if (algorithm == MinMaxAlgorithm::GammaGda && !(gamma > 1.0))
    throw ConfigError("gamma-gda requires gamma > 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

void AdamState::init(const ParamSet& ps) {
  m.clear();
  v.clear();
  for (const auto& g : ps) {
    m.emplace_back(g.value.size(), 0.0);
    v.emplace_back(g.value.size(), 0.0);
  }
  t = 0;
}

void adam_update(std::vector<double>& m, std::vector<double>& v, long t, std::vector<double>& params,
                 const std::vector<double>& grads, double rate, bool ascend, double beta1,
                 double beta2, double eps) {
  const double bc1 = 1.0 - std::pow(beta1, (double)t);
  const double bc2 = 1.0 - std::pow(beta2, (double)t);
  const double dir = ascend ? 1.0 : -1.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    params[i] += dir * rate * mhat / (std::sqrt(vhat) + eps);
  }
}

Updater::Updater(OptimizerKind kind, const MinMaxConfig& cfg, const ParamSet& ps)
    : kind_(kind), beta1_(cfg.adam_beta1), beta2_(cfg.adam_beta2), eps_(cfg.adam_eps) {
  if (kind_ == OptimizerKind::Adam) adam_.init(ps);
}

void Updater::apply(ParamSet& ps, const GradBuffer& g, const Side& side, double rate) {
  for (int gi : side.groups) {
    const auto& grads = g.slots[(std::size_t)gi];
    for (double gv : grads)
      if (!std::isfinite(gv)) throw NumericError("optimizer error: non-finite gradient");
    auto& params = ps[(std::size_t)gi].value;
    if (kind_ == OptimizerKind::Adam) {
      adam_update(adam_.m[(std::size_t)gi], adam_.v[(std::size_t)gi], adam_.t + 1, params, grads,
                  rate, side.ascend, beta1_, beta2_, eps_);
    } else {
      const double dir = side.ascend ? 1.0 : -1.0;
      for (std::size_t i = 0; i < params.size(); ++i) params[i] += dir * rate * grads[i];
    }
  }
  if (kind_ == OptimizerKind::Adam) ++adam_.t;
}

namespace {
double checked_eval(SaddleOracle& oracle, std::uint64_t noise, GradBuffer* grads) {
  const double loss = oracle.eval(noise, grads);
  if (!std::isfinite(loss)) throw NumericError("optimizer error: non-finite loss");
  return loss;
}
}  // namespace

StepLosses sgda_step(ParamSet& ps, SaddleOracle& oracle, const Side& x, const Side& y, Updater& ux,
                     Updater& uy, double eta_x, double eta_y, std::uint64_t noise,
                     GradBuffer& scratch) {
  scratch.zero();
  const double loss = checked_eval(oracle, noise, &scratch);
  ux.apply(ps, scratch, x, eta_x);
  uy.apply(ps, scratch, y, eta_y);
  return {loss, loss};
}

StepLosses agda_step(ParamSet& ps, SaddleOracle& oracle, const Side& x, const Side& y, Updater& ux,
                     Updater& uy, double eta_x, double eta_y, std::uint64_t noise_x,
                     std::uint64_t noise_y, GradBuffer& scratch) {
  scratch.zero();
  const double lx = checked_eval(oracle, noise_x, &scratch);
  ux.apply(ps, scratch, x, eta_x);
  scratch.zero();
  const double ly = checked_eval(oracle, noise_y, &scratch);
  uy.apply(ps, scratch, y, eta_y);
  return {lx, ly};
}

StepLosses gamma_gda_step(ParamSet& ps, SaddleOracle& oracle, const Side& x, const Side& y,
                          Updater& ux, Updater& uy, double eta, double gamma, std::uint64_t noise,
                          GradBuffer& scratch) {
  // gamma = 1 is allowed here and coincides with sgda; the config-level check
  // demands gamma > 1 when the algorithm is selected for a run.
  if (!(gamma >= 1.0)) throw ConfigError("gamma-gda requires gamma >= 1");
  return sgda_step(ps, oracle, x, y, ux, uy, eta / gamma, eta, noise, scratch);
}

StepLosses pote_outer(ParamSet& ps, SaddleOracle& oracle, const Side& x, const Side& y, Updater& ux,
                      Updater& uy, int q, double eta, double rho, Rng& noise, GradBuffer& scratch) {
  if (q < 1) throw ConfigError("pote requires at least one inner iteration");
  StepLosses losses;
  for (int k = 0; k < q; ++k) {
    scratch.zero();
    losses.inner = checked_eval(oracle, noise.next_u64(), &scratch);
    uy.apply(ps, scratch, y, rho);
  }
  scratch.zero();
  losses.outer = checked_eval(oracle, noise.next_u64(), &scratch);
  ux.apply(ps, scratch, x, eta);
  return losses;
}

double poteb_step(std::vector<double>& x, std::vector<double>& y, UnrolledSaddle& oracle, int q,
                  double rho, double eta, const std::vector<std::uint64_t>& inner_noise,
                  std::uint64_t outer_noise, std::vector<double>* grad_x_out) {
  if (q < 1) throw ConfigError("poteb requires at least one inner iteration");
  if (q > 50) throw ConfigError("poteb inner unroll capped at 50 iterations");
  if ((int)inner_noise.size() < q) throw ConfigError("poteb: need one noise seed per inner step");
  Tape t;
  Val xv = t.input(x);
  Val yv = t.input(y);
  for (int k = 0; k < q; ++k) {
    Val gy = oracle.build_grad_y(t, xv, yv, inner_noise[(std::size_t)k]);
    ++oracle.grad_builds;
    yv = t.add(yv, t.scale(gy, rho));
  }
  Val phi1 = oracle.build_value(t, xv, yv, outer_noise);
  ++oracle.value_builds;
  const double value = t.scalar(phi1);
  if (!std::isfinite(value)) throw NumericError("optimizer error: non-finite loss");
  t.backward(phi1);
  const auto gx = t.adjoint(xv);
  const auto yq = t.value(yv);
  y.assign(yq.begin(), yq.end());
  if (grad_x_out) grad_x_out->assign(gx.begin(), gx.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(gx[i])) throw NumericError("optimizer error: non-finite gradient");
    x[i] -= eta * gx[i];
  }
  return value;
}

}  // namespace reachnet
