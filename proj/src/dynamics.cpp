#include "reachnet/dynamics.hpp"

#include <algorithm>

#include "reachnet/common.hpp"

namespace reachnet {

namespace {
constexpr int kMaxDim = 8;
}

void heun_step_raw(const Dynamics& dyn, const double* x, const double* a, const double* b,
                   double h, double* out) {
  double f1[kMaxDim], xm[kMaxDim], f2[kMaxDim];
  dyn.raw(x, a, b, f1);
  for (int i = 0; i < dyn.dim; ++i) xm[i] = x[i] + h * f1[i];
  dyn.raw(xm, a, b, f2);
  for (int i = 0; i < dyn.dim; ++i) out[i] = x[i] + 0.5 * h * (f1[i] + f2[i]);
}

void multi_step_raw(const Dynamics& dyn, const StepScheme& sch, const double* x, const double* a,
                    const double* b, double dt, double* out) {
  if (sch.kind == StepKind::Euler) {
    double f[kMaxDim];
    dyn.raw(x, a, b, f);
    for (int i = 0; i < dyn.dim; ++i) out[i] = x[i] + dt * f[i];
    return;
  }
  const int p = sch.substeps;
  if (p < 1) throw ConfigError("multi_step: substeps must be >= 1");
  const double h = dt / p;
  double y[kMaxDim];
  std::copy(x, x + dyn.dim, y);
  for (int j = 0; j < p; ++j) heun_step_raw(dyn, y, a, b, h, y);
  std::copy(y, y + dyn.dim, out);
}

double substep_max_raw(const Dynamics& dyn, const StepScheme& sch, const StateCost& g,
                       const double* x, const double* a, const double* b, double dt) {
  const int p = sch.kind == StepKind::Euler ? 1 : sch.substeps;
  const double h = dt / p;
  double y[kMaxDim];
  std::copy(x, x + dyn.dim, y);
  double best = g.raw(y);
  for (int j = 1; j < p; ++j) {
    if (sch.kind == StepKind::Euler) break;
    heun_step_raw(dyn, y, a, b, h, y);
    best = std::max(best, g.raw(y));
  }
  return best;
}

Val heun_step(Tape& t, const Dynamics& dyn, Val x, Val a, Val b, double h) {
  Val f1 = dyn.build(t, x, a, b);
  Val xm = t.add(x, t.scale(f1, h));
  Val f2 = dyn.build(t, xm, a, b);
  return t.add(x, t.scale(t.add(f1, f2), 0.5 * h));
}

Val multi_step(Tape& t, const Dynamics& dyn, const StepScheme& sch, Val x, Val a, Val b,
               double dt) {
  if (sch.kind == StepKind::Euler) {
    Val f = dyn.build(t, x, a, b);
    return t.add(x, t.scale(f, dt));
  }
  const int p = sch.substeps;
  if (p < 1) throw ConfigError("multi_step: substeps must be >= 1");
  const double h = dt / p;
  Val y = x;
  for (int j = 0; j < p; ++j) y = heun_step(t, dyn, y, a, b, h);
  return y;
}

Val substep_max(Tape& t, const Dynamics& dyn, const StepScheme& sch, const StateCost& g, Val x,
                Val a, Val b, double dt) {
  const int p = sch.kind == StepKind::Euler ? 1 : sch.substeps;
  const double h = dt / p;
  Val y = x;
  Val best = g.build(t, y);
  for (int j = 1; j < p && sch.kind != StepKind::Euler; ++j) {
    y = heun_step(t, dyn, y, a, b, h);
    best = t.max2(best, g.build(t, y));
  }
  return best;
}

}  // namespace reachnet
