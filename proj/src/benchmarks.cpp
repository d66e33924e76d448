#include "reachnet/benchmarks.hpp"

#include <algorithm>
#include <cmath>

#include "reachnet/common.hpp"
#include "reachnet/oracle.hpp"

namespace reachnet {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> box_lo(double v, int d) { return std::vector<double>((std::size_t)d, v); }

void enlarge(Preset& p, double factor) {
  p.oracle_lo = p.spec.omega_lo;
  p.oracle_hi = p.spec.omega_hi;
  for (std::size_t i = 0; i < p.oracle_lo.size(); ++i) {
    p.oracle_lo[i] *= factor;
    p.oracle_hi[i] *= factor;
  }
}

// --- Example 1 / rotation dynamics: f = a R x + c b x/|x| ------------------

Dynamics rotation_dynamics(double c) {
  Dynamics dyn;
  dyn.dim = 2;
  dyn.dim_a = 1;
  dyn.dim_b = 1;
  dyn.build = [c](Tape& t, Val x, Val a, Val b) {
    Val x0 = t.slice(x, 0, 1), x1 = t.slice(x, 1, 1);
    Val rx = t.concat(t.neg(x1), x0);  // R x with R the quarter-turn matrix
    Val n = t.max2(t.norm2(x), t.constant(1e-8));
    Val radial_rate = t.div(t.scale(b, c), n);
    return t.add(t.smul(a, rx), t.smul(radial_rate, x));
  };
  dyn.raw = [c](const double* x, const double* a, const double* b, double* out) {
    const double n = std::max(std::sqrt(x[0] * x[0] + x[1] * x[1]), 1e-8);
    const double s = c * b[0] / n;
    out[0] = a[0] * (-x[1]) + s * x[0];
    out[1] = a[0] * x[0] + s * x[1];
  };
  return dyn;
}

StateCost clamped_ball_cost(double cx, double cy, double radius, double sign, double clip) {
  // sign=+1: |x - q| - r (target), sign=-1: r - |x - q| (obstacle), clamped.
  StateCost sc;
  sc.build = [=](Tape& t, Val x) {
    const double q[2] = {cx, cy};
    Val d = t.norm2(t.sub(x, t.constant(std::span<const double>(q, 2))));
    Val v = sign > 0 ? t.sub(d, t.constant(radius)) : t.sub(t.constant(radius), d);
    return t.clamp(v, -clip, clip);
  };
  sc.raw = [=](const double* x) {
    const double d = std::hypot(x[0] - cx, x[1] - cy);
    const double v = sign > 0 ? d - radius : radius - d;
    return std::clamp(v, -clip, clip);
  };
  return sc;
}

StateCost ex1_terminal(double c) {
  StateCost sc;
  sc.raw = [c](const double* x) { return analytic_example1(0.0, x, c); };
  sc.build = [c](Tape& t, Val x) {
    const double t0 = 0.25;
    Val x0 = t.slice(x, 0, 1), x1 = t.slice(x, 1, 1);
    Val theta = t.atan2(x1, x0);
    Val theta_p = t.clamp(theta, -t0, t0);
    Val r1 = t.add(t.smul(t.cos(theta_p), x0), t.smul(t.sin(theta_p), x1));
    Val radial = t.add(t.abs(t.sub(r1, t.constant(2.0))), t.constant(c * t0));
    Val angular = t.scale(t.abs(t.sub(theta, theta_p)), 2.0 * kPi);
    Val u2 = t.sub(t.max2(radial, angular), t.constant(1.2));
    return t.clamp(u2, -0.2, 0.2);
  };
  return sc;
}

StateCost inf_norm_box_terminal(double clip) {
  // clamp(|x|_inf - 1, -clip, clip) in dimension 2.
  StateCost sc;
  sc.build = [clip](Tape& t, Val x) {
    Val m = t.max2(t.abs(t.slice(x, 0, 1)), t.abs(t.slice(x, 1, 1)));
    return t.clamp(t.sub(m, t.constant(1.0)), -clip, clip);
  };
  sc.raw = [clip](const double* x) {
    return std::clamp(std::max(std::fabs(x[0]), std::fabs(x[1])) - 1.0, -clip, clip);
  };
  return sc;
}

GameSpec make_ex1_spec(bool with_obstacle) {
  GameSpec g;
  g.name = with_obstacle ? "ex1-obstacle" : "ex1";
  g.dyn = rotation_dynamics(0.3);
  g.phi = ex1_terminal(0.3);
  if (with_obstacle) g.obstacle = clamped_ball_cost(0.5, 1.5, 0.5, -1.0, 0.2);
  g.horizon = 0.6 * kPi;
  g.steps = 4;
  g.omega_lo = box_lo(-3.0, 2);
  g.omega_hi = box_lo(3.0, 2);
  return g;
}

GameSpec make_ex2_spec() {
  GameSpec g;
  g.name = "ex2";
  g.dyn.dim = 2;
  g.dyn.dim_a = 1;
  g.dyn.dim_b = 1;
  g.dyn.state_independent = true;
  // The clamp saturates for the minimizer: a = b -/+ 1 pins the first
  // velocity at -/+2 whatever b plays, which is the controllability the
  // closed-form solution encodes.
  g.dyn.build = [](Tape& t, Val, Val a, Val b) {
    Val u = t.clamp(t.sub(b, t.scale(a, 2.0)), -1.0, 1.0);
    return t.concat(t.scale(u, 2.0), t.add(a, b));
  };
  g.dyn.raw = [](const double*, const double* a, const double* b, double* out) {
    out[0] = 2.0 * std::clamp(b[0] - 2.0 * a[0], -1.0, 1.0);
    out[1] = a[0] + b[0];
  };
  g.dyn.lip_x = 0.0;
  g.dyn.lip_a = 5.0;
  g.dyn.lip_b = 3.0;
  g.phi = inf_norm_box_terminal(0.5);
  g.horizon = 0.4;
  g.steps = 4;
  g.omega_lo = box_lo(-3.0, 2);
  g.omega_hi = box_lo(3.0, 2);
  return g;
}

GameSpec make_ex4_spec() {
  GameSpec g;
  g.name = "ex4";
  const double v1 = 1.0, v2 = 0.7;
  g.dyn.dim = 4;
  g.dyn.dim_a = 2;
  g.dyn.dim_b = 2;
  g.dyn.state_independent = true;
  g.dyn.build = [=](Tape& t, Val, Val a, Val b) {
    return t.concat(t.scale(a, v1), t.scale(b, v2));
  };
  g.dyn.raw = [=](const double*, const double* a, const double* b, double* out) {
    out[0] = v1 * a[0];
    out[1] = v1 * a[1];
    out[2] = v2 * b[0];
    out[3] = v2 * b[1];
  };
  g.dyn.lip_x = 0.0;
  g.dyn.lip_a = v1;
  g.dyn.lip_b = v2;
  // phi: distance of the pursued player to the target disk B((3,0), 1)
  g.phi.build = [](Tape& t, Val x) {
    const double xa[2] = {3.0, 0.0};
    Val p = t.slice(x, 0, 2);
    Val d = t.norm2(t.sub(p, t.constant(std::span<const double>(xa, 2))));
    return t.sub(d, t.constant(1.0));
  };
  g.phi.raw = [](const double* x) { return std::hypot(x[0] - 3.0, x[1] - 0.0) - 1.0; };
  // g = max(square obstacle for player 1, capture ring of radius R0 = 1)
  g.obstacle.build = [](Tape& t, Val x) {
    Val p0 = t.slice(x, 0, 1), p1 = t.slice(x, 1, 1);
    Val g0 = t.sub(t.constant(0.75),
                   t.max2(t.abs(t.sub(p0, t.constant(0.5))), t.abs(t.sub(p1, t.constant(1.5)))));
    Val ga = t.sub(t.constant(1.0), t.norm2(t.sub(t.slice(x, 0, 2), t.slice(x, 2, 2))));
    return t.max2(g0, ga);
  };
  g.obstacle.raw = [](const double* x) {
    const double g0 =
        0.75 - std::max(std::fabs(x[0] - 0.5), std::fabs(x[1] - 1.5));
    const double ga = 1.0 - std::hypot(x[0] - x[2], x[1] - x[3]);
    return std::max(g0, ga);
  };
  g.horizon = 4.0;
  g.steps = 4;
  g.omega_lo = box_lo(-5.0, 4);
  g.omega_hi = box_lo(5.0, 4);
  g.xi_a = OutputActivation::UnitBall;
  g.xi_b = OutputActivation::UnitBall;
  return g;
}

GameSpec make_rotation_spec() {
  GameSpec g;
  g.name = "rotation";
  g.dyn = rotation_dynamics(0.2);
  g.phi = clamped_ball_cost(1.0, 0.0, 0.5, 1.0, 0.5);
  g.obstacle = clamped_ball_cost(0.75, 1.0, 0.75, -1.0, 0.5);
  g.horizon = 0.6 * kPi;
  g.steps = 4;
  g.omega_lo = box_lo(-2.0, 2);
  g.omega_hi = box_lo(2.0, 2);
  return g;
}

}  // namespace

GameSpec make_ex3_spec(Objective objective, bool legacy_dynamics) {
  GameSpec g;
  g.name = objective == Objective::MinMax ? "ex3-minmax" : "ex3-maxmin";
  g.dyn.dim = 2;
  g.dyn.dim_a = 1;
  g.dyn.dim_b = 1;
  g.dyn.state_independent = true;
  if (!legacy_dynamics) {
    g.dyn.build = [](Tape& t, Val, Val a, Val b) {
      Val u = t.sub(t.constant(1.0), t.abs(t.sub(a, b)));
      return t.concat(t.scale(u, 2.0), t.add(a, b));
    };
    g.dyn.raw = [](const double*, const double* a, const double* b, double* out) {
      out[0] = 2.0 * (1.0 - std::fabs(a[0] - b[0]));
      out[1] = a[0] + b[0];
    };
  } else {
    g.dyn.build = [](Tape& t, Val, Val a, Val b) {
      Val u = t.clamp(t.abs(t.sub(a, b)), -1.0, 1.0);
      return t.concat(t.scale(u, 2.0), t.add(a, b));
    };
    g.dyn.raw = [](const double*, const double* a, const double* b, double* out) {
      out[0] = 2.0 * std::clamp(std::fabs(a[0] - b[0]), -1.0, 1.0);
      out[1] = a[0] + b[0];
    };
  }
  g.phi = inf_norm_box_terminal(0.5);
  g.horizon = 0.4;
  g.steps = 4;
  g.omega_lo = box_lo(-3.0, 2);
  g.omega_hi = box_lo(3.0, 2);
  g.objective = objective;
  return g;
}

GameSpec make_separable_spec() {
  GameSpec g;
  g.name = "separable";
  g.dyn.dim = 2;
  g.dyn.dim_a = 1;
  g.dyn.dim_b = 1;
  g.dyn.build = [](Tape& t, Val x, Val a, Val b) {
    Val x0 = t.slice(x, 0, 1), x1 = t.slice(x, 1, 1);
    return t.concat(t.sub(a, x1), t.add(b, x0));
  };
  g.dyn.raw = [](const double* x, const double* a, const double* b, double* out) {
    out[0] = a[0] - x[1];
    out[1] = b[0] + x[0];
  };
  g.phi.build = [](Tape& t, Val x) { return t.sub(t.norm2(x), t.constant(1.0)); };
  g.phi.raw = [](const double* x) { return std::hypot(x[0], x[1]) - 1.0; };
  g.horizon = 1.0;
  g.steps = 8;
  g.scheme.kind = StepKind::Euler;
  g.scheme.substeps = 1;
  g.omega_lo = box_lo(-2.0, 2);
  g.omega_hi = box_lo(2.0, 2);
  return g;
}

Preset preset(const std::string& name) {
  Preset p;
  p.config.algorithm = MinMaxAlgorithm::Pote;
  p.config.optimizer = OptimizerKind::Adam;

  if (name == "ex1" || name == "ex1-obstacle") {
    p.spec = make_ex1_spec(name == "ex1-obstacle");
    p.config.m_epoch = 500;
    p.config.m_epoch_pote = 5;
    p.config.n_batch = 1000;
    p.config.eta = p.config.rho = 2e-3;
    p.reference = name == "ex1" ? ReferenceKind::Analytic : ReferenceKind::GridDpp;
    if (p.reference == ReferenceKind::Analytic) {
      const double T = p.spec.horizon;
      p.reference_fn = [T](const double* x) { return analytic_example1(T, x, 0.3); };
    }
  } else if (name == "ex2") {
    p.spec = make_ex2_spec();
    p.config.m_epoch = 500;
    p.config.m_epoch_pote = 5;
    p.config.n_batch = 1000;
    p.config.eta = p.config.rho = 2e-3;
    p.reference = ReferenceKind::Analytic;
    const double T = p.spec.horizon;
    p.reference_fn = [T](const double* x) { return analytic_example2(T, x); };
  } else if (name == "ex3-minmax" || name == "ex3-maxmin") {
    const Objective obj = name == "ex3-minmax" ? Objective::MinMax : Objective::MaxMin;
    p.spec = make_ex3_spec(obj);
    p.config.m_epoch = 3000;
    p.config.m_epoch_pote = 10;
    p.config.n_batch = 8000;
    p.config.eta = p.config.rho = 1e-3;
    p.net_width = 40;
    p.reference = ReferenceKind::Analytic;
    const double T = p.spec.horizon;
    const int sign = obj == Objective::MinMax ? -1 : +1;
    p.reference_fn = [T, sign](const double* x) { return analytic_example3(T, x, sign); };
  } else if (name == "ex4") {
    p.spec = make_ex4_spec();
    p.config.m_epoch = 1000;
    p.config.m_epoch_pote = 10;
    p.config.n_batch = 20000;
    p.config.eta = p.config.rho = 2e-3;
    p.reference = ReferenceKind::None;
  } else if (name == "rotation") {
    p.spec = make_rotation_spec();
    p.config.m_epoch = 110;
    p.config.m_epoch_pote = 5;
    p.config.n_batch = 1000;
    p.config.eta = p.config.rho = 2e-3;
    // The preset keeps the obstacle; the min-max success benchmark strips it
    // and compares against the closed-form no-obstacle solution.
    p.reference = ReferenceKind::GridDpp;
  } else {
    throw ConfigError("unknown preset: " + name);
  }
  enlarge(p, 1.2);
  return p;
}

std::vector<std::string> preset_names() {
  return {"ex1", "ex1-obstacle", "ex2", "ex3-minmax", "ex3-maxmin", "ex4", "rotation"};
}

}  // namespace reachnet
