#include "reachnet/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "reachnet/common.hpp"

namespace reachnet {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr int kMaxDim = 8;
}  // namespace

std::size_t GridValue::node_count() const {
  std::size_t n = 1;
  for (int r : res) n *= (std::size_t)r;
  return n;
}

void GridValue::allocate() {
  for (int r : res)
    if (r < 2) throw ConfigError("grid needs at least 2 nodes per axis");
  data.assign(node_count(), 0.0);
}

std::vector<double> GridValue::node_coord(std::size_t flat) const {
  std::vector<double> x((std::size_t)dim());
  for (int ax = dim() - 1; ax >= 0; --ax) {
    const int r = res[(std::size_t)ax];
    const int i = (int)(flat % (std::size_t)r);
    flat /= (std::size_t)r;
    x[(std::size_t)ax] = lo[(std::size_t)ax] + (hi[(std::size_t)ax] - lo[(std::size_t)ax]) * i / (r - 1);
  }
  return x;
}

double GridValue::interp(const double* x) const {
  const int d = dim();
  int base[kMaxDim];
  double w[kMaxDim];
  for (int ax = 0; ax < d; ++ax) {
    const double u = (x[ax] - lo[(std::size_t)ax]) / (hi[(std::size_t)ax] - lo[(std::size_t)ax]) *
                     (res[(std::size_t)ax] - 1);
    if (u <= 0.0) {
      base[ax] = 0;
      w[ax] = 0.0;
    } else if (u >= res[(std::size_t)ax] - 1) {
      base[ax] = res[(std::size_t)ax] - 2;
      w[ax] = 1.0;
    } else {
      base[ax] = (int)u;
      w[ax] = u - base[ax];
    }
  }
  if (d == 2) {
    const std::size_t r1 = (std::size_t)res[1];
    const std::size_t f = (std::size_t)base[0] * r1 + (std::size_t)base[1];
    const double w0 = w[0], w1 = w[1];
    const double v00 = data[f], v01 = data[f + 1];
    const double v10 = data[f + r1], v11 = data[f + r1 + 1];
    return (1 - w0) * ((1 - w1) * v00 + w1 * v01) + w0 * ((1 - w1) * v10 + w1 * v11);
  }
  double acc = 0.0;
  for (int corner = 0; corner < (1 << d); ++corner) {
    double cw = 1.0;
    std::size_t flat = 0;
    for (int ax = 0; ax < d; ++ax) {
      const int bit = (corner >> ax) & 1;
      cw *= bit ? w[ax] : 1.0 - w[ax];
      flat = flat * (std::size_t)res[(std::size_t)ax] + (std::size_t)(base[ax] + bit);
    }
    if (cw != 0.0) acc += cw * data[flat];
  }
  return acc;
}

ControlGrid interval_grid(double lo, double hi, int n) {
  if (n < 1) throw ConfigError("control grid needs at least one point");
  ControlGrid g;
  g.dim = 1;
  for (int i = 0; i < n; ++i)
    g.points.push_back({n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1)});
  return g;
}

ControlGrid ball_grid(int n_radii, int n_angles) {
  if (n_radii < 1 || n_angles < 1) throw ConfigError("ball grid needs positive resolution");
  ControlGrid g;
  g.dim = 2;
  g.points.push_back({0.0, 0.0});
  for (int i = 1; i <= n_radii; ++i) {
    const double r = (double)i / n_radii;
    for (int j = 0; j < n_angles; ++j) {
      const double th = 2.0 * kPi * j / n_angles;
      g.points.push_back({r * std::cos(th), r * std::sin(th)});
    }
  }
  return g;
}

ControlGrid control_grid_for(OutputActivation xi, int dim, int n) {
  if (xi == OutputActivation::UnitBall) {
    if (dim != 2) throw ConfigError("unit-ball control grid only supported in dimension 2");
    return ball_grid(std::max(1, n / 2), std::max(4, n));
  }
  if (dim == 1) return interval_grid(-1.0, 1.0, n);
  if (dim == 2) {
    ControlGrid g;
    g.dim = 2;
    const ControlGrid one = interval_grid(-1.0, 1.0, n);
    for (const auto& u : one.points)
      for (const auto& v : one.points) g.points.push_back({u[0], v[0]});
    return g;
  }
  throw ConfigError("control grid: unsupported dimension");
}

namespace {

// Computes F(x,a,b) and, when g is present, the substep max G in one sweep.
struct StepEval {
  const Dynamics& dyn;
  const StepScheme& sch;
  const StateCost* g;  // nullptr when no obstacle
  double dt;

  double run(const double* x, const double* a, const double* b, double* y_out) const {
    const int p = sch.kind == StepKind::Euler ? 1 : sch.substeps;
    const double h = dt / p;
    double y[kMaxDim];
    std::copy(x, x + dyn.dim, y);
    double best = g ? g->raw(y) : 0.0;
    for (int j = 0; j < p; ++j) {
      if (sch.kind == StepKind::Euler) {
        double f[kMaxDim];
        dyn.raw(y, a, b, f);
        for (int i = 0; i < dyn.dim; ++i) y[i] += dt * f[i];
      } else {
        heun_step_raw(dyn, y, a, b, h, y);
      }
      if (g && j + 1 < p) best = std::max(best, g->raw(y));
    }
    std::copy(y, y + dyn.dim, y_out);
    return best;
  }
};

void parallel_nodes(std::size_t count, int workers, const std::function<void(std::size_t, std::size_t)>& fn) {
  if (workers <= 1 || count < 256) {
    fn(0, count);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + (std::size_t)workers - 1) / (std::size_t)workers;
  for (int w = 0; w < workers; ++w) {
    const std::size_t b = (std::size_t)w * chunk;
    if (b >= count) break;
    const std::size_t e = std::min(count, b + chunk);
    pool.emplace_back(fn, b, e);
  }
  for (auto& t : pool) t.join();
}

}  // namespace

std::vector<GridValue> grid_dpp_solve(const GameSpec& spec, const std::vector<double>& lo,
                                      const std::vector<double>& hi, const std::vector<int>& res,
                                      const ControlGrid& ctrl_a, const ControlGrid& ctrl_b,
                                      int workers) {
  if ((int)lo.size() != spec.dyn.dim || (int)hi.size() != spec.dyn.dim ||
      (int)res.size() != spec.dyn.dim)
    throw ConfigError("grid_dpp_solve: box/spec dimension mismatch");
  const int N = spec.steps;
  const double dt = N > 0 ? spec.horizon / N : 0.0;
  const bool has_g = spec.has_obstacle();
  const int p = spec.scheme.kind == StepKind::Euler ? 1 : spec.scheme.substeps;

  std::vector<GridValue> levels((std::size_t)N + 1);
  for (auto& l : levels) {
    l.lo = lo;
    l.hi = hi;
    l.res = res;
  }
  levels[(std::size_t)N].allocate();
  GridValue& vn = levels[(std::size_t)N];
  const std::size_t count = vn.node_count();
  parallel_nodes(count, workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const std::vector<double> x = vn.node_coord(i);
      double v = spec.phi.raw(x.data());
      if (has_g) v = std::max(v, spec.obstacle.raw(x.data()));
      vn.data[i] = v;
    }
  });
  if (N == 0) return levels;

  const std::size_t na = ctrl_a.size(), nb = ctrl_b.size();

  // Constant-velocity fast path: the step displacement and the substep offsets
  // depend only on (a,b).
  std::vector<double> disp, sub_off;
  if (spec.dyn.state_independent) {
    disp.resize(na * nb * (std::size_t)spec.dyn.dim);
    if (has_g) sub_off.resize(na * nb * (std::size_t)p * (std::size_t)spec.dyn.dim);
    std::vector<double> zero((std::size_t)spec.dyn.dim, 0.0);
    double f[kMaxDim];
    for (std::size_t ib = 0; ib < nb; ++ib)
      for (std::size_t ia = 0; ia < na; ++ia) {
        spec.dyn.raw(zero.data(), ctrl_a.points[ia].data(), ctrl_b.points[ib].data(), f);
        double* d = disp.data() + (ib * na + ia) * (std::size_t)spec.dyn.dim;
        for (int i = 0; i < spec.dyn.dim; ++i) d[i] = dt * f[i];
        if (has_g) {
          const double h = dt / p;
          for (int j = 0; j < p; ++j) {
            double* o = sub_off.data() + ((ib * na + ia) * (std::size_t)p + (std::size_t)j) *
                                             (std::size_t)spec.dyn.dim;
            for (int i = 0; i < spec.dyn.dim; ++i) o[i] = h * j * f[i];
          }
        }
      }
  }

  StepEval stepper{spec.dyn, spec.scheme, has_g ? &spec.obstacle : nullptr, dt};
  // MinMax alternates max_b min_a, the MaxMin objective min_b max_a.
  const bool maxmin = spec.objective == Objective::MaxMin;

  for (int k = N - 1; k >= 0; --k) {
    GridValue& vk = levels[(std::size_t)k];
    vk.allocate();
    const GridValue& vnext = levels[(std::size_t)k + 1];
    parallel_nodes(count, workers, [&](std::size_t bgn, std::size_t end) {
      double y[kMaxDim], xs[kMaxDim];
      for (std::size_t i = bgn; i < end; ++i) {
        const std::vector<double> x = vk.node_coord(i);
        double best_b = maxmin ? 1e300 : -1e300;
        for (std::size_t ib = 0; ib < nb; ++ib) {
          double best_a = maxmin ? -1e300 : 1e300;
          for (std::size_t ia = 0; ia < na; ++ia) {
            double q;
            if (spec.dyn.state_independent) {
              const double* d = disp.data() + (ib * na + ia) * (std::size_t)spec.dyn.dim;
              for (int c = 0; c < spec.dyn.dim; ++c) y[c] = x[(std::size_t)c] + d[c];
              q = vnext.interp(y);
              if (has_g) {
                double gmax = -1e300;
                for (int j = 0; j < p; ++j) {
                  const double* o =
                      sub_off.data() +
                      ((ib * na + ia) * (std::size_t)p + (std::size_t)j) * (std::size_t)spec.dyn.dim;
                  for (int c = 0; c < spec.dyn.dim; ++c) xs[c] = x[(std::size_t)c] + o[c];
                  gmax = std::max(gmax, spec.obstacle.raw(xs));
                }
                q = std::max(q, gmax);
              }
            } else {
              const double gmax = stepper.run(x.data(), ctrl_a.points[ia].data(),
                                              ctrl_b.points[ib].data(), y);
              q = vnext.interp(y);
              if (has_g) q = std::max(q, gmax);
            }
            if (maxmin) {
              best_a = std::max(best_a, q);
              if (best_a >= best_b) break;  // cannot lower min_b any more
            } else {
              best_a = std::min(best_a, q);
              if (best_a <= best_b) break;  // cannot raise max_b any more
            }
          }
          best_b = maxmin ? std::min(best_b, best_a) : std::max(best_b, best_a);
        }
        vk.data[i] = best_b;
      }
    });
  }
  return levels;
}

// --- analytic references ----------------------------------------------------

double analytic_example1(double s, const double* x, double c) {
  const double t = s + 0.25;
  const double theta = std::atan2(x[1], x[0]);
  const double theta_p = std::clamp(theta, -t, t);
  // radial coordinate after rotating back by theta_p (equals |x| within reach)
  const double r1 = std::cos(theta_p) * x[0] + std::sin(theta_p) * x[1];
  const double radial = std::fabs(r1 - 2.0) + c * t;
  const double angular = 2.0 * kPi * std::fabs(theta - theta_p);
  return std::clamp(std::max(radial, angular) - 1.2, -0.2, 0.2);
}

double analytic_example2(double s, const double* xy) {
  const double x = xy[0], y = xy[1];
  const double r1 = std::max(-1.0 - 2.0 * s - x, x - (1.0 + 2.0 * s));
  const double r2 = std::max(-1.0 - y, y - 1.0);
  double r5 = std::max(r1, r2);
  if (s > 0.0) {
    const double x1 = 1.0 - 2.0 * s, y1 = 1.0;
    const double x2 = 1.0 + 2.0 * s, y2 = 1.0 - 2.0 * s;
    const double x3 = 1.5 + 2.0 * s, y3 = 1.5 - 2.0 * s, z3 = 0.5;
    const double p = z3 / ((x2 - x1) * (y3 - y1) - (y2 - y1) * (x3 - x1));
    const double r3 = p * ((x2 - x1) * (y - y1) - (y2 - y1) * (x - x1));
    const double r4 = p * ((x2 - x1) * (-y - y1) - (y2 - y1) * (-x - x1));
    r5 = std::max({r1, r2, r3, r4});
  }
  return std::clamp(r5, -0.5, 0.5);
}

double analytic_example3(double s, const double* xy, int sign) {
  const double x = xy[0], y = xy[1];
  const double r1 = sign < 0 ? std::max(-1.0 - 2.0 * s - x, x - 1.0)
                             : std::max(-1.0 - x, x - (1.0 - 2.0 * s));
  const double r2 = std::max(-1.0 - y, y - 1.0);
  double r5 = std::max(r1, r2);
  if (s > 0.0) {
    const double x1 = 1.0 - 2.0 * s, y1 = 1.0;
    const double x2 = 1.0 + 2.0 * s, y2 = 1.0 - 2.0 * s;
    const double x3 = 1.5 + 2.0 * s, y3 = 1.5 - 2.0 * s, z3 = 0.5;
    const double p = z3 / ((x2 - x1) * (y3 - y1) - (y2 - y1) * (x3 - x1));
    const double r3 = p * ((x2 - x1) * (y - y1) - (y2 - y1) * (-x - x1));
    const double r4 = p * ((x2 - x1) * (-y - y1) - (y2 - y1) * (-x - x1));
    r5 = std::max({r1, r2, r3, r4});
  }
  return std::clamp(r5, -0.5, 0.5);
}

double analytic_rotation(double s, const double* x, double c) {
  const double r = std::hypot(x[0], x[1]);
  const double theta = std::atan2(x[1], x[0]);
  const double resid = std::max(std::fabs(theta) - s, 0.0);
  const double ct = std::cos(resid);
  const double r_lo = std::max(r - c * s, 0.0);
  const double r_hi = r + c * s;
  const double d_lo = std::sqrt(std::max(r_lo * r_lo + 1.0 - 2.0 * r_lo * ct, 0.0));
  const double d_hi = std::sqrt(std::max(r_hi * r_hi + 1.0 - 2.0 * r_hi * ct, 0.0));
  return std::clamp(std::max(d_lo, d_hi) - 0.5, -0.5, 0.5);
}

// --- exhaustive finite-instance verification --------------------------------

FiniteInstance random_instance(Rng& rng, int num_states, int num_a, int num_b, int steps) {
  FiniteInstance inst;
  inst.num_states = num_states;
  inst.num_a = num_a;
  inst.num_b = num_b;
  inst.steps = steps;
  inst.x0 = 0;
  inst.trans.resize((std::size_t)(num_states * num_a * num_b));
  for (int& t : inst.trans) t = (int)(rng.next_u64() % (std::uint64_t)num_states);
  inst.g.resize((std::size_t)num_states);
  inst.phi.resize((std::size_t)num_states);
  for (double& v : inst.g) v = rng.uniform(-1.0, 1.0);
  for (double& v : inst.phi) v = rng.uniform(-1.0, 1.0);
  return inst;
}

namespace {

double fleming_value(const FiniteInstance& inst) {
  std::vector<double> v = inst.phi;
  for (int k = inst.steps - 1; k >= 0; --k) {
    std::vector<double> nv((std::size_t)inst.num_states);
    for (int s = 0; s < inst.num_states; ++s) {
      double best_b = -1e300;
      for (int b = 0; b < inst.num_b; ++b) {
        double best_a = 1e300;
        for (int a = 0; a < inst.num_a; ++a)
          best_a = std::min(best_a, std::max(inst.g[(std::size_t)s], v[(std::size_t)inst.next(s, a, b)]));
        best_b = std::max(best_b, best_a);
      }
      nv[(std::size_t)s] = best_b;
    }
    v = std::move(nv);
  }
  return v[(std::size_t)inst.x0];
}

// Log-size guard shared by the two enumerations.
void check_budget(double log_count, std::uint64_t budget) {
  if (log_count > std::log((double)budget))
    throw ConfigError("enumerate_value_definitions: instance too large (strategy count over budget)");
}

double tree_strategy_value(const FiniteInstance& inst, std::uint64_t budget) {
  const int N = inst.steps, na = inst.num_a, nb = inst.num_b;
  // Table entry layout: step k holds nb^{k+1} history-indexed actions.
  std::vector<std::size_t> offset((std::size_t)N + 1, 0);
  std::size_t total = 0;
  for (int k = 0; k < N; ++k) {
    offset[(std::size_t)k] = total;
    std::size_t e = 1;
    for (int j = 0; j <= k; ++j) e *= (std::size_t)nb;
    total += e;
  }
  check_budget((double)total * std::log((double)na), budget);

  std::vector<int> table(total, 0);
  std::size_t num_b_seq = 1;
  for (int k = 0; k < N; ++k) num_b_seq *= (std::size_t)nb;

  double best = 1e300;
  while (true) {
    // sup over adverse control sequences for this strategy tree
    double worst = -1e300;
    for (std::size_t code = 0; code < num_b_seq; ++code) {
      int s = inst.x0;
      double run = -1e300;
      std::size_t hist = 0;
      std::size_t rem = code;
      for (int k = 0; k < N; ++k) {
        const int bk = (int)(rem % (std::size_t)nb);
        rem /= (std::size_t)nb;
        hist = hist * (std::size_t)nb + (std::size_t)bk;
        const int a = table[offset[(std::size_t)k] + hist];
        run = std::max(run, inst.g[(std::size_t)s]);
        s = inst.next(s, a, bk);
      }
      worst = std::max(worst, std::max(run, inst.phi[(std::size_t)s]));
    }
    best = std::min(best, worst);
    // next strategy (mixed-radix odometer)
    std::size_t i = 0;
    for (; i < total; ++i) {
      if (++table[i] < na) break;
      table[i] = 0;
    }
    if (i == total) break;
  }
  return best;
}

double feedback_strategy_value(const FiniteInstance& inst, std::uint64_t budget) {
  const int N = inst.steps, na = inst.num_a, nb = inst.num_b;
  // Forward closure of reachable states per step.
  std::vector<std::vector<int>> reach((std::size_t)N);
  std::vector<std::vector<int>> local((std::size_t)N,
                                      std::vector<int>((std::size_t)inst.num_states, -1));
  {
    std::vector<char> cur((std::size_t)inst.num_states, 0);
    cur[(std::size_t)inst.x0] = 1;
    for (int k = 0; k < N; ++k) {
      for (int s = 0; s < inst.num_states; ++s)
        if (cur[(std::size_t)s]) {
          local[(std::size_t)k][(std::size_t)s] = (int)reach[(std::size_t)k].size();
          reach[(std::size_t)k].push_back(s);
        }
      std::vector<char> nxt((std::size_t)inst.num_states, 0);
      for (int s = 0; s < inst.num_states; ++s)
        if (cur[(std::size_t)s])
          for (int a = 0; a < na; ++a)
            for (int b = 0; b < nb; ++b) nxt[(std::size_t)inst.next(s, a, b)] = 1;
      cur = std::move(nxt);
    }
  }
  std::vector<std::size_t> offset((std::size_t)N, 0);
  std::size_t total = 0;
  for (int k = 0; k < N; ++k) {
    offset[(std::size_t)k] = total;
    total += reach[(std::size_t)k].size() * (std::size_t)nb;
  }
  check_budget((double)total * std::log((double)na), budget);

  std::vector<int> table(total, 0);
  std::size_t num_b_seq = 1;
  for (int k = 0; k < N; ++k) num_b_seq *= (std::size_t)nb;

  double best = 1e300;
  while (true) {
    double worst = -1e300;
    for (std::size_t code = 0; code < num_b_seq; ++code) {
      int s = inst.x0;
      double run = -1e300;
      std::size_t rem = code;
      for (int k = 0; k < N; ++k) {
        const int bk = (int)(rem % (std::size_t)nb);
        rem /= (std::size_t)nb;
        const int li = local[(std::size_t)k][(std::size_t)s];
        const int a = table[offset[(std::size_t)k] + (std::size_t)li * (std::size_t)nb + (std::size_t)bk];
        run = std::max(run, inst.g[(std::size_t)s]);
        s = inst.next(s, a, bk);
      }
      worst = std::max(worst, std::max(run, inst.phi[(std::size_t)s]));
    }
    best = std::min(best, worst);
    std::size_t i = 0;
    for (; i < total; ++i) {
      if (++table[i] < na) break;
      table[i] = 0;
    }
    if (i == total) break;
  }
  return best;
}

}  // namespace

ValueAgreement enumerate_value_definitions(const FiniteInstance& inst, std::uint64_t budget) {
  ValueAgreement out;
  out.v_alternate = fleming_value(inst);
  out.v_tree = tree_strategy_value(inst, budget);
  out.v_feedback = feedback_strategy_value(inst, budget);
  return out;
}

RateCheckResult o_tau_rate_check(const GameSpec& spec, const std::vector<int>& n_list, int ref_n,
                                 const std::vector<double>& lo, const std::vector<double>& hi,
                                 const std::vector<int>& res, const ControlGrid& ctrl_a,
                                 const ControlGrid& ctrl_b, const std::vector<double>& inner_lo,
                                 const std::vector<double>& inner_hi, int workers) {
  if (n_list.size() < 2)
    throw ConfigError("o_tau_rate_check: need at least two step counts to fit a slope");
  GameSpec s = spec;
  s.steps = ref_n;
  const GridValue ref = grid_dpp_solve(s, lo, hi, res, ctrl_a, ctrl_b, workers)[0];

  RateCheckResult out;
  out.n_list = n_list;
  for (int n : n_list) {
    s.steps = n;
    const GridValue v0 = grid_dpp_solve(s, lo, hi, res, ctrl_a, ctrl_b, workers)[0];
    double err = 0.0;
    for (std::size_t i = 0; i < v0.data.size(); ++i) {
      const std::vector<double> x = v0.node_coord(i);
      bool inner = true;
      for (int ax = 0; ax < v0.dim(); ++ax)
        if (x[(std::size_t)ax] < inner_lo[(std::size_t)ax] ||
            x[(std::size_t)ax] > inner_hi[(std::size_t)ax])
          inner = false;
      if (inner) err = std::max(err, std::fabs(v0.data[i] - ref.data[i]));
    }
    out.errors.push_back(err);
    out.dt.push_back(spec.horizon / n);
  }
  // least-squares slope of log err vs log dt
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int m = (int)n_list.size();
  for (int i = 0; i < m; ++i) {
    if (!(out.errors[(std::size_t)i] > 0.0))
      throw NumericError("o_tau_rate_check: zero error, slope undefined");
    const double lx = std::log(out.dt[(std::size_t)i]);
    const double ly = std::log(out.errors[(std::size_t)i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  out.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return out;
}

}  // namespace reachnet
