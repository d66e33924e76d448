#include <doctest.h>

#include <cmath>

#include "reachnet/benchmarks.hpp"
#include "reachnet/common.hpp"
#include "reachnet/metrics.hpp"
#include "reachnet/oracle.hpp"

using namespace reachnet;

namespace {

GameSpec stationary_game() {
  GameSpec g;
  g.name = "stationary";
  g.dyn.dim = 2;
  g.dyn.dim_a = 1;
  g.dyn.dim_b = 1;
  g.dyn.state_independent = true;
  g.dyn.build = [](Tape& t, Val, Val, Val) { return t.constant(std::vector<double>{0.0, 0.0}); };
  g.dyn.raw = [](const double*, const double*, const double*, double* out) {
    out[0] = out[1] = 0.0;
  };
  g.phi.build = [](Tape& t, Val x) { return t.sub(t.norm2(x), t.constant(1.0)); };
  g.phi.raw = [](const double* x) { return std::hypot(x[0], x[1]) - 1.0; };
  g.obstacle.build = [](Tape& t, Val x) { return t.sub(t.constant(0.3), t.abs(t.slice(x, 0, 1))); };
  g.obstacle.raw = [](const double* x) { return 0.3 - std::fabs(x[0]); };
  g.horizon = 1.0;
  g.steps = 3;
  g.omega_lo = {-2, -2};
  g.omega_hi = {2, 2};
  return g;
}

}  // namespace

TEST_CASE("grid interpolation is exact at nodes and clamps outside") {
  GridValue g;
  g.lo = {0.0, 0.0};
  g.hi = {1.0, 1.0};
  g.res = {4, 5};
  g.allocate();
  for (std::size_t k = 0; k < g.data.size(); ++k) g.data[k] = (double)k * 0.37 - 1.0;
  for (std::size_t k = 0; k < g.data.size(); ++k) {
    const std::vector<double> x = g.node_coord(k);
    CHECK(g.interp(x.data()) == doctest::Approx(g.data[k]).epsilon(1e-14));
  }
  const double outside[2] = {-3.0, 0.5};
  const double edge[2] = {0.0, 0.5};
  CHECK(g.interp(outside) == doctest::Approx(g.interp(edge)));
}

TEST_CASE("grid dpp trivial cases") {
  GameSpec g = stationary_game();
  const std::vector<double> lo = {-2, -2}, hi = {2, 2};
  const std::vector<int> res = {11, 11};
  const ControlGrid ca = interval_grid(-1, 1, 3), cb = interval_grid(-1, 1, 3);
  SUBCASE("f = 0 gives V0 = g v phi at every node") {
    const auto levels = grid_dpp_solve(g, lo, hi, res, ca, cb);
    REQUIRE(levels.size() == 4);
    for (std::size_t k = 0; k < levels[0].data.size(); ++k) {
      const std::vector<double> x = levels[0].node_coord(k);
      CHECK(levels[0].data[k] ==
            doctest::Approx(std::max(g.phi.raw(x.data()), g.obstacle.raw(x.data()))));
    }
  }
  SUBCASE("N = 0 returns the terminal level only") {
    g.steps = 0;
    const auto levels = grid_dpp_solve(g, lo, hi, res, ca, cb);
    REQUIRE(levels.size() == 1);
    const std::vector<double> x = levels[0].node_coord(17);
    CHECK(levels[0].data[17] ==
          doctest::Approx(std::max(g.phi.raw(x.data()), g.obstacle.raw(x.data()))));
  }
  SUBCASE("every level dominates the obstacle") {
    const auto levels = grid_dpp_solve(g, lo, hi, res, ca, cb);
    for (const GridValue& lvl : levels)
      for (std::size_t k = 0; k < lvl.data.size(); ++k) {
        const std::vector<double> x = lvl.node_coord(k);
        CHECK(lvl.data[k] >= g.obstacle.raw(x.data()) - 1e-12);
      }
  }
  SUBCASE("raising phi pointwise never lowers any node") {
    const auto base = grid_dpp_solve(g, lo, hi, res, ca, cb);
    GameSpec g2 = stationary_game();
    auto phi_raw = g.phi.raw;
    g2.phi.raw = [phi_raw](const double* x) { return phi_raw(x) + 0.2; };
    g2.phi.build = [](Tape& t, Val x) {
      return t.add(t.sub(t.norm2(x), t.constant(1.0)), t.constant(0.2));
    };
    const auto up = grid_dpp_solve(g2, lo, hi, res, ca, cb);
    for (std::size_t k = 0; k < base[0].data.size(); ++k)
      CHECK(up[0].data[k] >= base[0].data[k] - 1e-12);
  }
}

TEST_CASE("workers do not change grid dpp results") {
  const Preset p = preset("ex2");
  GameSpec s = p.spec;
  s.steps = 4;
  const std::vector<int> res = {41, 41};
  const ControlGrid ca = interval_grid(-1, 1, 9), cb = interval_grid(-1, 1, 9);
  const auto one = grid_dpp_solve(s, p.oracle_lo, p.oracle_hi, res, ca, cb, 1);
  const auto two = grid_dpp_solve(s, p.oracle_lo, p.oracle_hi, res, ca, cb, 2);
  CHECK(one[0].data == two[0].data);
}

TEST_CASE("the three value definitions coincide on finite instances") {
  SUBCASE("single stage always coincides") {
    Rng rng(100);
    for (int i = 0; i < 10; ++i) {
      const FiniteInstance inst = random_instance(rng, 4, 4, 4, 1);
      const ValueAgreement v = enumerate_value_definitions(inst);
      CHECK(std::fabs(v.v_tree - v.v_alternate) <= 1e-12);
      CHECK(std::fabs(v.v_feedback - v.v_alternate) <= 1e-12);
    }
  }
  SUBCASE("two stages, random costs") {
    Rng rng(200);
    for (int i = 0; i < 10; ++i) {
      const FiniteInstance inst = random_instance(rng, 3, 2, 2, 2);
      const ValueAgreement v = enumerate_value_definitions(inst);
      CHECK(std::fabs(v.v_tree - v.v_alternate) <= 1e-12);
      CHECK(std::fabs(v.v_feedback - v.v_alternate) <= 1e-12);
    }
  }
  SUBCASE("matching-pennies stage: values agree while open-loop orders differ") {
    // one step, payoff phi over four terminal states indexed by (a,b)
    FiniteInstance inst;
    inst.num_states = 5;
    inst.num_a = 2;
    inst.num_b = 2;
    inst.steps = 1;
    inst.x0 = 0;
    inst.trans.assign(5 * 2 * 2, 0);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) inst.trans[(std::size_t)((0 * 2 + a) * 2 + b)] = 1 + a * 2 + b;
    inst.g.assign(5, -2.0);
    inst.phi = {0.0, 1.0, -1.0, -1.0, 1.0};  // phi(x_{ab}) = +1 iff a == b
    const ValueAgreement v = enumerate_value_definitions(inst);
    CHECK(v.v_alternate == doctest::Approx(-1.0));  // b commits first, a answers
    CHECK(std::fabs(v.v_tree - v.v_alternate) <= 1e-12);
    CHECK(std::fabs(v.v_feedback - v.v_alternate) <= 1e-12);
    // open-loop min over a of max over b is +1: reacting matters
    double open_loop = 1e300;
    for (int a = 0; a < 2; ++a) {
      double worst = -1e300;
      for (int b = 0; b < 2; ++b)
        worst = std::max(worst, inst.phi[(std::size_t)inst.next(0, a, b)]);
      open_loop = std::min(open_loop, worst);
    }
    CHECK(open_loop == 1.0);
  }
  SUBCASE("oversized instances are rejected") {
    Rng rng(300);
    const FiniteInstance inst = random_instance(rng, 6, 4, 4, 3);
    CHECK_THROWS_AS(enumerate_value_definitions(inst), ConfigError);
  }
}

TEST_CASE("analytic formulas") {
  SUBCASE("terminal limit recovers the box distance") {
    const double x[2] = {0.5, 0.0};
    CHECK(analytic_example2(0.0, x) == doctest::Approx(-0.5));
  }
  SUBCASE("values stay inside the clamp band") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
      const double x[2] = {rng.uniform(-4, 4), rng.uniform(-4, 4)};
      const double s = rng.uniform(0.0, 0.5);
      CHECK(std::fabs(analytic_example2(s, x)) <= 0.5);
      CHECK(std::fabs(analytic_example3(s, x, -1)) <= 0.5);
      CHECK(std::fabs(analytic_example3(s, x, +1)) <= 0.5);
      CHECK(std::fabs(analytic_example1(s, x)) <= 0.2);
      CHECK(std::fabs(analytic_rotation(s, x)) <= 0.5);
    }
  }
  SUBCASE("sup-inf value dominates inf-sup on a grid") {
    for (int i = 0; i < 21; ++i)
      for (int j = 0; j < 21; ++j) {
        const double x[2] = {-3.0 + 6.0 * i / 20, -3.0 + 6.0 * j / 20};
        CHECK(analytic_example3(0.4, x, +1) >= analytic_example3(0.4, x, -1) - 1e-12);
      }
  }
  SUBCASE("rotation value at time-to-go zero is the terminal cost") {
    Rng rng(8);
    for (int i = 0; i < 50; ++i) {
      const double x[2] = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
      const double phi = std::clamp(std::hypot(x[0] - 1.0, x[1]) - 0.5, -0.5, 0.5);
      CHECK(analytic_rotation(0.0, x) == doctest::Approx(phi).epsilon(1e-12));
    }
  }
}

TEST_CASE("analytic example 2 agrees with a coarse grid dpp solve") {
  const Preset p = preset("ex2");
  GameSpec s = p.spec;
  s.steps = 8;
  const std::vector<int> res = {101, 101};
  const ControlGrid ca = interval_grid(-1, 1, 21), cb = interval_grid(-1, 1, 21);
  const auto levels = grid_dpp_solve(s, p.oracle_lo, p.oracle_hi, res, ca, cb, 2);
  // compare on the inner sampling box with the banded error
  const int n = 41;
  std::vector<double> v, ref;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x[2] = {-3.0 + 6.0 * i / (n - 1), -3.0 + 6.0 * j / (n - 1)};
      v.push_back(levels[0].interp(x));
      ref.push_back(analytic_example2(s.horizon, x));
    }
  CHECK(local_l1_error(v, ref, 0.2) < 0.06);
}

TEST_CASE("analytic example 3 agrees with grid dpp for both objectives") {
  for (int sign : {-1, +1}) {
    const GameSpec s = [&] {
      GameSpec g = make_ex3_spec(sign < 0 ? Objective::MinMax : Objective::MaxMin);
      g.steps = 8;
      return g;
    }();
    const std::vector<int> res = {101, 101};
    const ControlGrid ca = interval_grid(-1, 1, 21), cb = interval_grid(-1, 1, 21);
    const auto levels = grid_dpp_solve(s, {-3.6, -3.6}, {3.6, 3.6}, res, ca, cb, 2);
    const int n = 41;
    std::vector<double> v, ref;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double x[2] = {-3.0 + 6.0 * i / (n - 1), -3.0 + 6.0 * j / (n - 1)};
        v.push_back(levels[0].interp(x));
        ref.push_back(analytic_example3(s.horizon, x, sign));
      }
    CAPTURE(sign);
    CHECK(local_l1_error(v, ref, 0.2) < 0.06);
  }
}

TEST_CASE("analytic example 1 agrees with grid dpp spot values") {
  const Preset p = preset("ex1");
  GameSpec s = p.spec;
  s.steps = 8;
  const std::vector<int> res = {101, 101};
  const ControlGrid ca = interval_grid(-1, 1, 15), cb = interval_grid(-1, 1, 15);
  const auto levels = grid_dpp_solve(s, p.oracle_lo, p.oracle_hi, res, ca, cb, 2);
  double worst = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const double x[2] = {-2.0 + 4.0 * i / 4, -2.0 + 4.0 * j / 4};
      worst = std::max(worst, std::fabs(levels[0].interp(x) - analytic_example1(s.horizon, x)));
    }
  CAPTURE(worst);
  CHECK(worst <= 0.05);
}

TEST_CASE("rotation closed form agrees with grid dpp") {
  const Preset p = preset("rotation");
  GameSpec s = p.spec;
  s.obstacle = StateCost{};
  s.steps = 8;
  const std::vector<int> res = {101, 101};
  const ControlGrid ca = interval_grid(-1, 1, 15), cb = interval_grid(-1, 1, 15);
  const auto levels = grid_dpp_solve(s, p.oracle_lo, p.oracle_hi, res, ca, cb, 2);
  std::vector<double> v, ref;
  const int n = 41;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x[2] = {-2.0 + 4.0 * i / (n - 1), -2.0 + 4.0 * j / (n - 1)};
      v.push_back(levels[0].interp(x));
      ref.push_back(analytic_rotation(s.horizon, x));
    }
  CHECK(local_l1_error(v, ref, 0.2) < 0.05);
}

TEST_CASE("rate check input validation") {
  const GameSpec s = make_separable_spec();
  const ControlGrid c = interval_grid(-1, 1, 5);
  CHECK_THROWS_AS(o_tau_rate_check(s, {4}, 16, {-3, -3}, {3, 3}, {41, 41}, c, c, {-2, -2}, {2, 2}),
                  ConfigError);
}

TEST_CASE("rate check fits a first-order slope on the separable game") {
  const GameSpec s = make_separable_spec();
  const ControlGrid c = interval_grid(-1, 1, 11);
  const RateCheckResult r = o_tau_rate_check(s, {2, 4, 8}, 32, {-3.5, -3.5}, {3.5, 3.5}, {71, 71},
                                             c, c, {-2, -2}, {2, 2}, 2);
  CAPTURE(r.errors[0]);
  CAPTURE(r.errors[1]);
  CAPTURE(r.errors[2]);
  CHECK(r.slope > 0.5);
  CHECK(r.slope < 1.5);
}
