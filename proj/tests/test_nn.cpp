#include <doctest.h>

#include <cmath>
#include <sstream>

#include "reachnet/common.hpp"
#include "reachnet/nn.hpp"
#include "reachnet/rng.hpp"

using namespace reachnet;

TEST_CASE("parameter count formula") {
  CHECK(Network::param_count(3, 1, 3, 20) == 941);  // 20*3+20 + 2*(400+20) + 21
  CHECK(Network::param_count(2, 1, 3, 20) == 921);
  CHECK(Network::param_count(5, 2, 3, 40) == 3602);
  CHECK(Network::param_count(6, 2, 3, 20) == 1022);
  for (int d0 : {1, 2, 5})
    for (int d1 : {1, 3})
      for (int L : {1, 2, 4})
        for (int m : {4, 9}) {
          Network net(d0, d1, L, m, OutputActivation::Identity);
          ParamSet ps;
          ps.push_back(Network::init_params(net, "n", 1));
          CHECK((int)ps[0].value.size() == (d0 * m + m) + (L - 1) * (m * m + m) + (m * d1 + d1));
        }
}

TEST_CASE("deterministic initialization") {
  Network net(3, 1, 3, 20, OutputActivation::Tanh);
  const ParamGroup a = Network::init_params(net, "a", 42);
  const ParamGroup b = Network::init_params(net, "b", 42);
  CHECK(a.value == b.value);
  const ParamGroup c = Network::init_params(net, "c", 43);
  CHECK(a.value != c.value);
}

TEST_CASE("invalid dimensions rejected") {
  CHECK_THROWS_AS(Network(0, 1, 3, 20, OutputActivation::Tanh), ConfigError);
  CHECK_THROWS_AS(Network(2, 1, 0, 20, OutputActivation::Tanh), ConfigError);
}

TEST_CASE("output respects the activation codomain") {
  Rng rng(11);
  SUBCASE("tanh output lands in (-1,1)") {
    Network net(2, 3, 2, 10, OutputActivation::Tanh);
    for (int trial = 0; trial < 20; ++trial) {
      ParamSet ps;
      ps.push_back(Network::init_params(net, "n", rng.next_u64()));
      net.bind(0);
      const std::vector<double> y =
          net.eval(ps, {rng.uniform(-5, 5), rng.uniform(-5, 5)});
      for (double v : y) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);
      }
    }
  }
  SUBCASE("unit-ball output has norm < 1") {
    Network net(4, 2, 2, 10, OutputActivation::UnitBall);
    for (int trial = 0; trial < 20; ++trial) {
      ParamSet ps;
      ps.push_back(Network::init_params(net, "n", rng.next_u64()));
      net.bind(0);
      std::vector<double> x(4);
      for (double& v : x) v = rng.uniform(-5, 5);
      const std::vector<double> y = net.eval(ps, x);
      CHECK(std::hypot(y[0], y[1]) < 1.0);
    }
  }
  SUBCASE("zero weights, zero bias, tanh gives 0") {
    Network net(2, 1, 2, 6, OutputActivation::Tanh);
    ParamSet ps;
    ps.push_back(ParamGroup{"n", std::vector<double>((std::size_t)net.param_count(), 0.0)});
    net.bind(0);
    CHECK(net.eval(ps, {0.7, -0.3})[0] == 0.0);
  }
}

TEST_CASE("empirical Lipschitz ratio stays below the spectral bound") {
  Rng rng(21);
  Network net(3, 2, 2, 12, OutputActivation::Tanh);
  for (int trial = 0; trial < 5; ++trial) {
    ParamSet ps;
    ps.push_back(Network::init_params(net, "n", rng.next_u64()));
    net.bind(0);
    const double bound = net.lipschitz_bound(ps);
    for (int pair = 0; pair < 20; ++pair) {
      std::vector<double> x(3), y(3);
      for (int i = 0; i < 3; ++i) {
        x[(std::size_t)i] = rng.uniform(-2, 2);
        y[(std::size_t)i] = x[(std::size_t)i] + rng.uniform(-0.1, 0.1);
      }
      const auto fx = net.eval(ps, x);
      const auto fy = net.eval(ps, y);
      double num = 0, den = 0;
      for (int i = 0; i < 2; ++i) num += (fx[(std::size_t)i] - fy[(std::size_t)i]) * (fx[(std::size_t)i] - fy[(std::size_t)i]);
      for (int i = 0; i < 3; ++i) den += (x[(std::size_t)i] - y[(std::size_t)i]) * (x[(std::size_t)i] - y[(std::size_t)i]);
      if (den == 0) continue;
      CHECK(std::sqrt(num / den) <= bound * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("weight serialization") {
  Network net(3, 1, 2, 7, OutputActivation::UnitBall);
  ParamSet ps;
  ps.push_back(Network::init_params(net, "n", 77));
  net.bind(0);

  std::stringstream ss;
  net.save(ss, ps);
  const std::string blob = ss.str();

  SUBCASE("round trip is bit exact") {
    std::stringstream in(blob);
    std::vector<double> values;
    const Network back = Network::load(in, values);
    CHECK(back.d0() == 3);
    CHECK(back.d1() == 1);
    CHECK(back.activation() == OutputActivation::UnitBall);
    CHECK(values == ps[0].value);
  }
  SUBCASE("truncated stream fails") {
    std::stringstream in(blob.substr(0, blob.size() / 2));
    std::vector<double> values;
    CHECK_THROWS_AS(Network::load(in, values), ArtifactError);
  }
  SUBCASE("wrong version is reported") {
    std::string bad = blob;
    bad[4] = 9;  // version byte
    std::stringstream in(bad);
    std::vector<double> values;
    CHECK_THROWS_WITH_AS(Network::load(in, values),
                         doctest::Contains("version"), ArtifactError);
  }
  SUBCASE("bad magic fails") {
    std::string bad = blob;
    bad[0] = 'X';
    std::stringstream in(bad);
    std::vector<double> values;
    CHECK_THROWS_AS(Network::load(in, values), ArtifactError);
  }
}
