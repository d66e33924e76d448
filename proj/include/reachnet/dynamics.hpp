#pragma once

#include <functional>
#include <vector>

#include "reachnet/autodiff.hpp"

namespace reachnet {

// Controlled dynamics f(x, a, b). Each game defines the map twice from the
// same arithmetic (see benchmarks.cpp): once as a tape builder for training
// and once as a raw evaluator for the grid oracle's hot loops; a property
// test pins the two together.
struct Dynamics {
  int dim = 0;     // state dimension d
  int dim_a = 0;   // control dimension n_A
  int dim_b = 0;   // control dimension n_B
  std::function<Val(Tape&, Val x, Val a, Val b)> build;
  std::function<void(const double* x, const double* a, const double* b, double* out)> raw;
  bool state_independent = false;  // f does not depend on x
  // optional Lipschitz hints in (x, a, b); 0 means unspecified
  double lip_x = 0.0, lip_a = 0.0, lip_b = 0.0;
};

// Scalar field on the state (terminal cost, obstacle).
struct StateCost {
  std::function<Val(Tape&, Val x)> build;
  std::function<double(const double* x)> raw;
  bool present() const { return static_cast<bool>(raw); }
};

enum class StepKind { Euler, HeunMultistep };

struct StepScheme {
  StepKind kind = StepKind::HeunMultistep;
  int substeps = 5;  // p
};

// One Heun (RK2 trapezoidal) substep: x + (h/2)(f(x) + f(x + h f(x))).
void heun_step_raw(const Dynamics& dyn, const double* x, const double* a, const double* b,
                   double h, double* out);

// p substeps of size dt/p with the controls held fixed; Euler means a single
// forward-Euler step of size dt.
void multi_step_raw(const Dynamics& dyn, const StepScheme& sch, const double* x, const double* a,
                    const double* b, double dt, double* out);

// max_{0 <= j < p} g(Y_j) over the substep trajectory; Y_0 = x, the endpoint
// Y_p is excluded (it is the next step's Y_0).
double substep_max_raw(const Dynamics& dyn, const StepScheme& sch, const StateCost& g,
                       const double* x, const double* a, const double* b, double dt);

// Tape versions of the same maps.
Val heun_step(Tape& t, const Dynamics& dyn, Val x, Val a, Val b, double h);
Val multi_step(Tape& t, const Dynamics& dyn, const StepScheme& sch, Val x, Val a, Val b, double dt);
// Returns the substep max of g as a scalar node (requires g.present()).
Val substep_max(Tape& t, const Dynamics& dyn, const StepScheme& sch, const StateCost& g, Val x,
                Val a, Val b, double dt);

}  // namespace reachnet
