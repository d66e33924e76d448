#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "reachnet/common.hpp"

namespace reachnet {

// A named flat parameter vector (one network = one group). Storage is stable
// after construction; tapes keep raw pointers into it.
struct ParamGroup {
  std::string name;
  std::vector<double> value;
};

using ParamSet = std::vector<ParamGroup>;

// Gradient accumulator mirroring a ParamSet's shapes. Tapes add into it on
// backward; callers zero it at batch boundaries.
struct GradBuffer {
  std::vector<std::vector<double>> slots;

  void init(const ParamSet& ps) {
    slots.clear();
    slots.reserve(ps.size());
    for (const auto& g : ps) slots.emplace_back(g.value.size(), 0.0);
  }
  void zero() {
    for (auto& s : slots)
      for (double& v : s) v = 0.0;
  }
  void add(const GradBuffer& other) {
    for (std::size_t i = 0; i < slots.size(); ++i)
      for (std::size_t j = 0; j < slots[i].size(); ++j) slots[i][j] += other.slots[i][j];
  }
};

// Handle to a tape node.
struct Val {
  int id = -1;
  int len = 0;
  bool valid() const { return id >= 0; }
};

enum class Op : std::uint8_t {
  Input,
  Const,
  Affine,   // W x + b, W/b referencing external parameter storage
  Relu,
  Tanh,     // componentwise
  UnitBall, // x * tanh(|x|)/|x|, maps into the open unit ball
  Concat,
  Slice,
  Add,
  Sub,
  Neg,
  Scale,    // c * v
  SMul,     // scalar node * vector node
  Div,      // scalar / scalar
  Max2,
  Min2,
  Clamp,    // clamp(s, c0, c1)
  Abs,
  Norm2,    // Euclidean norm, vector -> scalar
  Dot,
  Sin,
  Cos,
  Atan2,    // atan2(a, b)
  Square,   // s*s (scalar convenience)
};

// Reverse-mode tape over flat double arrays. Built eagerly: creating a node
// also computes its value, so a fresh build is a forward pass. forward()
// re-evaluates the recorded graph against updated Input values (used by
// finite-difference checks). Nonsmooth conventions: relu'(0)=0, max/min ties
// route the adjoint to the first argument, clamp'=0 on the boundary,
// abs'(0)=0.
class Tape {
 public:
  explicit Tape(GradBuffer* sink = nullptr) : sink_(sink) {}

  void set_sink(GradBuffer* sink) { sink_ = sink; }

  // Drops all nodes, keeps capacity.
  void clear();

  Val input(std::span<const double> v);
  Val constant(std::span<const double> v);
  Val constant(double x);

  // y = W x + b with W (rows x cols, row-major) and b taken from ps[group] at
  // the given offsets. Gradients accumulate into the sink at the same offsets.
  Val affine(const ParamSet& ps, int group, int w_off, int b_off, int rows, int cols, Val x);

  Val relu(Val v);
  Val tanh(Val v);
  Val unit_ball(Val v);
  Val concat(Val a, Val b);
  Val slice(Val v, int off, int len);
  Val add(Val a, Val b);
  Val sub(Val a, Val b);
  Val neg(Val v);
  Val scale(Val v, double c);
  Val smul(Val s, Val v);
  Val div(Val a, Val b);
  Val max2(Val a, Val b);
  Val min2(Val a, Val b);
  Val clamp(Val s, double lo, double hi);
  Val abs(Val s);
  Val norm2(Val v);
  Val dot(Val a, Val b);
  Val sin(Val s);
  Val cos(Val s);
  Val atan2(Val y, Val x);
  Val square(Val s);

  // Re-runs all recorded computations (after set_input).
  void forward();
  void set_input(Val v, std::span<const double> data);

  // Reverse sweep from a scalar output. Tape-local adjoints are reset on every
  // call; parameter gradients accumulate into the sink (caller-managed).
  void backward(Val out, double seed = 1.0);

  std::span<const double> value(Val v) const { return {val_.data() + node(v).off, (std::size_t)v.len}; }
  double scalar(Val v) const;
  std::span<const double> adjoint(Val v) const { return {adj_.data() + node(v).off, (std::size_t)v.len}; }
  double adjoint_scalar(Val v) const;

  // Smallest distance to a genuine singularity seen during the last
  // forward/build (norm at 0, division, atan2 origin).
  double kink_margin() const { return kink_margin_; }

  // One byte per kink decision (relu sign, max/min winner, clamp region, abs
  // sign) in evaluation order; two evaluations whose signatures differ
  // straddle a kink.
  const std::vector<signed char>& branch_signature() const { return branch_sig_; }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Op op;
    int a = -1, b = -1;  // parent ids
    int off = 0, len = 0;
    double c0 = 0.0, c1 = 0.0;      // op constants
    const double* w = nullptr;      // affine weight block
    const double* bias = nullptr;   // affine bias block
    int group = -1, w_off = 0, b_off = 0, cols = 0;
  };

  const Node& node(Val v) const { return nodes_[(std::size_t)v.id]; }

  Val push(Node n);
  void eval_node(std::size_t i);
  void back_node(std::size_t i);
  void note_margin(double m) {
    if (m < kink_margin_) kink_margin_ = m;
  }

  std::vector<Node> nodes_;
  std::vector<double> val_, adj_;
  std::vector<double> const_pool_;
  std::vector<signed char> branch_sig_;
  GradBuffer* sink_ = nullptr;
  double kink_margin_ = 1e300;
};

// Gradient check report: per-coordinate comparison of reverse-mode against
// central differences. Coordinates whose +/-h evaluations graze a kink are
// skipped, not failed.
struct GradCheckReport {
  int checked = 0;
  int failed = 0;
  int skipped = 0;
  double max_rel_err = 0.0;
  std::vector<int> failed_coords;
  std::vector<int> skipped_coords;
  bool pass() const { return failed == 0 && checked > 0; }
};

// Checks d(out)/d(in) on an already-built tape.
GradCheckReport grad_check(Tape& t, Val in, Val out, std::vector<double> x, double h, double tol);

// Generic closure-based variant used for parameter-space checks: fval(x) is
// the objective, grad(x) its full reverse-mode gradient. coords selects which
// coordinates to test (empty = all).
GradCheckReport grad_check_fn(const std::function<double(const std::vector<double>&)>& fval,
                              const std::function<std::vector<double>(const std::vector<double>&)>& grad,
                              std::vector<double> x, double h, double tol,
                              const std::vector<int>& coords = {});

}  // namespace reachnet
