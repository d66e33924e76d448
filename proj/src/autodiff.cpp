#include "reachnet/autodiff.hpp"

#include <cassert>
#include <cmath>
#include <cstring>

namespace reachnet {

namespace {

// tanh(r)/r, series below 1e-4 so the unit-ball map is exact through r = 0.
inline double tanh_over_r(double r) {
  if (r < 1e-4) {
    const double r2 = r * r;
    return 1.0 - r2 / 3.0 + 2.0 * r2 * r2 / 15.0;
  }
  return std::tanh(r) / r;
}

// d/dr [tanh(r)/r] / r, finite at r = 0 (limit -2/3).
inline double dtanh_over_r_over_r(double r) {
  if (r < 1e-4) {
    const double r2 = r * r;
    return -2.0 / 3.0 + 8.0 * r2 / 15.0;
  }
  const double t = std::tanh(r);
  return ((1.0 - t * t) * r - t) / (r * r * r);
}

}  // namespace

void Tape::clear() {
  nodes_.clear();
  val_.clear();
  adj_.clear();
  const_pool_.clear();
  branch_sig_.clear();
  kink_margin_ = 1e300;
}

Val Tape::push(Node n) {
  const int id = static_cast<int>(nodes_.size());
  n.off = static_cast<int>(val_.size());
  val_.resize(val_.size() + (std::size_t)n.len);
  nodes_.push_back(n);
  eval_node((std::size_t)id);
  return Val{id, n.len};
}

Val Tape::input(std::span<const double> v) {
  Node n;
  n.op = Op::Input;
  n.len = static_cast<int>(v.size());
  const int pool_off = static_cast<int>(const_pool_.size());
  const_pool_.insert(const_pool_.end(), v.begin(), v.end());
  n.group = pool_off;  // inputs keep their data in the const pool
  return push(n);
}

Val Tape::constant(std::span<const double> v) {
  Node n;
  n.op = Op::Const;
  n.len = static_cast<int>(v.size());
  const int pool_off = static_cast<int>(const_pool_.size());
  const_pool_.insert(const_pool_.end(), v.begin(), v.end());
  n.group = pool_off;
  return push(n);
}

Val Tape::constant(double x) { return constant(std::span<const double>(&x, 1)); }

Val Tape::affine(const ParamSet& ps, int group, int w_off, int b_off, int rows, int cols, Val x) {
  if (x.len != cols) throw ConfigError("affine: input length mismatch");
  Node n;
  n.op = Op::Affine;
  n.a = x.id;
  n.len = rows;
  n.w = ps[(std::size_t)group].value.data() + w_off;
  n.bias = ps[(std::size_t)group].value.data() + b_off;
  n.group = group;
  n.w_off = w_off;
  n.b_off = b_off;
  n.cols = cols;
  return push(n);
}

#define RN_UNARY(fn, OPK)                    \
  Val Tape::fn(Val v) {                      \
    Node n;                                  \
    n.op = Op::OPK;                          \
    n.a = v.id;                              \
    n.len = v.len;                           \
    return push(n);                          \
  }

RN_UNARY(relu, Relu)
RN_UNARY(tanh, Tanh)
RN_UNARY(unit_ball, UnitBall)
RN_UNARY(neg, Neg)
#undef RN_UNARY

Val Tape::concat(Val a, Val b) {
  Node n;
  n.op = Op::Concat;
  n.a = a.id;
  n.b = b.id;
  n.len = a.len + b.len;
  return push(n);
}

Val Tape::slice(Val v, int off, int len) {
  if (off < 0 || off + len > v.len) throw ConfigError("slice: out of range");
  Node n;
  n.op = Op::Slice;
  n.a = v.id;
  n.len = len;
  n.c0 = off;
  return push(n);
}

Val Tape::add(Val a, Val b) {
  assert(a.len == b.len);
  Node n;
  n.op = Op::Add;
  n.a = a.id;
  n.b = b.id;
  n.len = a.len;
  return push(n);
}

Val Tape::sub(Val a, Val b) {
  assert(a.len == b.len);
  Node n;
  n.op = Op::Sub;
  n.a = a.id;
  n.b = b.id;
  n.len = a.len;
  return push(n);
}

Val Tape::scale(Val v, double c) {
  Node n;
  n.op = Op::Scale;
  n.a = v.id;
  n.len = v.len;
  n.c0 = c;
  return push(n);
}

Val Tape::smul(Val s, Val v) {
  assert(s.len == 1);
  Node n;
  n.op = Op::SMul;
  n.a = s.id;
  n.b = v.id;
  n.len = v.len;
  return push(n);
}

Val Tape::div(Val a, Val b) {
  assert(a.len == 1 && b.len == 1);
  Node n;
  n.op = Op::Div;
  n.a = a.id;
  n.b = b.id;
  n.len = 1;
  return push(n);
}

Val Tape::max2(Val a, Val b) {
  assert(a.len == 1 && b.len == 1);
  Node n;
  n.op = Op::Max2;
  n.a = a.id;
  n.b = b.id;
  n.len = 1;
  return push(n);
}

Val Tape::min2(Val a, Val b) {
  assert(a.len == 1 && b.len == 1);
  Node n;
  n.op = Op::Min2;
  n.a = a.id;
  n.b = b.id;
  n.len = 1;
  return push(n);
}

Val Tape::clamp(Val s, double lo, double hi) {
  assert(s.len == 1);
  Node n;
  n.op = Op::Clamp;
  n.a = s.id;
  n.len = 1;
  n.c0 = lo;
  n.c1 = hi;
  return push(n);
}

Val Tape::abs(Val s) {
  assert(s.len == 1);
  Node n;
  n.op = Op::Abs;
  n.a = s.id;
  n.len = 1;
  return push(n);
}

Val Tape::norm2(Val v) {
  Node n;
  n.op = Op::Norm2;
  n.a = v.id;
  n.len = 1;
  return push(n);
}

Val Tape::dot(Val a, Val b) {
  assert(a.len == b.len);
  Node n;
  n.op = Op::Dot;
  n.a = a.id;
  n.b = b.id;
  n.len = 1;
  return push(n);
}

Val Tape::sin(Val s) {
  Node n;
  n.op = Op::Sin;
  n.a = s.id;
  n.len = 1;
  return push(n);
}

Val Tape::cos(Val s) {
  Node n;
  n.op = Op::Cos;
  n.a = s.id;
  n.len = 1;
  return push(n);
}

Val Tape::atan2(Val y, Val x) {
  Node n;
  n.op = Op::Atan2;
  n.a = y.id;
  n.b = x.id;
  n.len = 1;
  return push(n);
}

Val Tape::square(Val s) {
  Node n;
  n.op = Op::Square;
  n.a = s.id;
  n.len = s.len;
  return push(n);
}

double Tape::scalar(Val v) const {
  assert(v.len == 1);
  return val_[(std::size_t)node(v).off];
}

double Tape::adjoint_scalar(Val v) const {
  assert(v.len == 1);
  return adj_[(std::size_t)node(v).off];
}

void Tape::set_input(Val v, std::span<const double> data) {
  const Node& n = node(v);
  if (n.op != Op::Input || (int)data.size() != n.len) throw ConfigError("set_input: bad node or length");
  std::memcpy(const_pool_.data() + n.group, data.data(), data.size() * sizeof(double));
}

void Tape::eval_node(std::size_t i) {
  Node& n = nodes_[i];
  double* out = val_.data() + n.off;
  const double* pa = n.a >= 0 ? val_.data() + nodes_[(std::size_t)n.a].off : nullptr;
  const double* pb = n.b >= 0 ? val_.data() + nodes_[(std::size_t)n.b].off : nullptr;
  switch (n.op) {
    case Op::Input:
    case Op::Const:
      std::memcpy(out, const_pool_.data() + n.group, (std::size_t)n.len * sizeof(double));
      break;
    case Op::Affine: {
      const double* w = n.w;
      for (int r = 0; r < n.len; ++r) {
        double acc = n.bias[r];
        const double* wr = w + (std::size_t)r * n.cols;
        for (int c = 0; c < n.cols; ++c) acc += wr[c] * pa[c];
        out[r] = acc;
      }
      break;
    }
    case Op::Relu:
      for (int k = 0; k < n.len; ++k) {
        branch_sig_.push_back(pa[k] > 0.0 ? 1 : 0);
        out[k] = pa[k] > 0.0 ? pa[k] : 0.0;
      }
      break;
    case Op::Tanh:
      for (int k = 0; k < n.len; ++k) out[k] = std::tanh(pa[k]);
      break;
    case Op::UnitBall: {
      double r2 = 0.0;
      for (int k = 0; k < n.len; ++k) r2 += pa[k] * pa[k];
      const double s = tanh_over_r(std::sqrt(r2));
      for (int k = 0; k < n.len; ++k) out[k] = s * pa[k];
      break;
    }
    case Op::Concat: {
      const int la = nodes_[(std::size_t)n.a].len;
      std::memcpy(out, pa, (std::size_t)la * sizeof(double));
      std::memcpy(out + la, pb, (std::size_t)(n.len - la) * sizeof(double));
      break;
    }
    case Op::Slice:
      std::memcpy(out, pa + (int)n.c0, (std::size_t)n.len * sizeof(double));
      break;
    case Op::Add:
      for (int k = 0; k < n.len; ++k) out[k] = pa[k] + pb[k];
      break;
    case Op::Sub:
      for (int k = 0; k < n.len; ++k) out[k] = pa[k] - pb[k];
      break;
    case Op::Neg:
      for (int k = 0; k < n.len; ++k) out[k] = -pa[k];
      break;
    case Op::Scale:
      for (int k = 0; k < n.len; ++k) out[k] = n.c0 * pa[k];
      break;
    case Op::SMul:
      for (int k = 0; k < n.len; ++k) out[k] = pa[0] * pb[k];
      break;
    case Op::Div:
      note_margin(std::fabs(pb[0]));
      out[0] = pa[0] / pb[0];
      break;
    case Op::Max2:
      branch_sig_.push_back(pa[0] >= pb[0] ? 1 : 0);
      out[0] = pa[0] >= pb[0] ? pa[0] : pb[0];
      break;
    case Op::Min2:
      branch_sig_.push_back(pa[0] <= pb[0] ? 1 : 0);
      out[0] = pa[0] <= pb[0] ? pa[0] : pb[0];
      break;
    case Op::Clamp:
      branch_sig_.push_back(pa[0] < n.c0 ? 0 : (pa[0] > n.c1 ? 2 : 1));
      out[0] = pa[0] < n.c0 ? n.c0 : (pa[0] > n.c1 ? n.c1 : pa[0]);
      break;
    case Op::Abs:
      branch_sig_.push_back(pa[0] > 0.0 ? 1 : (pa[0] < 0.0 ? -1 : 0));
      out[0] = std::fabs(pa[0]);
      break;
    case Op::Norm2: {
      double r2 = 0.0;
      const int la = nodes_[(std::size_t)n.a].len;
      for (int k = 0; k < la; ++k) r2 += pa[k] * pa[k];
      const double r = std::sqrt(r2);
      note_margin(r);
      out[0] = r;
      break;
    }
    case Op::Dot: {
      double acc = 0.0;
      const int la = nodes_[(std::size_t)n.a].len;
      for (int k = 0; k < la; ++k) acc += pa[k] * pb[k];
      out[0] = acc;
      break;
    }
    case Op::Sin:
      out[0] = std::sin(pa[0]);
      break;
    case Op::Cos:
      out[0] = std::cos(pa[0]);
      break;
    case Op::Atan2:
      note_margin(std::sqrt(pa[0] * pa[0] + pb[0] * pb[0]));
      out[0] = std::atan2(pa[0], pb[0]);
      break;
    case Op::Square:
      for (int k = 0; k < n.len; ++k) out[k] = pa[k] * pa[k];
      break;
  }
}

void Tape::forward() {
  kink_margin_ = 1e300;
  branch_sig_.clear();
  for (std::size_t i = 0; i < nodes_.size(); ++i) eval_node(i);
}

void Tape::back_node(std::size_t i) {
  const Node& n = nodes_[i];
  const double* g = adj_.data() + n.off;  // this node's adjoint
  const double* pa = n.a >= 0 ? val_.data() + nodes_[(std::size_t)n.a].off : nullptr;
  const double* pb = n.b >= 0 ? val_.data() + nodes_[(std::size_t)n.b].off : nullptr;
  double* ga = n.a >= 0 ? adj_.data() + nodes_[(std::size_t)n.a].off : nullptr;
  double* gb = n.b >= 0 ? adj_.data() + nodes_[(std::size_t)n.b].off : nullptr;
  const double* v = val_.data() + n.off;

  switch (n.op) {
    case Op::Input:
    case Op::Const:
      break;
    case Op::Affine: {
      for (int r = 0; r < n.len; ++r) {
        const double gr = g[r];
        if (gr == 0.0) continue;
        const double* wr = n.w + (std::size_t)r * n.cols;
        for (int c = 0; c < n.cols; ++c) ga[c] += gr * wr[c];
      }
      if (sink_) {
        double* wg = sink_->slots[(std::size_t)n.group].data() + n.w_off;
        double* bg = sink_->slots[(std::size_t)n.group].data() + n.b_off;
        for (int r = 0; r < n.len; ++r) {
          const double gr = g[r];
          if (gr == 0.0) continue;
          double* wgr = wg + (std::size_t)r * n.cols;
          for (int c = 0; c < n.cols; ++c) wgr[c] += gr * pa[c];
          bg[r] += gr;
        }
      }
      break;
    }
    case Op::Relu:
      for (int k = 0; k < n.len; ++k)
        if (pa[k] > 0.0) ga[k] += g[k];
      break;
    case Op::Tanh:
      for (int k = 0; k < n.len; ++k) ga[k] += g[k] * (1.0 - v[k] * v[k]);
      break;
    case Op::UnitBall: {
      double r2 = 0.0, vg = 0.0;
      for (int k = 0; k < n.len; ++k) {
        r2 += pa[k] * pa[k];
        vg += pa[k] * g[k];
      }
      const double r = std::sqrt(r2);
      const double s = tanh_over_r(r);
      const double dsr = dtanh_over_r_over_r(r);
      for (int k = 0; k < n.len; ++k) ga[k] += s * g[k] + vg * pa[k] * dsr;
      break;
    }
    case Op::Concat: {
      const int la = nodes_[(std::size_t)n.a].len;
      for (int k = 0; k < la; ++k) ga[k] += g[k];
      for (int k = la; k < n.len; ++k) gb[k - la] += g[k];
      break;
    }
    case Op::Slice:
      for (int k = 0; k < n.len; ++k) ga[(int)n.c0 + k] += g[k];
      break;
    case Op::Add:
      for (int k = 0; k < n.len; ++k) {
        ga[k] += g[k];
        gb[k] += g[k];
      }
      break;
    case Op::Sub:
      for (int k = 0; k < n.len; ++k) {
        ga[k] += g[k];
        gb[k] -= g[k];
      }
      break;
    case Op::Neg:
      for (int k = 0; k < n.len; ++k) ga[k] -= g[k];
      break;
    case Op::Scale:
      for (int k = 0; k < n.len; ++k) ga[k] += n.c0 * g[k];
      break;
    case Op::SMul:
      for (int k = 0; k < n.len; ++k) {
        ga[0] += g[k] * pb[k];
        gb[k] += g[k] * pa[0];
      }
      break;
    case Op::Div:
      ga[0] += g[0] / pb[0];
      gb[0] -= g[0] * pa[0] / (pb[0] * pb[0]);
      break;
    case Op::Max2:
      if (pa[0] >= pb[0]) ga[0] += g[0];
      else gb[0] += g[0];
      break;
    case Op::Min2:
      if (pa[0] <= pb[0]) ga[0] += g[0];
      else gb[0] += g[0];
      break;
    case Op::Clamp:
      if (pa[0] > n.c0 && pa[0] < n.c1) ga[0] += g[0];
      break;
    case Op::Abs:
      if (pa[0] > 0.0) ga[0] += g[0];
      else if (pa[0] < 0.0) ga[0] -= g[0];
      break;
    case Op::Norm2: {
      const double r = v[0];
      if (r > 0.0) {
        const int la = nodes_[(std::size_t)n.a].len;
        for (int k = 0; k < la; ++k) ga[k] += g[0] * pa[k] / r;
      }
      break;
    }
    case Op::Dot: {
      const int la = nodes_[(std::size_t)n.a].len;
      for (int k = 0; k < la; ++k) {
        ga[k] += g[0] * pb[k];
        gb[k] += g[0] * pa[k];
      }
      break;
    }
    case Op::Sin:
      ga[0] += g[0] * std::cos(pa[0]);
      break;
    case Op::Cos:
      ga[0] -= g[0] * std::sin(pa[0]);
      break;
    case Op::Atan2: {
      const double r2 = pa[0] * pa[0] + pb[0] * pb[0];
      if (r2 > 0.0) {
        ga[0] += g[0] * pb[0] / r2;
        gb[0] -= g[0] * pa[0] / r2;
      }
      break;
    }
    case Op::Square:
      for (int k = 0; k < n.len; ++k) ga[k] += 2.0 * pa[k] * g[k];
      break;
  }
}

void Tape::backward(Val out, double seed) {
  if (out.len != 1) throw ConfigError("backward: output must be scalar");
  adj_.assign(val_.size(), 0.0);
  adj_[(std::size_t)node(out).off] = seed;
  for (std::size_t i = nodes_.size(); i-- > 0;) back_node(i);
}

GradCheckReport grad_check(Tape& t, Val in, Val out, std::vector<double> x, double h, double tol) {
  GradCheckReport rep;
  t.set_input(in, x);
  t.forward();
  t.backward(out);
  std::vector<double> g(t.adjoint(in).begin(), t.adjoint(in).end());

  std::vector<signed char> sig_p, sig_m;
  for (int j = 0; j < (int)x.size(); ++j) {
    const double xj = x[(std::size_t)j];
    bool skip = false;
    double fp = 0.0, fm = 0.0;
    for (int side = 0; side < 2; ++side) {
      x[(std::size_t)j] = xj + (side == 0 ? h : -h);
      t.set_input(in, x);
      t.forward();
      if (t.kink_margin() < 10.0 * h) skip = true;  // near a singularity
      (side == 0 ? sig_p : sig_m) = t.branch_signature();
      (side == 0 ? fp : fm) = t.scalar(out);
    }
    // the +/-h evaluations must take identical kink branches
    if (sig_p != sig_m) skip = true;
    x[(std::size_t)j] = xj;
    if (skip) {
      ++rep.skipped;
      rep.skipped_coords.push_back(j);
      continue;
    }
    const double fd = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::fabs(fd), std::fabs(g[(std::size_t)j]), 1e-8});
    const double rel = std::fabs(fd - g[(std::size_t)j]) / denom;
    rep.max_rel_err = std::max(rep.max_rel_err, rel);
    ++rep.checked;
    if (rel > tol) {
      ++rep.failed;
      rep.failed_coords.push_back(j);
    }
  }
  t.set_input(in, x);
  t.forward();
  return rep;
}

GradCheckReport grad_check_fn(const std::function<double(const std::vector<double>&)>& fval,
                              const std::function<std::vector<double>(const std::vector<double>&)>& grad,
                              std::vector<double> x, double h, double tol,
                              const std::vector<int>& coords) {
  GradCheckReport rep;
  const std::vector<double> g = grad(x);
  std::vector<int> sel = coords;
  if (sel.empty()) {
    sel.resize(x.size());
    for (int j = 0; j < (int)x.size(); ++j) sel[(std::size_t)j] = j;
  }
  for (int j : sel) {
    const double xj = x[(std::size_t)j];
    x[(std::size_t)j] = xj + h;
    const double fp = fval(x);
    x[(std::size_t)j] = xj - h;
    const double fm = fval(x);
    x[(std::size_t)j] = xj;
    const double fd = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::fabs(fd), std::fabs(g[(std::size_t)j]), 1e-8});
    const double rel = std::fabs(fd - g[(std::size_t)j]) / denom;
    rep.max_rel_err = std::max(rep.max_rel_err, rel);
    ++rep.checked;
    if (rel > tol) {
      ++rep.failed;
      rep.failed_coords.push_back(j);
    }
  }
  return rep;
}

}  // namespace reachnet
