#include "reachnet/nn.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "reachnet/common.hpp"

namespace reachnet {

namespace {
constexpr char kMagic[4] = {'R', 'N', 'W', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = (unsigned char)((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw ArtifactError("weight file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= (std::uint32_t)b[i] << (8 * i);
  return v;
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (unsigned char)((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw ArtifactError("weight file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= (std::uint64_t)b[i] << (8 * i);
  return v;
}

void put_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(os, bits);
}

double get_f64(std::istream& is) {
  const std::uint64_t bits = get_u64(is);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}
}  // namespace

Network::Network(int d0, int d1, int hidden_layers, int width, OutputActivation xi)
    : d0_(d0), d1_(d1), layers_(hidden_layers), width_(width), xi_(xi) {
  if (d0 < 1 || d1 < 1 || width < 1 || hidden_layers < 1)
    throw ConfigError("network dimensions must be positive");
  build_layout();
}

void Network::build_layout() {
  layers_desc_.clear();
  int off = 0;
  int in = d0_;
  for (int l = 0; l <= layers_; ++l) {
    const int out = (l == layers_) ? d1_ : width_;
    Layer lay;
    lay.rows = out;
    lay.cols = in;
    lay.w_off = off;
    off += out * in;
    lay.b_off = off;
    off += out;
    layers_desc_.push_back(lay);
    in = out;
  }
}

int Network::param_count(int d0, int d1, int L, int m) {
  return (d0 * m + m) + (L - 1) * (m * m + m) + (m * d1 + d1);
}

int Network::param_count() const { return param_count(d0_, d1_, layers_, width_); }

ParamGroup Network::init_params(const Network& net, std::string name, std::uint64_t seed) {
  ParamGroup g;
  g.name = std::move(name);
  g.value.assign((std::size_t)net.param_count(), 0.0);
  Rng rng(seed);
  for (const Layer& lay : net.layers_desc_) {
    const double bound = std::sqrt(6.0 / (double)(lay.cols + lay.rows));
    for (int k = 0; k < lay.rows * lay.cols; ++k)
      g.value[(std::size_t)(lay.w_off + k)] = rng.uniform(-bound, bound);
    // biases stay zero
  }
  return g;
}

Val Network::forward(Tape& t, const ParamSet& ps, Val x) const {
  if (x.len != d0_) throw ConfigError("network input dimension mismatch");
  if (group_ < 0) throw ConfigError("network not bound to a parameter group");
  Val h = x;
  for (std::size_t l = 0; l < layers_desc_.size(); ++l) {
    const Layer& lay = layers_desc_[l];
    h = t.affine(ps, group_, lay.w_off, lay.b_off, lay.rows, lay.cols, h);
    if (l + 1 < layers_desc_.size()) h = t.relu(h);
  }
  switch (xi_) {
    case OutputActivation::Identity: return h;
    case OutputActivation::Tanh: return t.tanh(h);
    case OutputActivation::UnitBall: return t.unit_ball(h);
  }
  return h;
}

std::vector<double> Network::eval(const ParamSet& ps, const std::vector<double>& x) const {
  Tape t;
  Val in = t.input(x);
  Val out = forward(t, ps, in);
  auto v = t.value(out);
  return {v.begin(), v.end()};
}

double Network::lipschitz_bound(const ParamSet& ps, int iters) const {
  const std::vector<double>& p = ps[(std::size_t)group_].value;
  double bound = 1.0;
  for (const Layer& lay : layers_desc_) {
    // power iteration on W^T W
    std::vector<double> v((std::size_t)lay.cols, 1.0 / std::sqrt((double)lay.cols));
    std::vector<double> wv((std::size_t)lay.rows);
    double sigma = 0.0;
    for (int it = 0; it < iters; ++it) {
      for (int r = 0; r < lay.rows; ++r) {
        double acc = 0.0;
        const double* wr = p.data() + lay.w_off + (std::size_t)r * lay.cols;
        for (int c = 0; c < lay.cols; ++c) acc += wr[c] * v[(std::size_t)c];
        wv[(std::size_t)r] = acc;
      }
      std::vector<double> u((std::size_t)lay.cols, 0.0);
      for (int r = 0; r < lay.rows; ++r) {
        const double* wr = p.data() + lay.w_off + (std::size_t)r * lay.cols;
        for (int c = 0; c < lay.cols; ++c) u[(std::size_t)c] += wr[c] * wv[(std::size_t)r];
      }
      double nrm = 0.0;
      for (double z : u) nrm += z * z;
      nrm = std::sqrt(nrm);
      if (nrm == 0.0) break;
      sigma = std::sqrt(nrm);
      for (std::size_t c = 0; c < u.size(); ++c) v[c] = u[c] / nrm;
    }
    bound *= sigma * 1.0000001 + 1e-12;  // slack so the bound is an upper bound
  }
  return bound;
}

void Network::save(std::ostream& os, const ParamSet& ps) const {
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, (std::uint32_t)d0_);
  put_u32(os, (std::uint32_t)d1_);
  put_u32(os, (std::uint32_t)layers_);
  put_u32(os, (std::uint32_t)width_);
  put_u32(os, (std::uint32_t)xi_);
  const std::vector<double>& p = ps[(std::size_t)group_].value;
  put_u64(os, (std::uint64_t)p.size());
  for (double d : p) put_f64(os, d);
}

Network Network::load(std::istream& is, std::vector<double>& values) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw ArtifactError("weight file: bad magic");
  const std::uint32_t version = get_u32(is);
  if (version != kVersion)
    throw ArtifactError("weight file: unsupported version " + std::to_string(version));
  const int d0 = (int)get_u32(is);
  const int d1 = (int)get_u32(is);
  const int L = (int)get_u32(is);
  const int m = (int)get_u32(is);
  const std::uint32_t xi = get_u32(is);
  if (xi > 2) throw ArtifactError("weight file: bad activation kind");
  Network net(d0, d1, L, m, (OutputActivation)xi);
  const std::uint64_t count = get_u64(is);
  if (count != (std::uint64_t)net.param_count()) throw ArtifactError("weight file: parameter count mismatch");
  values.resize((std::size_t)count);
  for (std::size_t k = 0; k < count; ++k) values[k] = get_f64(is);
  return net;
}

}  // namespace reachnet
