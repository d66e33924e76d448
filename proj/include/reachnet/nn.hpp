#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "reachnet/autodiff.hpp"
#include "reachnet/rng.hpp"

namespace reachnet {

enum class OutputActivation : std::uint32_t { Identity = 0, Tanh = 1, UnitBall = 2 };

// Feedforward network with L hidden layers of m ReLU units and a bounded
// output activation: d0 -> m -> ... -> m -> d1. Parameters live flat in one
// ParamGroup, layer by layer, weights (row-major) then biases.
class Network {
 public:
  Network() = default;
  Network(int d0, int d1, int hidden_layers, int width, OutputActivation xi);

  // Glorot-uniform weights, zero biases; deterministic in the seed.
  static ParamGroup init_params(const Network& net, std::string name, std::uint64_t seed);

  int d0() const { return d0_; }
  int d1() const { return d1_; }
  int hidden_layers() const { return layers_; }
  int width() const { return width_; }
  OutputActivation activation() const { return xi_; }
  int param_count() const;
  static int param_count(int d0, int d1, int hidden_layers, int width);

  void bind(int group) { group_ = group; }
  int group() const { return group_; }

  Val forward(Tape& t, const ParamSet& ps, Val x) const;

  // Convenience: plain evaluation through a scratch tape.
  std::vector<double> eval(const ParamSet& ps, const std::vector<double>& x) const;

  // Per-layer spectral norm upper bounds via power iteration; their product
  // bounds the network's Lipschitz constant (ReLU/tanh/unit-ball are
  // 1-Lipschitz).
  double lipschitz_bound(const ParamSet& ps, int iters = 50) const;

  void save(std::ostream& os, const ParamSet& ps) const;
  // Reads the header, reconstructs the shape and parameter values.
  static Network load(std::istream& is, std::vector<double>& values);

 private:
  struct Layer {
    int w_off, b_off, rows, cols;
  };
  const std::vector<Layer>& layout() const { return layers_desc_; }
  void build_layout();

  int d0_ = 0, d1_ = 0, layers_ = 0, width_ = 0;
  OutputActivation xi_ = OutputActivation::Identity;
  int group_ = -1;
  std::vector<Layer> layers_desc_;
};

}  // namespace reachnet
