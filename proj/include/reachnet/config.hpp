#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "reachnet/benchmarks.hpp"

namespace reachnet {

// Flat sectioned key=value run configuration. Unknown keys are rejected at
// parse time; values missing from the file keep the preset's defaults.
struct RunConfig {
  // [run]
  std::string preset_name = "ex2";
  SchemeMode mode = SchemeMode::Global;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int workers = 1;
  // [game]
  int steps = -1;     // -1: preset default
  int substeps = -1;
  double horizon = -1.0;
  // [net]
  int net_hidden = -1;
  int net_width = -1;
  // [minimax] overrides; negative/empty means preset default
  std::string algorithm, optimizer;
  int m_epoch = -1, m_epoch_pote = -1, n_batch = -1;
  double eta = -1.0, rho = -1.0, gamma = -1.0;
  // [eval]
  int eval_res = 101;
  double compare_tol = 0.05;
  // [oracle]
  std::string oracle_submode = "grid";
  int oracle_res = 201;
  int oracle_ctrl = 41;
  int oracle_steps = -1;
  int oracle_ref_steps = 64;
  int oracle_instances = 1;
  // [bench]
  std::string bench_kind;
  std::vector<int> bench_n_list;
  int bench_runs = 10;
  double bench_threshold = 0.1;

  // Effective preset with all overrides applied.
  Preset resolve() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);
void write_config_snapshot(std::ostream& os, const RunConfig& cfg);

}  // namespace reachnet
