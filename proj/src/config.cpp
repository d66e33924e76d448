#include "reachnet/config.hpp"

#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "reachnet/common.hpp"
#include "reachnet/metrics.hpp"

namespace reachnet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "run.preset", "run.mode", "run.seed", "run.out", "run.workers",
      "game.steps", "game.substeps", "game.horizon",
      "net.hidden", "net.width",
      "minimax.algorithm", "minimax.optimizer", "minimax.m_epoch", "minimax.m_epoch_pote",
      "minimax.n_batch", "minimax.eta", "minimax.rho", "minimax.gamma",
      "eval.grid_res", "eval.compare_tol",
      "oracle.submode", "oracle.res", "oracle.control_points", "oracle.steps",
      "oracle.ref_steps", "oracle.instances",
      "bench.kind", "bench.n_list", "bench.runs", "bench.threshold",
  };
  return keys;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line, section = "run";
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!known_keys().count(key)) throw ConfigError("config: unknown key '" + key + "'");
    kv[key] = value;
  }

  RunConfig cfg;
  auto gets = [&](const char* k, std::string& out) {
    auto it = kv.find(k);
    if (it != kv.end()) out = it->second;
  };
  auto geti = [&](const char* k, int& out) {
    auto it = kv.find(k);
    if (it == kv.end()) return;
    try {
      out = std::stoi(it->second);
    } catch (...) {
      throw ConfigError(std::string("config: bad integer for ") + k);
    }
  };
  auto getd = [&](const char* k, double& out) {
    auto it = kv.find(k);
    if (it == kv.end()) return;
    try {
      out = std::stod(it->second);
    } catch (...) {
      throw ConfigError(std::string("config: bad number for ") + k);
    }
  };

  gets("run.preset", cfg.preset_name);
  if (kv.count("run.mode")) cfg.mode = parse_mode(kv["run.mode"]);
  if (kv.count("run.seed")) {
    try {
      cfg.seed = std::stoull(kv["run.seed"]);
    } catch (...) {
      throw ConfigError("config: bad seed");
    }
  }
  gets("run.out", cfg.out_dir);
  geti("run.workers", cfg.workers);
  geti("game.steps", cfg.steps);
  geti("game.substeps", cfg.substeps);
  getd("game.horizon", cfg.horizon);
  geti("net.hidden", cfg.net_hidden);
  geti("net.width", cfg.net_width);
  gets("minimax.algorithm", cfg.algorithm);
  gets("minimax.optimizer", cfg.optimizer);
  geti("minimax.m_epoch", cfg.m_epoch);
  geti("minimax.m_epoch_pote", cfg.m_epoch_pote);
  geti("minimax.n_batch", cfg.n_batch);
  getd("minimax.eta", cfg.eta);
  getd("minimax.rho", cfg.rho);
  getd("minimax.gamma", cfg.gamma);
  geti("eval.grid_res", cfg.eval_res);
  getd("eval.compare_tol", cfg.compare_tol);
  gets("oracle.submode", cfg.oracle_submode);
  geti("oracle.res", cfg.oracle_res);
  geti("oracle.control_points", cfg.oracle_ctrl);
  geti("oracle.steps", cfg.oracle_steps);
  geti("oracle.ref_steps", cfg.oracle_ref_steps);
  geti("oracle.instances", cfg.oracle_instances);
  gets("bench.kind", cfg.bench_kind);
  if (kv.count("bench.n_list")) {
    std::stringstream ss(kv["bench.n_list"]);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      if (!tok.empty()) cfg.bench_n_list.push_back(std::stoi(tok));
    }
  }
  geti("bench.runs", cfg.bench_runs);
  getd("bench.threshold", cfg.bench_threshold);

  if (cfg.workers < 1) throw ConfigError("config: workers must be >= 1");
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

Preset RunConfig::resolve() const {
  Preset p = preset(preset_name);
  if (steps > 0) p.spec.steps = steps;
  if (substeps > 0) p.spec.scheme.substeps = substeps;
  if (horizon > 0.0) p.spec.horizon = horizon;
  if (net_hidden > 0) p.net_hidden = net_hidden;
  if (net_width > 0) p.net_width = net_width;
  if (!algorithm.empty()) p.config.algorithm = parse_algorithm(algorithm);
  if (!optimizer.empty()) p.config.optimizer = parse_optimizer(optimizer);
  if (m_epoch >= 0) p.config.m_epoch = m_epoch;
  if (m_epoch_pote > 0) p.config.m_epoch_pote = m_epoch_pote;
  if (n_batch > 0) p.config.n_batch = n_batch;
  if (eta > 0.0) p.config.eta = eta;
  if (rho > 0.0) p.config.rho = rho;
  if (gamma > 0.0) p.config.gamma = gamma;
  p.config.workers = workers;
  return p;
}

void write_config_snapshot(std::ostream& os, const RunConfig& cfg) {
  const Preset p = cfg.resolve();
  os << "[run]\n";
  os << "preset = " << cfg.preset_name << "\n";
  os << "mode = " << to_string(cfg.mode) << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "out = " << cfg.out_dir << "\n";
  os << "workers = " << cfg.workers << "\n";
  os << "[game]\n";
  os << "steps = " << p.spec.steps << "\n";
  os << "substeps = " << p.spec.scheme.substeps << "\n";
  os << "horizon = " << format_double(p.spec.horizon) << "\n";
  os << "[net]\n";
  os << "hidden = " << p.net_hidden << "\n";
  os << "width = " << p.net_width << "\n";
  os << "[minimax]\n";
  os << "algorithm = " << to_string(p.config.algorithm) << "\n";
  os << "optimizer = " << to_string(p.config.optimizer) << "\n";
  os << "m_epoch = " << p.config.m_epoch << "\n";
  os << "m_epoch_pote = " << p.config.m_epoch_pote << "\n";
  os << "n_batch = " << p.config.n_batch << "\n";
  os << "eta = " << format_double(p.config.eta) << "\n";
  os << "rho = " << format_double(p.config.rho) << "\n";
  os << "gamma = " << format_double(p.config.gamma) << "\n";
  os << "[eval]\n";
  os << "grid_res = " << cfg.eval_res << "\n";
  os << "compare_tol = " << format_double(cfg.compare_tol) << "\n";
  os << "[oracle]\n";
  os << "submode = " << cfg.oracle_submode << "\n";
  os << "res = " << cfg.oracle_res << "\n";
  os << "control_points = " << cfg.oracle_ctrl << "\n";
  os << "steps = " << (cfg.oracle_steps > 0 ? cfg.oracle_steps : p.spec.steps) << "\n";
  os << "ref_steps = " << cfg.oracle_ref_steps << "\n";
  os << "instances = " << cfg.oracle_instances << "\n";
  if (!cfg.bench_kind.empty()) {
    os << "[bench]\n";
    os << "kind = " << cfg.bench_kind << "\n";
    if (!cfg.bench_n_list.empty()) {
      os << "n_list = ";
      for (std::size_t i = 0; i < cfg.bench_n_list.size(); ++i)
        os << cfg.bench_n_list[i] << (i + 1 < cfg.bench_n_list.size() ? "," : "");
      os << "\n";
    }
    os << "runs = " << cfg.bench_runs << "\n";
    os << "threshold = " << format_double(cfg.bench_threshold) << "\n";
  }
}

}  // namespace reachnet
