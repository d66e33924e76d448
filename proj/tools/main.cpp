#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "reachnet/config.hpp"
#include "reachnet/metrics.hpp"
#include "reachnet/oracle.hpp"

namespace fs = std::filesystem;
using namespace reachnet;

namespace {

struct CliOverrides {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string compare_dir;  // evaluate only
};

RunConfig load(const CliOverrides& o) {
  RunConfig cfg = parse_config_file(o.config_path);
  if (o.out) cfg.out_dir = *o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  return cfg;
}

void prepare_out(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  fs::create_directories(fs::path(cfg.out_dir) / "weights");
  fs::create_directories(fs::path(cfg.out_dir) / "grids");
  fs::create_directories(fs::path(cfg.out_dir) / "tables");
  std::ofstream os(fs::path(cfg.out_dir) / "config.cfg");
  write_config_snapshot(os, cfg);
}

void write_trace(const std::string& out_dir, const std::vector<TraceRow>& trace) {
  std::ofstream os(fs::path(out_dir) / "trace.csv");
  os << "epoch,outer_loss,inner_loss,wall_s\n";
  for (const TraceRow& r : trace)
    os << r.epoch << ',' << format_double(r.outer_loss) << ',' << format_double(r.inner_loss)
       << ',' << format_double(r.wall_s) << '\n';
}

TrainResult run_training(const RunConfig& cfg, const Preset& p) {
  switch (cfg.mode) {
    case SchemeMode::Global:
      return algorithm1_global(p.spec, p.config, cfg.seed, p.net_hidden, p.net_width);
    case SchemeMode::Local:
      return algorithm2_local(p.spec, p.config, cfg.seed, p.net_hidden, p.net_width);
    case SchemeMode::Reversed:
      return reversed_supinf(p.spec, p.config, cfg.seed, p.net_hidden, p.net_width);
  }
  throw ConfigError("bad mode");
}

// Value grid over the sampling box; states beyond 2-D are sliced through the
// box midpoint unless the preset names a canonical cut (ex4: adverse start).
GridValue value_grid(const Preset& p, const StrategyPair& sp, const ParamSet& ps, int res) {
  const GameSpec& spec = p.spec;
  std::vector<double> slice((std::size_t)spec.dyn.dim, 0.0);
  for (int i = 2; i < spec.dyn.dim; ++i)
    slice[(std::size_t)i] =
        0.5 * (spec.omega_lo[(std::size_t)i] + spec.omega_hi[(std::size_t)i]);
  if (spec.name == "ex4") {
    slice[2] = 0.0;
    slice[3] = -2.0;
  }
  auto fn = [&](const double* x2) {
    std::vector<double> x = slice;
    x[0] = x2[0];
    x[1] = x2[1];
    return value_estimate(spec, sp, ps, x);
  };
  LevelSetGrid g = level_set_grid(fn, {spec.omega_lo[0], spec.omega_lo[1]},
                                  {spec.omega_hi[0], spec.omega_hi[1]}, {res, res});
  return g.values;
}

std::vector<double> reference_on_grid(const Preset& p, const GridValue& grid, int workers,
                                      int oracle_res, int oracle_ctrl, int oracle_steps) {
  std::vector<double> ref(grid.data.size(), 0.0);
  if (p.reference == ReferenceKind::Analytic) {
    for (std::size_t k = 0; k < grid.data.size(); ++k) {
      const std::vector<double> x = grid.node_coord(k);
      ref[k] = p.reference_fn(x.data());
    }
    return ref;
  }
  if (p.reference == ReferenceKind::GridDpp) {
    GameSpec s = p.spec;
    if (oracle_steps > 0) s.steps = oracle_steps;
    const ControlGrid ca = control_grid_for(s.xi_a, s.dyn.dim_a, oracle_ctrl);
    const ControlGrid cb = control_grid_for(s.xi_b, s.dyn.dim_b, oracle_ctrl);
    const std::vector<int> res((std::size_t)s.dyn.dim, oracle_res);
    const auto levels = grid_dpp_solve(s, p.oracle_lo, p.oracle_hi, res, ca, cb, workers);
    for (std::size_t k = 0; k < grid.data.size(); ++k) {
      const std::vector<double> x = grid.node_coord(k);
      ref[k] = levels[0].interp(x.data());
    }
    return ref;
  }
  throw ConfigError("preset has no reference solution");
}

int cmd_train(const CliOverrides& o) {
  const RunConfig cfg = load(o);
  const Preset p = cfg.resolve();
  prepare_out(cfg);
  const TrainResult r = run_training(cfg, p);
  save_strategies((fs::path(cfg.out_dir) / "weights").string(), r.strategies, r.params);
  write_trace(cfg.out_dir, r.trace);
  std::cout << "trained " << p.spec.name << " mode=" << to_string(cfg.mode) << " epochs="
            << p.config.m_epoch << " final_loss="
            << (r.trace.empty() ? 0.0 : r.trace.back().outer_loss) << "\n";
  return 0;
}

int cmd_evaluate(const CliOverrides& o) {
  const RunConfig cfg = load(o);
  const Preset p = cfg.resolve();
  prepare_out(cfg);
  ParamSet ps;
  StrategyPair sp = load_strategies((fs::path(cfg.out_dir) / "weights").string(), p.spec.steps,
                                    cfg.mode == SchemeMode::Reversed, ps);
  for (const Network& n : sp.alpha)
    if (n.d1() != p.spec.dyn.dim_a) throw ArtifactError("weights do not match the game dims");
  const GridValue grid = value_grid(p, sp, ps, cfg.eval_res);
  write_grid_csv_file((fs::path(cfg.out_dir) / "grids" / "value.csv").string(), grid);
  {
    std::vector<int> signs(grid.data.size());
    for (std::size_t k = 0; k < signs.size(); ++k) signs[k] = grid.data[k] < 0.0 ? -1 : 1;
    std::ofstream os(fs::path(cfg.out_dir) / "grids" / "sign.csv");
    write_sign_csv(os, grid, signs);
  }

  if (!o.compare_dir.empty()) {
    const GridValue other = read_grid_csv_file((fs::path(o.compare_dir) / "grids" / "value.csv").string());
    if (other.data.size() != grid.data.size()) throw ArtifactError("compare grids differ in shape");
    long viol = 0;
    double worst = 0.0;
    for (std::size_t k = 0; k < grid.data.size(); ++k) {
      const double excess = grid.data[k] - (other.data[k] + cfg.compare_tol);
      if (excess > 0.0) ++viol;
      worst = std::max(worst, grid.data[k] - other.data[k]);
    }
    const double frac = (double)viol / (double)grid.data.size();
    std::ofstream os(fs::path(cfg.out_dir) / "tables" / "compare.csv");
    os << "violation_fraction,worst_gap,tolerance\n"
       << format_double(frac) << ',' << format_double(worst) << ','
       << format_double(cfg.compare_tol) << "\n";
    std::cout << "ordering violation fraction (this > other + " << cfg.compare_tol
              << "): " << frac << " worst gap " << worst << "\n";
  }

  if (p.reference != ReferenceKind::None) {
    const std::vector<double> ref = reference_on_grid(p, grid, cfg.workers, cfg.oracle_res,
                                                      cfg.oracle_ctrl, cfg.oracle_steps);
    const ErrorReport rep = error_report(grid.data, ref, 0.2);
    std::ofstream os(fs::path(cfg.out_dir) / "tables" / "report.csv");
    os << "e_l1_loc,l1_global,sign_agreement,band_count,eta_loc\n";
    os << format_double(rep.l1_loc) << ',' << format_double(rep.l1_global) << ','
       << format_double(rep.sign_agreement) << ',' << rep.band_count << ','
       << format_double(rep.eta_loc) << "\n";
    std::cout << "e_l1_loc=" << rep.l1_loc << " l1_global=" << rep.l1_global
              << " sign_agreement=" << rep.sign_agreement << "\n";
  }
  return 0;
}

int cmd_oracle(const CliOverrides& o) {
  const RunConfig cfg = load(o);
  prepare_out(cfg);
  if (cfg.oracle_submode == "grid") {
    const Preset p = cfg.resolve();
    GameSpec s = p.spec;
    if (cfg.oracle_steps > 0) s.steps = cfg.oracle_steps;
    const ControlGrid ca = control_grid_for(s.xi_a, s.dyn.dim_a, cfg.oracle_ctrl);
    const ControlGrid cb = control_grid_for(s.xi_b, s.dyn.dim_b, cfg.oracle_ctrl);
    const std::vector<int> res((std::size_t)s.dyn.dim, cfg.oracle_res);
    const auto levels = grid_dpp_solve(s, p.oracle_lo, p.oracle_hi, res, ca, cb, cfg.workers);
    write_grid_csv_file((fs::path(cfg.out_dir) / "grids" / "oracle_v0.csv").string(), levels[0]);
    std::cout << "oracle grid written: " << s.name << " N=" << s.steps << " res=" << cfg.oracle_res
              << "\n";
    return 0;
  }
  if (cfg.oracle_submode == "equivalence") {
    Rng rng(cfg.seed);
    double max_gap = 0.0;
    for (int i = 0; i < cfg.oracle_instances; ++i) {
      const FiniteInstance inst = random_instance(rng, 3, 2, 2, 3);
      const ValueAgreement v = enumerate_value_definitions(inst);
      const double gap = std::max(std::fabs(v.v_tree - v.v_alternate),
                                  std::fabs(v.v_feedback - v.v_alternate));
      max_gap = std::max(max_gap, gap);
      std::cout << "instance " << i << ": tree=" << format_double(v.v_tree)
                << " alternate=" << format_double(v.v_alternate)
                << " feedback=" << format_double(v.v_feedback) << "\n";
    }
    std::cout << "max pairwise gap: " << format_double(max_gap) << "\n";
    if (max_gap > 1e-12) throw NumericError("value definitions disagree");
    return 0;
  }
  if (cfg.oracle_submode == "rate-check") {
    const GameSpec s = make_separable_spec();
    const ControlGrid ca = interval_grid(-1.0, 1.0, 21);
    const ControlGrid cb = interval_grid(-1.0, 1.0, 21);
    const std::vector<int> n_list = cfg.bench_n_list.empty() ? std::vector<int>{2, 4, 8, 16}
                                                             : cfg.bench_n_list;
    const std::vector<double> lo = {-3.5, -3.5}, hi = {3.5, 3.5};
    const std::vector<int> res = {141, 141};
    const RateCheckResult r = o_tau_rate_check(s, n_list, cfg.oracle_ref_steps, lo, hi, res, ca,
                                               cb, s.omega_lo, s.omega_hi, cfg.workers);
    std::ofstream os(fs::path(cfg.out_dir) / "tables" / "rate.csv");
    os << "n,dt,error\n";
    for (std::size_t i = 0; i < r.n_list.size(); ++i)
      os << r.n_list[i] << ',' << format_double(r.dt[i]) << ',' << format_double(r.errors[i])
         << "\n";
    os << "slope," << format_double(r.slope) << ",\n";
    std::cout << "fitted slope: " << r.slope << "\n";
    return 0;
  }
  throw ConfigError("unknown oracle submode: " + cfg.oracle_submode);
}

int cmd_bench(const CliOverrides& o) {
  const RunConfig cfg = load(o);
  prepare_out(cfg);
  if (cfg.bench_kind == "ex2-sweep") {
    if (cfg.bench_n_list.empty()) throw ConfigError("bench: empty sweep list");
    const Preset base = cfg.resolve();
    std::vector<double> errors;
    for (int n : cfg.bench_n_list) {
      Preset p = base;
      p.spec.steps = n;
      const TrainResult r = algorithm1_global(p.spec, p.config, cfg.seed, p.net_hidden,
                                              p.net_width);
      const GridValue grid = value_grid(p, r.strategies, r.params, cfg.eval_res);
      std::vector<double> ref(grid.data.size());
      for (std::size_t k = 0; k < ref.size(); ++k) {
        const std::vector<double> x = grid.node_coord(k);
        ref[k] = p.reference_fn(x.data());
      }
      errors.push_back(local_l1_error(grid.data, ref, 0.2));
    }
    const std::vector<double> orders = convergence_order(errors);
    std::ofstream os(fs::path(cfg.out_dir) / "tables" / "sweep.csv");
    os << "n,e_l1_loc,order\n";
    for (std::size_t i = 0; i < errors.size(); ++i) {
      os << cfg.bench_n_list[i] << ',' << format_double(errors[i]) << ','
         << (i == 0 ? std::string("-") : format_double(orders[i - 1])) << "\n";
      std::cout << "N=" << cfg.bench_n_list[i] << " e_l1_loc=" << errors[i]
                << (i > 0 ? " order=" + std::to_string(orders[i - 1]) : "") << "\n";
    }
    return 0;
  }
  if (cfg.bench_kind == "rotation") {
    struct Entry {
      const char* label;
      MinMaxAlgorithm algo;
      OptimizerKind opt;
    };
    const Entry entries[] = {
        {"sgda", MinMaxAlgorithm::Sgda, OptimizerKind::Adam},
        {"agda", MinMaxAlgorithm::Agda, OptimizerKind::Adam},
        {"gamma-gda", MinMaxAlgorithm::GammaGda, OptimizerKind::Adam},
        {"pote-adam", MinMaxAlgorithm::Pote, OptimizerKind::Adam},
        {"pote-sg", MinMaxAlgorithm::Pote, OptimizerKind::SgLinearDecay},
    };
    std::ofstream os(fs::path(cfg.out_dir) / "tables" / "rotation.csv");
    os << "algorithm,successes,runs,threshold\n";
    for (const Entry& e : entries) {
      const RotationBenchResult r =
          rotation_benchmark(e.algo, e.opt, cfg.bench_runs, cfg.seed, cfg.bench_threshold,
                             cfg.workers);
      os << e.label << ',' << r.successes << ',' << cfg.bench_runs << ','
         << format_double(cfg.bench_threshold) << "\n";
      std::cout << e.label << ": " << r.successes << "/" << cfg.bench_runs << "\n";
    }
    return 0;
  }
  throw ConfigError("unknown bench kind: " + cfg.bench_kind);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-player reachability games via neural feedback strategies"};
  app.require_subcommand(1);

  CliOverrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "run configuration file")->required();
    sub->add_option("--out", o.out, "output directory (overrides config)");
    sub->add_option("--seed", o.seed, "seed override");
    sub->add_option("--workers", o.workers, "worker thread count");
  };
  CLI::App* train = app.add_subcommand("train", "train feedback strategies");
  add_common(train);
  CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate trained strategies on a grid");
  add_common(evaluate);
  evaluate->add_option("--compare", o.compare_dir, "other run directory for ordering comparison");
  CLI::App* oracle = app.add_subcommand("oracle", "grid DPP / value-equivalence checks / rate check");
  add_common(oracle);
  CLI::App* bench = app.add_subcommand("bench", "sweeps and success tables");
  add_common(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) return cmd_train(o);
    if (evaluate->parsed()) return cmd_evaluate(o);
    if (oracle->parsed()) return cmd_oracle(o);
    if (bench->parsed()) return cmd_bench(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ArtifactError& e) {
    std::cerr << "artifact error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
