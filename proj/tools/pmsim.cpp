// pmsim: command-line front end.
//
//   pmsim run      --config PATH [--mode M] [--seed N] [--out DIR] [--format csv|json]
//   pmsim sweep    [--config PATH] --t-min A --t-max B --points K [--align-gap G] [--workers W] ...
//   pmsim coldatom [--params PATH] [--level analytic|full] [--out DIR]
//   pmsim fit      --in CSV [--tolerance TOL]
//
// Exit codes: 0 success, 2 configuration error, 3 convergence error, 4 I/O error.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pmsim/analysis.hpp"
#include "pmsim/config.hpp"
#include "pmsim/errors.hpp"
#include "pmsim/io.hpp"
#include "pmsim/scenarios.hpp"

using namespace pmsim;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitIo = 4;

struct Common {
  std::string config;
  std::string mode;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
};

void log_defaults(const ParsedConfig& parsed) {
  for (const auto& d : parsed.defaults) std::cerr << "default: " << d << "\n";
}

MeasurementConfig load_measurement(const std::string& path) {
  ParsedConfig parsed = parse_config(path);
  log_defaults(parsed);
  if (!std::holds_alternative<MeasurementConfig>(parsed.config)) {
    throw ParseError("kind", "a measurement config is required here (use `pmsim coldatom` for cold_atom files)");
  }
  return std::get<MeasurementConfig>(parsed.config);
}

void apply_overrides(MeasurementConfig& c, const Common& o) {
  if (!o.mode.empty()) c.mode = mode_from_string(o.mode);
  if (o.seed) c.rng_seed = *o.seed;
}

void print_run(const RunResult& r) {
  std::printf("mode=%s T=%.17g centroid=%.17g shift=%.17g predicted=%.17g disturbance=%.6e entropy=%.6e "
              "validity=%.6e%s n_steps=%ld\n",
              to_string(r.mode).c_str(), r.T, r.pointer_centroid, r.pointer_centroid - r.initial_centroid,
              r.predicted_shift, r.disturbance, r.entanglement_entropy, r.validity,
              r.validity_flag ? " (above threshold)" : "", r.report.n_steps);
}

int cmd_run(const Common& o) {
  const std::string started = utc_timestamp();
  MeasurementConfig c = load_measurement(o.config);
  apply_overrides(c, o);
  const OutputFormat format = format_from_string(o.format);
  const RunResult r = run(c);
  print_run(r);
  if (c.mode == Mode::strong) {
    const StrongResult sr = run_strong(c);
    const HermitianOperator qs = build_operator(c.q_system, c.system_dim, nullptr, "system.Q");
    const CollapseOutcome outcome = collapse_sample(sr.entangled, qs, c.rng_seed);
    std::printf("collapse: eigenvalue=%.17g probability=%.17g seed=%llu\n", outcome.eigenvalue, outcome.probability,
                static_cast<unsigned long long>(c.rng_seed));
  }
  if (!o.out.empty()) {
    RunManifest m{c, code_version(), c.rng_seed, started, "", {}};
    emit_results(r, format, o.out, m);
  } else {
    std::fputs(format == OutputFormat::csv ? run_csv(r).c_str() : run_result_to_json(r).c_str(), stdout);
  }
  return 0;
}

struct SweepOptions {
  double t_min = 0.0;
  double t_max = 0.0;
  std::size_t points = 0;
  std::optional<double> align_gap;
  unsigned workers = 0;
};

int cmd_sweep(const Common& o, const SweepOptions& s) {
  const std::string started = utc_timestamp();
  MeasurementConfig c = o.config.empty() ? qubit_benchmark_config(M_PI / 3.0) : load_measurement(o.config);
  apply_overrides(c, o);
  const OutputFormat format = format_from_string(o.format);
  const std::vector<double> ts =
      s.align_gap ? rabi_aligned_times(s.t_min, s.t_max, s.points, *s.align_gap) : log_spaced(s.t_min, s.t_max, s.points);
  const SweepResult sweep = sweep_over_T(c, ts, s.workers);
  if (!o.out.empty()) {
    RunManifest m{c, code_version(), c.rng_seed, started, "", {}};
    emit_results(sweep, format, o.out, m);
  } else {
    std::fputs(sweep_csv(sweep).c_str(), stdout);
  }
  if (sweep.fit) {
    std::fprintf(stderr, "fit: slope=%.6f r2=%.6f window=[%zu,%zu)\n", sweep.fit->slope, sweep.fit->r_squared,
                 sweep.fit->window_begin, sweep.fit->window_end);
  } else {
    std::fprintf(stderr, "fit: no adiabatic window with at least four points\n");
  }
  int failed = 0;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    if (!sweep.errors[i].empty()) {
      std::fprintf(stderr, "T=%.17g failed: %s\n", sweep.t_values[i], sweep.errors[i].c_str());
      ++failed;
    }
  }
  return failed ? kExitConvergence : 0;
}

int cmd_coldatom(const std::string& params, const std::string& level, const std::string& out) {
  const std::string started = utc_timestamp();
  ColdAtomParams p;
  if (!params.empty()) {
    ParsedConfig parsed = parse_config(params);
    log_defaults(parsed);
    if (!std::holds_alternative<ColdAtomParams>(parsed.config)) {
      throw ParseError("kind", "a cold_atom params file is required here");
    }
    p = std::get<ColdAtomParams>(parsed.config);
  }
  const ColdAtomResult r = cold_atom_run(p, level_from_string(level));
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  if (!out.empty()) {
    emit_results(r, out, RunManifest{p, code_version(), 0, started, "", {}});
  }
  std::fputs(cold_atom_result_to_json(r).c_str(), stdout);
  return 0;
}

int cmd_fit(const std::string& in, double tolerance) {
  const SweepResult s = read_sweep_csv(in);
  const auto window = adiabatic_window(s, tolerance);
  if (!window || window->second - window->first < 4) {
    throw ValidationError("no adiabatic window with at least four points in " + in);
  }
  std::fputs(scaling_fit_to_json(fit_power_law(s.t_values, s.disturbances, window->first, window->second)).c_str(),
             stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Protective and strong quantum measurement simulator"};
  app.require_subcommand(1);

  Common common;
  SweepOptions sweep;
  std::string params, level = "analytic", fit_in;
  double fit_tolerance = 0.0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--mode", common.mode, "strong, protective or generalized (overrides the config)")
        ->check(CLI::IsMember({"strong", "protective", "generalized"}));
    sub->add_option("--seed", common.seed, "RNG seed (overrides the config)");
    sub->add_option("--out", common.out, "Output directory; results go to stdout when omitted");
    sub->add_option("--format", common.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };

  CLI::App* run_cmd = app.add_subcommand("run", "Single measurement run");
  run_cmd->add_option("--config", common.config, "Measurement config (JSON)")->required();
  add_common(run_cmd);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Log-spaced sweep over the interaction time T");
  sweep_cmd->add_option("--config", common.config, "Measurement config (JSON); default: tilted-qubit benchmark");
  sweep_cmd->add_option("--t-min", sweep.t_min, "Smallest T")->required();
  sweep_cmd->add_option("--t-max", sweep.t_max, "Largest T")->required();
  sweep_cmd->add_option("--points", sweep.points, "Number of T values")->required();
  sweep_cmd->add_option("--align-gap", sweep.align_gap, "Snap T to odd multiples of pi / gap");
  sweep_cmd->add_option("--workers", sweep.workers, "Parallel runs (default: PMSIM_WORKERS or all cores)");
  add_common(sweep_cmd);

  CLI::App* cold_cmd = app.add_subcommand("coldatom", "Cold-atom Stern-Gerlach scenario");
  cold_cmd->add_option("--params", params, "cold_atom params file (JSON); default parameters when omitted");
  cold_cmd->add_option("--level", level, "analytic or full")->check(CLI::IsMember({"analytic", "full"}));
  cold_cmd->add_option("--out", common.out, "Output directory");

  CLI::App* fit_cmd = app.add_subcommand("fit", "Power-law fit of disturbance against T from a sweep CSV");
  fit_cmd->add_option("--in", fit_in, "Sweep CSV")->required();
  fit_cmd->add_option("--tolerance", fit_tolerance,
                      "Propagation tolerance of the sweep; points with disturbance <= 100 x tolerance are excluded");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(common);
    if (*sweep_cmd) return cmd_sweep(common, sweep);
    if (*cold_cmd) return cmd_coldatom(params, level, common.out);
    if (*fit_cmd) return cmd_fit(fit_in, fit_tolerance);
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << " (last estimate " << e.last_estimate() << " at "
              << e.last_steps() << " steps)\n";
    return kExitConvergence;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
