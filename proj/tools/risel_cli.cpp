// risel: command-line driver for fitting, single solves, sweeps and scaling runs.
//
// Exit codes: 0 ok, 2 configuration error, 3 solver did not converge
// (results are still written), 4 I/O error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "risel/risel.hpp"

namespace fs = std::filesystem;
using namespace risel;

namespace {

constexpr int kOk = 0;
constexpr int kConfig = 2;
constexpr int kNoConvergence = 3;
constexpr int kIo = 4;

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::string scheme;
  unsigned threads = 0;
};

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? parse_config(json::object()) : load_config(c.config);
  if (c.seed) cfg.system.seed = *c.seed;
  if (c.trials) cfg.trials = *c.trials;
  return cfg;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

AoOptions ao_options(const ExperimentConfig& cfg) {
  AoOptions ao;
  ao.theta.admm.rho = cfg.rho;
  return ao;
}

int cmd_fit(const std::string& input, const std::string& out_dir) {
  const auto samples = parse_fit_csv(read_text(input));
  const ErrorModelFit fit = fit_error_model(samples);
  ensure_dir(out_dir);
  write_text(join(out_dir, "fit.json"), fit_to_json(fit, samples.size()).dump(2) + "\n");
  std::printf("c = %s\nd = %s\n", format_number(fit.c).c_str(), format_number(fit.d).c_str());
  if (fit.nonpositive_decay) std::printf("warning: fitted decay is not positive\n");
  return kOk;
}

int cmd_optimize(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const Scheme scheme = parse_scheme(c.scheme.empty() ? "proposed" : c.scheme);
  const ChannelSet ch = generate_channels(cfg.system, cfg.system.seed);
  SchemeOptions so;
  so.ao = ao_options(cfg);
  so.phase_seed = derive_seed(cfg.system.seed, 0x9e37u);
  const AoResult r = run_scheme(scheme, cfg.system, ch, cfg.tasks, so);

  OptimizeRecord rec{std::string(scheme_name(scheme)), cfg.system.seed, r.state, r.trace, r.outer_iterations,
                     r.converged};
  ensure_dir(c.out);
  write_text(join(c.out, "allocation.json"), record_to_json(rec).dump(2) + "\n");
  write_text(join(c.out, "ao_trace.csv"), trace_csv(r.trace, "objective"));
  write_text(join(c.out, "admm_trace.csv"), trace_csv(r.admm_trace, "primal_residual"));

  std::printf("scheme %s  objective %s  outer iterations %d%s\n", rec.scheme.c_str(),
              format_number(r.state.objective).c_str(), r.outer_iterations, r.converged ? "" : "  (not converged)");
  for (std::size_t k = 0; k < cfg.tasks.size(); ++k)
    std::printf("  %-12s error %s  rate %s bps/Hz\n", cfg.tasks[k].name.c_str(),
                format_number(clamp_reported_error(r.state.per_task_error[k])).c_str(),
                format_number(r.state.per_task_rate[k]).c_str());
  return r.converged ? kOk : kNoConvergence;
}

std::vector<Scheme> schemes_from(const std::string& list) {
  if (list.empty()) return all_schemes();
  std::vector<Scheme> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_scheme(item));
  return out;
}

int cmd_sweep(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const auto schemes = schemes_from(c.scheme);
  const MonteCarloResult r =
      monte_carlo(cfg.system, cfg.tasks, schemes, cfg.trials, cfg.sweep, ao_options(cfg), c.threads);
  ensure_dir(c.out);
  write_text(join(c.out, "sweep.csv"), sweep_csv(r, cfg.tasks));
  write_text(join(c.out, "sweep_summary.csv"), sweep_summary_csv(r, cfg.tasks));
  write_text(join(c.out, "sweep_traces.csv"), sweep_trace_csv(r));
  bool all_converged = true;
  for (const auto& rec : r.records) all_converged = all_converged && rec.converged;
  std::cout << sweep_summary_csv(r, cfg.tasks);
  return all_converged ? kOk : kNoConvergence;
}

int cmd_scaling(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const TaskModel task = task_preset(cfg.scaling_task);
  ThetaOptions opts;
  opts.admm.rho = cfg.rho;
  const ScalingResult r = scaling_experiment(cfg.system, task, cfg.scaling_m, cfg.trials, opts);
  ensure_dir(c.out);
  write_text(join(c.out, "scaling.csv"), scaling_csv(r));
  json j = {{"task", task_to_json(task)},
            {"trials", cfg.trials},
            {"slope", r.slope},
            {"intercept", r.intercept},
            {"expected_slope", -task.d}};
  write_text(join(c.out, "scaling.json"), j.dump(2) + "\n");
  std::cout << scaling_csv(r);
  std::printf("slope %s (expected %s)\n", format_number(r.slope).c_str(), format_number(-task.d).c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-error-driven resource allocation for RIS-assisted edge inference"};
  app.require_subcommand(1);

  Common common;
  std::string fit_input;

  auto* fit = app.add_subcommand("fit", "Fit c, d of error = c * v^-d to (sample_size, error) CSV rows");
  fit->add_option("input", fit_input, "CSV file")->required();
  fit->add_option("--out", common.out, "Output directory");

  auto add_common = [&](CLI::App* sub, bool with_scheme) {
    sub->add_option("--config", common.config, "JSON configuration");
    sub->add_option("--seed", common.seed, "Override the configuration seed");
    sub->add_option("--trials", common.trials, "Override the number of trials");
    sub->add_option("--out", common.out, "Output directory");
    if (with_scheme) sub->add_option("--scheme", common.scheme, "proposed | no_ris | random_phase | sumrate_max");
  };
  auto* optimize = app.add_subcommand("optimize", "Solve one channel realization");
  add_common(optimize, true);
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo comparison of schemes, optionally over M or N");
  add_common(sweep, true);
  sweep->add_option("--threads", common.threads, "Worker threads (0: hardware concurrency)");
  auto* scaling = app.add_subcommand("scaling", "Single-user error versus RIS size");
  add_common(scaling, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (fit->parsed()) return cmd_fit(fit_input, common.out);
    if (optimize->parsed()) return cmd_optimize(common);
    if (sweep->parsed()) return cmd_sweep(common);
    if (scaling->parsed()) return cmd_scaling(common);
  } catch (const io_error& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kIo;
  } catch (const config_error& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kConfig;
  } catch (const domain_error& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kConfig;
  } catch (const insufficient_data_error& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kConfig;
  } catch (const numerical_error& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kNoConvergence;
  }
  return kOk;
}
