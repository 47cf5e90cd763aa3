// Acceptance runner: one PASS/FAIL line per criterion with pinned tolerances,
// measured values and wall time against the budget.
//
//   acceptance [--report FILE] [--always-zero] [--only N[,N...]]
//
// Exit status is the number of failed criteria unless --always-zero is given.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "risel/risel.hpp"
#include "test_util.hpp"

using namespace risel;
using namespace risel::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------

Outcome c1_surrogate() {
  Xoshiro256 rng(101);
  double worst_bound = 0.0;   // max(true - surrogate), must stay <= 1e-12 relative
  double worst_convex = 0.0;  // max midpoint excess, relative
  double worst_value = 0.0;   // |surrogate - true| at the anchor, relative
  double worst_grad = 0.0;    // FD mismatch of the surrogate gradient at the anchor, relative
  for (int t = 0; t < 500; ++t) {
    SurrogateContext ctx = random_context(derive_seed(1, t), 4);
    ctx.p_star = random_simplex_point(4, 0.95 * ctx.P, rng);
    for (auto& x : ctx.p_star) x += 0.01 * ctx.P / 4;
    const rvec p = random_simplex_point(4, ctx.P, rng);
    const rvec q = random_simplex_point(4, ctx.P, rng);
    const double lam = rng.uniform();
    rvec mid(4);
    for (std::size_t i = 0; i < 4; ++i) mid[i] = lam * p[i] + (1 - lam) * q[i];
    const double h = 1e-6 * ctx.P;
    for (std::size_t k = 0; k < 4; ++k) {
      const double tv = true_value(ctx, p, k);
      const double sv = surrogate_value(ctx, p, k);
      if (std::isfinite(tv)) worst_bound = std::max(worst_bound, (tv - sv) / std::max(tv, 1e-300));

      const double fp = surrogate_value(ctx, p, k), fq = surrogate_value(ctx, q, k);
      if (std::isfinite(fp) && std::isfinite(fq)) {
        const double rhs = lam * fp + (1 - lam) * fq;
        worst_convex = std::max(worst_convex, (surrogate_value(ctx, mid, k) - rhs) / rhs);
      }

      const double t0 = true_value(ctx, ctx.p_star, k);
      worst_value = std::max(worst_value, std::abs(surrogate_value(ctx, ctx.p_star, k) - t0) / t0);

      const rvec g = surrogate_gradient(ctx, ctx.p_star, k);
      double gmax = 0.0;
      for (double x : g) gmax = std::max(gmax, std::abs(x));
      for (std::size_t j = 0; j < 4; ++j) {
        rvec a = ctx.p_star, b = ctx.p_star;
        a[j] += h;
        b[j] -= h;
        const double fd_true = (true_value(ctx, a, k) - true_value(ctx, b, k)) / (2 * h);
        const double fd_sur = (surrogate_value(ctx, a, k) - surrogate_value(ctx, b, k)) / (2 * h);
        worst_grad = std::max(worst_grad, std::abs(g[j] - fd_true) / std::max(std::abs(fd_true), gmax));
        worst_grad = std::max(worst_grad, std::abs(g[j] - fd_sur) / std::max(std::abs(fd_sur), gmax));
      }
    }
  }
  Outcome o;
  o.pass = worst_bound <= 1e-12 && worst_convex <= 1e-12 && worst_value <= 1e-12 && worst_grad <= 1e-4;
  o.detail = "500 tuples K=4; bound slack " + fmt("%.2e", worst_bound) + " (<=1e-12), convexity " +
             fmt("%.2e", worst_convex) + " (<=1e-12), value tangency " + fmt("%.2e", worst_value) +
             " (<=1e-12), gradient vs FD " + fmt("%.2e", worst_grad) + " (<=1e-4)";
  return o;
}

Outcome c2_sca() {
  const ExperimentConfig exp = load_config(source_path("configs/default.json"));
  const SystemConfig& cfg = exp.system;
  int monotone = 0;
  int within5 = 0;
  std::vector<double> iters;
  for (int t = 0; t < 100; ++t) {
    const std::uint64_t seed = derive_seed(cfg.seed, t);
    const ChannelSet ch = generate_channels(cfg, seed);
    Xoshiro256 rng(seed ^ 0x5ca);
    const PhaseVector th = PhaseVector::random(cfg.M, rng);
    const auto h = composite_channels(ch, th, cfg.beta);
    const rvec p0 = equal_power(cfg.K, cfg.P);
    const auto w = optimal_beamformers_all(h, p0, cfg.sigma2);
    const SurrogateContext ctx = make_surrogate_context(cfg, exp.tasks, gain_matrix(h, w), p0);
    const PowerResult r = optimize_power(ctx, p0);
    bool ok = true;
    for (std::size_t i = 1; i < r.trace.size(); ++i) ok = ok && r.trace[i] <= r.trace[i - 1] * (1 + 1e-12);
    monotone += ok;
    within5 += r.outer_iterations <= 5;
    iters.push_back(r.outer_iterations);
  }
  Outcome o;
  o.pass = monotone == 100 && within5 >= 90;
  o.detail = "default config, 100 instances; monotone " + std::to_string(monotone) + "/100, outer<=5 in " +
             std::to_string(within5) + "/100 (need >=90), median outer " + fmt("%.1f", median(iters));
  return o;
}

Outcome c3_beamformer() {
  Xoshiro256 rng(303);
  double worst_ratio = 0.0;  // best random SINR / closed-form SINR
  double worst_align = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto h = random_channels(3, 4, rng);
    rvec p = random_simplex_point(3, 1.0, rng);
    for (auto& x : p) x += 0.01;
    const double s2 = 0.05 + rng.uniform();
    for (std::size_t k = 0; k < 3; ++k) {
      const cvec w = optimal_beamformer(h, p, s2, k);
      const double best = sinr_of(h, p, s2, k, w);
      for (int r = 0; r < 10000; ++r) {
        cvec v = random_vector(4, rng);
        const double nv = norm2(v);
        for (auto& x : v) x /= nv;
        worst_ratio = std::max(worst_ratio, sinr_of(h, p, s2, k, v) / best);
      }
      worst_align = std::max(worst_align, std::abs(1.0 - std::abs(inner(w, eig_oracle(h, p, s2, k)))));
    }
  }
  Outcome o;
  o.pass = worst_ratio <= 1.0 + 1e-12 && worst_align < 1e-8;
  o.detail = "100 instances K=3 N=4, 1e4 random unit vectors per user; max random/closed-form SINR " +
             fmt("%.12f", worst_ratio) + " (<=1), oracle misalignment " + fmt("%.2e", worst_align) + " (<1e-8)";
  return o;
}

Outcome c4_qcqp() {
  double worst_chi = 0.0, worst_res = 0.0, worst_gap = 0.0;
  int infeasible = 0;
  int count = 0;
  for (int t = 0; count < 200; ++t) {
    const std::size_t m = std::array<std::size_t, 3>{4, 8, 16}[t % 3];
    const Instance in = make_instance(derive_seed(404, t), 4, 4, m);
    Xoshiro256 rng(derive_seed(405, t));
    const std::size_t k = t % 4;
    const PhaseVector planted = PhaseVector::random(m, rng);
    const double gamma = sinr_all(in.forms, in.p, in.cfg.sigma2, planted.values())[k];
    const PhaseVector start = PhaseVector::random(m, rng);
    const QcqpSubproblem sub = build_qcqp(in.forms, in.p, in.cfg.sigma2, gamma, k, start.values());
    if (sub.constraint(sub.zeta) <= sub.tau) continue;  // already inside; nothing to project
    ++count;
    const QcqpSpectral sp = decompose(sub);
    const QUpdateResult r = q_update(sub, sp, sub.zeta);
    if (!r.feasible) {
      ++infeasible;
      continue;
    }
    const double scale = std::max(1.0, std::abs(sub.tau));
    worst_chi = std::max(worst_chi, std::abs(r.chi) / scale);
    worst_res = std::max(worst_res, std::abs(sub.constraint(r.q) - sub.tau) / scale);
    // Dual value at mu: the Lagrangian minimizer is q itself when 1 + mu*lambda > 0.
    double min_curv = 1.0;
    for (double l : sp.eig.values) min_curv = std::min(min_curv, 1.0 + r.mu * l);
    const double primal = dist2(r.q, sub.zeta);
    const double dual = min_curv >= 0.0 ? primal + r.mu * (sub.constraint(r.q) - sub.tau)
                                        : -std::numeric_limits<double>::infinity();
    worst_gap = std::max(worst_gap, std::abs(primal - dual) / std::max(primal, 1e-300));
  }

  // M = 2 against an exhaustive polar grid.
  Xoshiro256 rng(406);
  double worst_grid = 0.0;
  for (int t = 0; t < 5; ++t) {
    const QcqpSubproblem s = random_subproblem(2, 2, rng);
    const auto out = q_update(s);
    const double newton = dist2(out.q, s.zeta);
    const cmat a = s.dense_A();
    const double rmax = 2.0 * (norm2(s.zeta) + norm2(out.q)) + 1.0;
    double best = std::numeric_limits<double>::infinity();
    const int n = 100;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j < n; ++j) {
        const cplx q1 = std::polar(rmax * i / n, 2 * std::numbers::pi * j / n);
        for (int l = 0; l < n; ++l) {
          const cplx e2 = std::polar(1.0, 2 * std::numbers::pi * l / n);
          const double qa = a(1, 1).real();
          const double qb = 2.0 * (std::conj(q1) * a(0, 1) * e2).real() - 2.0 * (std::conj(s.b[1]) * e2).real();
          const double qc = a(0, 0).real() * std::norm(q1) - 2.0 * (std::conj(s.b[0]) * q1).real() - s.tau;
          const double disc = qb * qb - 4 * qa * qc;
          if (disc < 0) continue;
          for (double sgn : {-1.0, 1.0}) {
            const double r2 = std::abs(qa) > 1e-14 ? (-qb + sgn * std::sqrt(disc)) / (2 * qa) : -qc / qb;
            if (!(r2 >= 0.0)) continue;
            best = std::min(best, dist2(cvec{q1, r2 * e2}, s.zeta));
          }
        }
      }
    // The grid only over-estimates the optimum; Newton must not be worse by more than 1e-3.
    worst_grid = std::max(worst_grid, newton - best);
  }

  Outcome o;
  o.pass = infeasible == 0 && worst_chi < 1e-6 && worst_res < 1e-6 && worst_gap < 1e-6 && worst_grid <= 1e-3;
  o.detail = "200 subproblems M in {4,8,16}; |chi| " + fmt("%.2e", worst_chi) + ", constraint residual " +
             fmt("%.2e", worst_res) + " (both <1e-6 relative to max(1,|tau|)), primal-dual gap " +
             fmt("%.2e", worst_gap) + " (<1e-6), multiplier failures " + std::to_string(infeasible) +
             "; M=2 grid excess " + fmt("%.2e", worst_grid) + " (<=1e-3)";
  return o;
}

Outcome c5_admm() {
  int converged = 0;
  int tail_ok = 0;
  int tail_steps = 0;
  int tail_rises = 0;
  std::vector<double> iters;
  for (int t = 0; t < 100; ++t) {
    const Instance in = make_instance(derive_seed(505, t), 2, 4, 8);
    Xoshiro256 rng(derive_seed(506, t));
    // Redraw the planted point until the start violates some threshold, so ADMM has work to do.
    const PhaseVector start = PhaseVector::random(8, rng);
    const rvec at_start = sinr_all(in.forms, in.p, in.cfg.sigma2, start.values());
    rvec g;
    for (;;) {
      const PhaseVector planted = PhaseVector::random(8, rng);
      g = sinr_all(in.forms, in.p, in.cfg.sigma2, planted.values());
      for (auto& x : g) x *= 0.99;
      if (at_start[0] < g[0] || at_start[1] < g[1]) break;
    }
    const AdmmResult r =
        admm_feasibility(in.forms, in.p, in.cfg.sigma2, g, AdmmState::start(start, 2));
    const auto& tr = r.residual_trace;
    const bool ok = r.feasible && !tr.empty() && tr.back() < 1e-6 && r.iterations <= 1000;
    if (!ok) continue;
    ++converged;
    iters.push_back(r.iterations);
    bool tail = true;
    const std::size_t from = tr.size() > 20 ? tr.size() - 20 : 0;
    for (std::size_t i = from + 1; i < tr.size(); ++i) {
      tail = tail && tr[i] <= tr[i - 1];
      ++tail_steps;
      tail_rises += tr[i] > tr[i - 1];
    }
    tail_ok += tail;
  }
  const double med = median(iters);
  Outcome o;
  o.pass = converged >= 95 && tail_ok == converged && med < 300;
  o.detail = "K=2 M=8 planted (start infeasible), 100 seeds; residual<1e-6 within 1000 iterations in " + std::to_string(converged) +
             "/100 (need >=95), tail nonincreasing " + std::to_string(tail_ok) + "/" + std::to_string(converged) +
             " (" + std::to_string(tail_rises) + " of " + std::to_string(tail_steps) +
             " tail steps rise), median iterations " + fmt("%.1f", med) + " (<300)";
  return o;
}

SystemConfig desk_config() {
  SystemConfig cfg = SystemConfig::with_dimensions(4, 8, 16);
  cfg.seed = 6;
  return cfg;
}

Outcome c6_ao() {
  const SystemConfig cfg = desk_config();
  const auto tasks = default_tasks();
  int monotone = 0;
  std::vector<double> iters;
  std::vector<double> to_near;  // iterations until within 1% of the final objective
  for (int t = 0; t < 100; ++t) {
    const ChannelSet ch = generate_channels(cfg, derive_seed(cfg.seed, t));
    const AoResult r = alternating_optimize(cfg, ch, tasks, default_init(cfg, ch));
    bool ok = true;
    for (std::size_t i = 1; i < r.trace.size(); ++i) ok = ok && r.trace[i] <= r.trace[i - 1] + 1e-8;
    monotone += ok;
    iters.push_back(r.outer_iterations);
    std::size_t near = 0;
    while (near + 1 < r.trace.size() && r.trace[near] > r.trace.back() * (1 + 1e-2)) ++near;
    to_near.push_back(static_cast<double>(near));
  }
  const double med = median(iters);
  Outcome o;
  o.pass = monotone == 100 && med <= 6;
  o.detail = "K=4 N=8 M=16, 100 runs; trace nonincreasing within 1e-8 in " + std::to_string(monotone) +
             "/100, median outer iterations " + fmt("%.1f", med) + " (<=6) at relative tolerance 1e-5; median " +
             fmt("%.1f", median(to_near)) + " to reach within 1% of the final value (informational)";
  return o;
}

Outcome c7_benchmarks() {
  const SystemConfig cfg = desk_config();
  const auto tasks = default_tasks();
  const auto schemes = all_schemes();
  std::vector<double> mean(schemes.size(), 0.0);
  int dominance = 0;
  int plain_dominance = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t seed = derive_seed(cfg.seed + 1000, t);
    const ChannelSet ch = generate_channels(cfg, seed);
    SchemeOptions so;
    so.phase_seed = derive_seed(seed, 0x9e37u);
    double proposed = 0.0, random_phase = 0.0;
    AllocationState rp_state;
    for (std::size_t s = 0; s < schemes.size(); ++s) {
      const AoResult r = run_scheme(schemes[s], cfg, ch, tasks, so);
      const double v = clamp_reported_error(r.state.objective);
      mean[s] += v / trials;
      if (schemes[s] == Scheme::proposed) proposed = v;
      if (schemes[s] == Scheme::random_phase) {
        random_phase = v;
        rp_state = r.state;
      }
    }
    plain_dominance += proposed <= random_phase;
    const AoResult shared = alternating_optimize(cfg, ch, tasks, rp_state);
    dominance += clamp_reported_error(shared.state.objective) <= random_phase;
  }
  auto at = [&](Scheme s) { return mean[static_cast<std::size_t>(std::find(schemes.begin(), schemes.end(), s) - schemes.begin())]; };
  const double pr = at(Scheme::proposed), rp = at(Scheme::random_phase), nr = at(Scheme::no_ris),
               sr = at(Scheme::sumrate_max);
  Outcome o;
  o.pass = pr <= rp && rp <= nr && pr < sr && dominance == trials;
  o.detail = "K=4 N=8 M=16, 100 trials; means proposed " + fmt("%.5f", pr) + ", random_phase " + fmt("%.5f", rp) +
             ", no_ris " + fmt("%.5f", nr) + ", sumrate_max " + fmt("%.5f", sr) +
             "; shared-init dominance " + std::to_string(dominance) + "/100 (independent init " +
             std::to_string(plain_dominance) + "/100)";
  return o;
}

Outcome c8_scaling() {
  const ExperimentConfig exp = load_config(source_path("configs/scaling.json"));
  const TaskModel task = task_preset(exp.scaling_task);
  const ScalingResult r = scaling_experiment(exp.system, task, exp.scaling_m, exp.trials);
  const double target = -task.d;
  const double rel = std::abs(r.slope - target) / std::abs(target);
  const rvec snr = unaligned_mean_snr(exp.system, exp.scaling_m, 20000);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  std::string ratios;
  for (std::size_t i = 1; i < snr.size(); ++i) {
    const double ratio = snr[i] / snr[i - 1];
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    ratios += (i > 1 ? "," : "") + fmt("%.3f", ratio);
  }
  double aligned = 0.0;
  if (r.rows.size() >= 2) aligned = r.rows[1].mean_snr / r.rows[0].mean_snr;
  Outcome o;
  o.pass = rel <= 0.15 && lo >= 1.9 && hi <= 2.1;
  o.detail = std::to_string(exp.trials) + " trials, M in {32..256}; slope " + fmt("%.4f", r.slope) + " vs " +
             fmt("%.2f", target) + " (rel err " + fmt("%.3f", rel) + ", <=0.15); SNR ratio per doubling, fixed phases [" +
             ratios + "] (in [1.9,2.1]); optimized-phase ratio " + fmt("%.3f", aligned) + " (informational)";
  return o;
}

Outcome c9_fit() {
  double worst = 0.0;
  for (const auto& name : task_preset_names()) {
    const TaskModel t = task_preset(name);
    std::vector<ErrorSample> s;
    for (double v : {100.0, 300.0, 1000.0, 3000.0, 10000.0, 50000.0}) s.push_back({v, t.c * std::pow(v, -t.d)});
    const ErrorModelFit f = fit_error_model(s);
    worst = std::max({worst, std::abs(f.c - t.c), std::abs(f.d - t.d)});
  }
  const auto samples = parse_fit_csv(read_text(source_path("tests/data/fit_noisy.csv")));
  const ErrorModelFit fit = fit_error_model(samples);
  // Independent least-squares reference at 12 significant digits, then the committed CLI output bit for bit.
  const json reference = read_json_file(source_path("tests/data/fit_noisy_golden.json"));
  const json expected = read_json_file(source_path("tests/data/fit_noisy_expected.json"));
  const json produced = fit_to_json(fit, samples.size());
  const bool golden_ok = format_number(fit.c) == reference["c"].get<std::string>() &&
                         format_number(fit.d) == reference["d"].get<std::string>() &&
                         produced["c"].get<double>() == expected["c"].get<double>() &&
                         produced["d"].get<double>() == expected["d"].get<double>() && produced == expected;
  Outcome o;
  o.pass = worst <= 1e-9 && golden_ok;
  o.detail = "4 presets, max |fit - true| " + fmt("%.2e", worst) + " (<=1e-9); golden fixture " +
             (golden_ok ? "identical" : "differs: " + produced.dump());
  return o;
}

Outcome c10_determinism(const std::string& cli) {
  const fs::path root = fs::temp_directory_path() / ("risel_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::vector<std::string> csv;
  std::string codes;
  for (int run = 0; run < 2; ++run) {
    const fs::path out = root / std::to_string(run);
    const std::string cmd = "\"" + cli + "\" sweep --config \"" + source_path("configs/desk.json") +
                            "\" --trials 3 --seed 17 --out \"" + out.string() + "\" > /dev/null";
    const int status = std::system(cmd.c_str());
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    codes += (run ? "," : "") + std::to_string(code);
    std::string joined;
    for (const char* f : {"sweep.csv", "sweep_summary.csv", "sweep_traces.csv"}) {
      const fs::path p = out / f;
      joined += fs::exists(p) ? read_text(p.string()) : std::string("<missing>");
      joined += '\x1f';
    }
    csv.push_back(joined);
  }
  fs::remove_all(root);
  const bool same = csv[0] == csv[1] && csv[0].find("<missing>") == std::string::npos;
  Outcome o;
  o.pass = same && codes.find("-1") == std::string::npos && codes.find('2') == std::string::npos &&
           codes.find('4') == std::string::npos;
  o.detail = "two sweep runs, seed 17, exit codes " + codes + "; CSV outputs " +
             (same ? "byte-identical (" + std::to_string(csv[0].size()) + " bytes)" : "differ");
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::string report_path;
  bool always_zero = false;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--report" && i + 1 < argc) {
      report_path = argv[++i];
    } else if (a == "--always-zero") {
      always_zero = true;
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
    } else {
      std::fprintf(stderr, "usage: acceptance [--report FILE] [--always-zero] [--only N[,N...]]\n");
      return 64;
    }
  }

  const std::string cli = RISEL_CLI;
  const std::vector<Criterion> criteria{
      {1, "surrogate majorizer", 10, c1_surrogate},
      {2, "power SCA convergence", 60, c2_sca},
      {3, "beamformer optimality", 30, c3_beamformer},
      {4, "QCQP projection", 30, c4_qcqp},
      {5, "ADMM feasibility", 60, c5_admm},
      {6, "AO monotonicity", 600, c6_ao},
      {7, "benchmark ordering", 1200, c7_benchmarks},
      {8, "RIS scaling law", 300, c8_scaling},
      {9, "error-model fit", 1, c9_fit},
      {10, "sweep determinism", 600, [&] { return c10_determinism(cli); }},
  };

  std::ostringstream report;
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    char line[128];
    std::snprintf(line, sizeof line, "[%s] %2d %-22s %8.2f s (limit %g s%s) | ", pass ? "PASS" : "FAIL", c.id,
                  c.name, secs, c.budget_s, in_time ? "" : ", exceeded");
    const std::string text = line + o.detail + "\n";
    std::fputs(text.c_str(), stdout);
    std::fflush(stdout);
    report << text;
  }
  const std::string summary = std::to_string(failed) + " criteria failed\n";
  std::fputs(summary.c_str(), stdout);
  report << summary;
  if (!report_path.empty()) write_text(report_path, report.str());
  return always_zero ? 0 : failed;
}
