#pragma once

// Alternating optimization over (p, w, theta), benchmark schemes, Monte Carlo
// sweeps and the single-user scaling experiment.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "risel/beamforming.hpp"
#include "risel/errors.hpp"
#include "risel/metrics.hpp"
#include "risel/phase_admm.hpp"
#include "risel/power_sca.hpp"
#include "risel/rng.hpp"
#include "risel/scenario.hpp"

namespace risel {

struct AoOptions {
  int max_outer = 20;
  double rel_tolerance = 1e-5;
  bool update_theta = true;
  PowerOptions power;
  ThetaOptions theta;
};

struct AoResult {
  AllocationState state;
  rvec trace;               // objective after each outer iteration, starting with the initial point
  rvec admm_trace;          // residuals of the last successful ADMM run
  int outer_iterations = 0;
  bool converged = false;
  bool power_flag = false;  // some power subproblem hit its iteration cap
  int rejected_steps = 0;   // block updates discarded because they raised the objective
};

/// p = P/K, matched filters on the composite channels, theta = 1.
inline AllocationState default_init(const SystemConfig& cfg, const ChannelSet& ch) {
  AllocationState s;
  s.theta = PhaseVector::ones(ch.elements());
  s.p = equal_power(ch.users(), cfg.P);
  s.w = matched_filters(composite_channels(ch, s.theta, cfg.beta));
  return s;
}

/// Cycles power control, combining and phase design until the relative
/// objective change drops below the tolerance. Each block update is kept only
/// if it does not raise the objective, so the trace is nonincreasing.
inline AoResult alternating_optimize(const SystemConfig& cfg, const ChannelSet& ch, std::span<const TaskModel> tasks,
                                     AllocationState init, const AoOptions& opts = {}) {
  ch.validate_against(cfg);
  AoResult res;
  AllocationState cur = std::move(init);
  evaluate(cfg, ch, tasks, cur);
  res.trace.push_back(cur.objective);

  auto try_accept = [&](AllocationState cand) {
    evaluate(cfg, ch, tasks, cand);
    if (cand.objective <= cur.objective) {
      cur = std::move(cand);
    } else {
      ++res.rejected_steps;
    }
  };

  for (int n = 0; n < opts.max_outer; ++n) {
    const double before = cur.objective;
    auto h = composite_channels(ch, cur.theta, cfg.beta);

    {
      const rmat g = gain_matrix(h, cur.w);
      const PowerResult pr = optimize_power(make_surrogate_context(cfg, tasks, g, cur.p), cur.p, opts.power);
      res.power_flag = res.power_flag || pr.subproblem_flag;
      AllocationState cand = cur;
      cand.p = pr.p;
      try_accept(std::move(cand));
    }
    {
      AllocationState cand = cur;
      cand.w = optimal_beamformers_all(h, cur.p, cfg.sigma2);
      try_accept(std::move(cand));
    }
    if (opts.update_theta && cfg.beta != 0.0) {
      const QuadraticForms forms = build_quadratics(ch, cur.w, cfg.beta);
      ThetaResult tr = optimize_theta(forms, cur.p, cfg, tasks, cur.theta, opts.theta);
      if (!tr.admm_trace.empty()) res.admm_trace = tr.admm_trace;
      if (!tr.unchanged) {
        AllocationState cand = cur;
        cand.theta = tr.theta;
        try_accept(std::move(cand));
      }
    }

    res.outer_iterations = n + 1;
    res.trace.push_back(cur.objective);
    const double change = std::abs(before - cur.objective);
    if (change <= opts.rel_tolerance * std::abs(before) || (std::isinf(before) && before == cur.objective)) {
      res.converged = true;
      break;
    }
  }
  res.state = std::move(cur);
  return res;
}

// ---------------------------------------------------------------------------
// Benchmarks

enum class Scheme { proposed, no_ris, random_phase, sumrate_max };

inline std::string_view scheme_name(Scheme s) {
  switch (s) {
    case Scheme::proposed: return "proposed";
    case Scheme::no_ris: return "no_ris";
    case Scheme::random_phase: return "random_phase";
    case Scheme::sumrate_max: return "sumrate_max";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view name) {
  for (Scheme s : {Scheme::proposed, Scheme::no_ris, Scheme::random_phase, Scheme::sumrate_max})
    if (scheme_name(s) == name) return s;
  throw config_error("unknown scheme '" + std::string(name) + "'");
}

inline std::vector<Scheme> all_schemes() {
  return {Scheme::proposed, Scheme::no_ris, Scheme::random_phase, Scheme::sumrate_max};
}

/// Euclidean projection onto { p >= 0, sum p <= budget }.
inline rvec project_capped_simplex(std::span<const double> v, double budget) {
  rvec p(v.begin(), v.end());
  double total = 0.0;
  for (auto& x : p) {
    x = std::max(x, 0.0);
    total += x;
  }
  if (total <= budget) return p;
  rvec sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double shift = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double t = (cumulative - budget) / static_cast<double>(j + 1);
    if (sorted[j] - t > 0.0) shift = t;
  }
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = std::max(v[j] - shift, 0.0);
  return p;
}

inline rvec rates_from_gains(const rmat& g, std::span<const double> p, double sigma2) {
  rvec r(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) r[k] = rate_from_sinr(sinr_from_gains(g, p, sigma2, k));
  return r;
}

inline double sum_rate(const rmat& g, std::span<const double> p, double sigma2) {
  const rvec r = rates_from_gains(g, p, sigma2);
  return std::accumulate(r.begin(), r.end(), 0.0);
}

/// Projected gradient ascent of the sum rate over the power budget, gains fixed.
inline rvec sumrate_power(const rmat& g, rvec p, double sigma2, double budget, int max_iter = 300) {
  const std::size_t n = p.size();
  double value = sum_rate(g, p, sigma2);
  double step = budget;
  for (int it = 0; it < max_iter; ++it) {
    rvec grad(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      double total = sigma2;
      for (std::size_t i = 0; i < n; ++i) total += g(k, i) * p[i];
      const double interf = total - g(k, k) * p[k];
      for (std::size_t j = 0; j < n; ++j)
        grad[j] += (g(k, j) / total - (j == k ? 0.0 : g(k, j) / interf)) / std::numbers::ln2;
    }
    const double gnorm = norm2(std::span<const double>(grad));
    if (!(gnorm > 0.0)) break;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      rvec trial(n);
      for (std::size_t j = 0; j < n; ++j) trial[j] = p[j] + step * grad[j] / gnorm;
      trial = project_capped_simplex(trial, budget);
      const double v = sum_rate(g, trial, sigma2);
      if (v > value) {
        const double gain = v - value;
        p = std::move(trial);
        value = v;
        moved = gain > 1e-12 * std::max(1.0, value);
        step *= 2.0;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return p;
}

/// Phase step for the sum-rate benchmark: bisection on a sum-rate target,
/// split across users in proportion to their current rates, each target
/// tested with the same ADMM feasibility engine.
inline PhaseVector sumrate_theta(const QuadraticForms& forms, std::span<const double> p, double sigma2,
                                 const PhaseVector& theta, const AdmmOptions& admm, int levels = 12) {
  const std::size_t n = forms.users();
  const rvec r0 = rates_from_gains(forms.gains(theta.values()), p, sigma2);
  const double sum0 = std::accumulate(r0.begin(), r0.end(), 0.0);
  if (!(sum0 > 0.0)) return theta;
  double upper = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double amp = std::abs(forms.b(k, k));
    for (const auto& x : forms.a[k][k]) amp += std::abs(x);
    upper += rate_from_sinr(p[k] * amp * amp / sigma2);
  }
  double lo = sum0;
  double hi = std::max(upper, sum0);
  PhaseVector best = theta;
  double best_sum = sum0;
  AdmmState warm = AdmmState::start(theta, n, admm.rho);
  rvec gammas(n);
  for (int l = 0; l < levels && hi - lo > 1e-4 * hi; ++l) {
    const double target = 0.5 * (lo + hi);
    for (std::size_t k = 0; k < n; ++k) gammas[k] = std::exp2(target * r0[k] / sum0) - 1.0;
    AdmmResult run = admm_feasibility(forms, p, sigma2, gammas, warm, admm);
    if (run.feasible) {
      const rvec r = rates_from_gains(forms.gains(run.state.theta.values()), p, sigma2);
      const double s = std::accumulate(r.begin(), r.end(), 0.0);
      if (s > best_sum) {
        best_sum = s;
        best = run.state.theta;
      }
      lo = std::max(target, s);
      warm = std::move(run.state);
    } else {
      hi = target;
    }
  }
  return best;
}

inline AoResult sumrate_optimize(const SystemConfig& cfg, const ChannelSet& ch, std::span<const TaskModel> tasks,
                                 const AoOptions& opts = {}) {
  AoResult res;
  AllocationState cur = default_init(cfg, ch);
  double current = sum_rate(gain_matrix(composite_channels(ch, cur.theta, cfg.beta), cur.w), cur.p, cfg.sigma2);
  evaluate(cfg, ch, tasks, cur);
  res.trace.push_back(cur.objective);
  for (int n = 0; n < opts.max_outer; ++n) {
    auto h = composite_channels(ch, cur.theta, cfg.beta);
    cur.p = sumrate_power(gain_matrix(h, cur.w), cur.p, cfg.sigma2, cfg.P);
    cur.w = optimal_beamformers_all(h, cur.p, cfg.sigma2);
    if (cfg.beta != 0.0) {
      const QuadraticForms forms = build_quadratics(ch, cur.w, cfg.beta);
      cur.theta = sumrate_theta(forms, cur.p, cfg.sigma2, cur.theta, opts.theta.admm);
    }
    const double next = sum_rate(gain_matrix(composite_channels(ch, cur.theta, cfg.beta), cur.w), cur.p, cfg.sigma2);
    evaluate(cfg, ch, tasks, cur);
    res.trace.push_back(cur.objective);
    res.outer_iterations = n + 1;
    const double change = std::abs(next - current);
    current = next;
    if (change <= opts.rel_tolerance * std::abs(next)) {
      res.converged = true;
      break;
    }
  }
  res.state = std::move(cur);
  return res;
}

struct SchemeOptions {
  AoOptions ao;
  std::uint64_t phase_seed = 0;  // random_phase draw
};

/// All schemes are scored by the same max-error objective.
inline AoResult run_scheme(Scheme scheme, const SystemConfig& cfg, const ChannelSet& ch,
                           std::span<const TaskModel> tasks, const SchemeOptions& opts = {}) {
  switch (scheme) {
    case Scheme::proposed:
      return alternating_optimize(cfg, ch, tasks, default_init(cfg, ch), opts.ao);
    case Scheme::no_ris: {
      SystemConfig c = cfg;
      c.beta = 0.0;
      AoResult r = alternating_optimize(c, ch, tasks, default_init(c, ch), opts.ao);
      return r;
    }
    case Scheme::random_phase: {
      Xoshiro256 rng(opts.phase_seed);
      AllocationState init;
      init.theta = PhaseVector::random(ch.elements(), rng);
      init.p = equal_power(ch.users(), cfg.P);
      init.w = matched_filters(composite_channels(ch, init.theta, cfg.beta));
      AoOptions ao = opts.ao;
      ao.update_theta = false;
      return alternating_optimize(cfg, ch, tasks, std::move(init), ao);
    }
    case Scheme::sumrate_max:
      return sumrate_optimize(cfg, ch, tasks, opts.ao);
  }
  throw contract_error("run_scheme: unknown scheme");
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct TrialRecord {
  Scheme scheme = Scheme::proposed;
  double sweep_value = 0.0;
  std::uint64_t trial = 0;
  double objective = 0.0;  // reporting clamp applied
  rvec per_task_error;     // reporting clamp applied
  int outer_iterations = 0;
  bool converged = false;
  rvec trace;              // AO objective per outer iteration, unclamped
};

struct SweepSummary {
  Scheme scheme = Scheme::proposed;
  double sweep_value = 0.0;
  std::size_t trials = 0;
  double mean = 0.0;
  double stddev = 0.0;
  rvec mean_per_task;
};

struct SweepSpec {
  std::string variable;  // "M", "N" or empty for a single point
  std::vector<std::size_t> values;
};

struct MonteCarloResult {
  std::string sweep_variable;
  std::vector<TrialRecord> records;  // ordered by (sweep value, trial, scheme)
  std::vector<SweepSummary> summary;
};

inline SystemConfig apply_sweep(SystemConfig cfg, const std::string& var, std::size_t value) {
  if (var == "M") {
    cfg.M = value;
  } else if (var == "N") {
    cfg.N = value;
  } else if (!var.empty()) {
    throw config_error("sweep variable must be M or N, got '" + var + "'");
  }
  return cfg;
}

/// Runs `body(i)` for i in [0, count) on a small worker pool.
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

/// Channels for trial t come from derive_seed(cfg.seed, t) and are shared by
/// all schemes at a given sweep point.
inline MonteCarloResult monte_carlo(const SystemConfig& cfg, std::span<const TaskModel> tasks,
                                    const std::vector<Scheme>& schemes, std::size_t trials, const SweepSpec& sweep = {},
                                    const AoOptions& ao = {}, unsigned threads = 0) {
  std::vector<std::size_t> values = sweep.values;
  if (sweep.variable.empty()) values = {0};
  const std::size_t per_point = trials * schemes.size();
  MonteCarloResult res;
  res.sweep_variable = sweep.variable;
  res.records.resize(values.size() * per_point);

  parallel_for(values.size() * trials, threads, [&](std::size_t job) {
    const std::size_t vi = job / trials;
    const std::uint64_t t = job % trials;
    SystemConfig c = apply_sweep(cfg, sweep.variable, values[vi]);
    if (c.dist_user_bs.size() != c.K) c.dist_user_bs.assign(c.K, c.dist_user_bs.empty() ? 100.0 : c.dist_user_bs[0]);
    if (c.dist_user_ris.size() != c.K) c.dist_user_ris.assign(c.K, c.dist_user_ris.empty() ? 20.0 : c.dist_user_ris[0]);
    const std::uint64_t seed = derive_seed(cfg.seed, t);
    const ChannelSet ch = generate_channels(c, seed);
    for (std::size_t s = 0; s < schemes.size(); ++s) {
      SchemeOptions so;
      so.ao = ao;
      so.phase_seed = derive_seed(seed, 0x9e37u);
      const AoResult r = run_scheme(schemes[s], c, ch, tasks, so);
      TrialRecord rec;
      rec.scheme = schemes[s];
      rec.sweep_value = static_cast<double>(values[vi]);
      rec.trial = t;
      rec.objective = clamp_reported_error(r.state.objective);
      for (double e : r.state.per_task_error) rec.per_task_error.push_back(clamp_reported_error(e));
      rec.outer_iterations = r.outer_iterations;
      rec.converged = r.converged;
      rec.trace = r.trace;
      res.records[vi * per_point + t * schemes.size() + s] = std::move(rec);
    }
  });

  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    for (std::size_t s = 0; s < schemes.size(); ++s) {
      SweepSummary sum;
      sum.scheme = schemes[s];
      sum.sweep_value = static_cast<double>(values[vi]);
      sum.trials = trials;
      sum.mean_per_task.assign(tasks.size(), 0.0);
      for (std::size_t t = 0; t < trials; ++t) {
        const auto& rec = res.records[vi * per_point + t * schemes.size() + s];
        sum.mean += rec.objective;
        for (std::size_t k = 0; k < tasks.size(); ++k) sum.mean_per_task[k] += rec.per_task_error[k];
      }
      const double n = static_cast<double>(trials);
      sum.mean /= n;
      for (auto& x : sum.mean_per_task) x /= n;
      double var = 0.0;
      for (std::size_t t = 0; t < trials; ++t) {
        const double d = res.records[vi * per_point + t * schemes.size() + s].objective - sum.mean;
        var += d * d;
      }
      sum.stddev = trials > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
      res.summary.push_back(std::move(sum));
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Single-user scaling

/// theta_m = exp(j(arg h_r,m - arg g_m)): co-phases every reflected term of a
/// single-antenna link, so |sum_m conj(theta_m) h_r,m conj(g_m)| = sum_m |h_r,m| |g_m|.
inline PhaseVector align_single_user(std::span<const cplx> h_r, std::span<const cplx> g) {
  if (h_r.size() != g.size()) throw contract_error("align_single_user: length mismatch");
  cvec e(h_r.size());
  for (std::size_t m = 0; m < e.size(); ++m) e[m] = h_r[m] * std::conj(g[m]);
  return PhaseVector::project(e);
}

struct ScalingRow {
  std::size_t M = 0;
  double mean_error = 0.0;
  double mean_snr = 0.0;
};

struct ScalingResult {
  std::vector<ScalingRow> rows;
  double slope = 0.0;  // of ln(mean error) against ln(log2 M)
  double intercept = 0.0;
};

/// Single-user, single-antenna configuration with the direct link removed.
inline SystemConfig scaling_config(SystemConfig cfg, std::size_t m) {
  cfg.K = 1;
  cfg.N = 1;
  cfg.M = m;
  cfg.dist_user_bs.resize(1, 100.0);
  cfg.dist_user_ris.resize(1, 20.0);
  return cfg;
}

inline ChannelSet scaling_channels(const SystemConfig& c, std::uint64_t seed) {
  ChannelSet ch = generate_channels(c, seed);
  for (auto& x : ch.h_direct[0]) x = cplx{};
  return ch;
}

/// Mean error per M with theta chosen by the phase optimizer at full power.
inline ScalingResult scaling_experiment(const SystemConfig& base, const TaskModel& task,
                                        const std::vector<std::size_t>& m_list, std::size_t trials,
                                        const ThetaOptions& opts = {}) {
  ScalingResult res;
  const std::vector<TaskModel> tasks{task};
  const rvec p{base.P};
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t m : m_list) {
    const SystemConfig c = scaling_config(base, m);
    ScalingRow row;
    row.M = m;
    for (std::size_t t = 0; t < trials; ++t) {
      const ChannelSet ch = scaling_channels(c, derive_seed(c.seed, t));
      const std::vector<cvec> w{cvec{cplx{1.0, 0.0}}};
      const QuadraticForms forms = build_quadratics(ch, w, c.beta);
      const ThetaResult tr = optimize_theta(forms, p, c, tasks, PhaseVector::ones(m), opts);
      row.mean_snr += sinr_all(forms, p, c.sigma2, tr.theta.values())[0];
      row.mean_error += tr.delta;
    }
    row.mean_error /= static_cast<double>(trials);
    row.mean_snr /= static_cast<double>(trials);
    xs.push_back(std::log(std::log2(static_cast<double>(m))));
    ys.push_back(std::log(row.mean_error));
    res.rows.push_back(row);
  }
  if (xs.size() >= 2) {
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    res.slope = sxy / sxx;
    res.intercept = my - res.slope * mx;
  }
  return res;
}

/// Mean received SNR with all phases at 1 (no alignment) for each M.
/// Without alignment the reflected sum adds incoherently and the mean SNR
/// grows linearly in M.
inline rvec unaligned_mean_snr(const SystemConfig& base, const std::vector<std::size_t>& m_list,
                               std::size_t trials) {
  rvec out;
  for (std::size_t m : m_list) {
    const SystemConfig c = scaling_config(base, m);
    double acc = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const ChannelSet ch = scaling_channels(c, derive_seed(c.seed ^ 0x5eedu, t));
      const cvec h = composite_channel(ch, PhaseVector::ones(m), 0, c.beta);
      acc += c.P * std::norm(h[0]) / c.sigma2;
    }
    out.push_back(acc / static_cast<double>(trials));
  }
  return out;
}

}  // namespace risel
