#pragma once

// Transmit-power control for fixed beamformers and RIS phases.
//
// The max learning error over users is non-convex in p. Each user's error is
// majorized by a convex surrogate obtained by linearizing the concave
// log-interference term at an anchor p*; minimizing the max of surrogates
// over the power simplex and re-anchoring gives a monotone
// majorize-minimize loop that converges to a KKT point.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "risel/errors.hpp"
#include "risel/linalg.hpp"
#include "risel/metrics.hpp"
#include "risel/scenario.hpp"

namespace risel {

/// Everything the surrogates need: channel power gains, the anchor, and the task models.
struct SurrogateContext {
  rmat gains;        // gains(k, i) = |w_k^H h_i|^2
  rvec p_star;       // anchor [W]
  double sigma2 = 1.0;
  double B = 1.0;
  double T = 1.0;
  double P = 1.0;    // power budget [W]
  std::vector<TaskModel> tasks;

  std::size_t users() const { return tasks.size(); }

  /// BT / (D_k ln 2): samples per nat of rate.
  double kappa(std::size_t k) const { return B * T / (tasks[k].D * std::numbers::ln2); }

  double interference(std::span<const double> p, std::size_t k) const {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (i != k) s += gains(k, i) * p[i];
    return s;
  }

  double received(std::span<const double> p, std::size_t k) const {
    double s = sigma2;
    for (std::size_t i = 0; i < p.size(); ++i) s += gains(k, i) * p[i];
    return s;
  }

  void validate() const {
    const std::size_t k = users();
    if (k == 0 || gains.rows() != k || gains.cols() != k || p_star.size() != k)
      throw contract_error("SurrogateContext: inconsistent sizes");
    if (!(sigma2 > 0.0) || !(B > 0.0) || !(T > 0.0) || !(P > 0.0))
      throw contract_error("SurrogateContext: sigma2, B, T and P must be positive");
    for (double g : gains.data())
      if (!(g >= 0.0) || !std::isfinite(g)) throw contract_error("SurrogateContext: gains must be finite and >= 0");
    double total = 0.0;
    for (double x : p_star) {
      if (!(x >= 0.0)) throw contract_error("SurrogateContext: anchor powers must be >= 0");
      total += x;
    }
    if (total > P * (1.0 + 1e-9)) throw contract_error("SurrogateContext: anchor exceeds the power budget");
  }
};

inline SurrogateContext make_surrogate_context(const SystemConfig& cfg, std::span<const TaskModel> tasks,
                                               rmat gains, rvec p_star) {
  SurrogateContext ctx;
  ctx.gains = std::move(gains);
  ctx.p_star = std::move(p_star);
  ctx.sigma2 = cfg.sigma2;
  ctx.B = cfg.B;
  ctx.T = cfg.T;
  ctx.P = cfg.P;
  ctx.tasks.assign(tasks.begin(), tasks.end());
  return ctx;
}

/// Concave inner term of the surrogate for user k:
///   kappa_k [ ln(S_k(p)) - (I_k(p)+s2)/(I_k(p*)+s2) - ln(I_k(p*)+s2) + 1 ]
/// evaluated in the algebraically equal form
///   kappa_k [ ln(S_k(p)/(I_k(p*)+s2)) + (I_k(p*) - I_k(p))/(I_k(p*)+s2) ].
inline double surrogate_bracket(const SurrogateContext& ctx, std::span<const double> p, std::size_t k) {
  const double anchor = ctx.interference(ctx.p_star, k) + ctx.sigma2;
  const double ratio = ctx.received(p, k) / anchor;
  if (!(ratio > 0.0)) return -std::numeric_limits<double>::infinity();
  return ctx.kappa(k) * (std::log(ratio) + (anchor - ctx.sigma2 - ctx.interference(p, k)) / anchor);
}

/// Surrogate error of user k; +inf where the bracket is not positive.
inline double surrogate_value(const SurrogateContext& ctx, std::span<const double> p, std::size_t k) {
  if (k >= ctx.users()) throw contract_error("surrogate_value: user index out of range");
  const double g = surrogate_bracket(ctx, p, k);
  if (!(g > 0.0)) return std::numeric_limits<double>::infinity();
  return ctx.tasks[k].c * std::pow(g, -ctx.tasks[k].d);
}

/// Exact learning error of user k at power p for the gains in ctx.
inline double true_value(const SurrogateContext& ctx, std::span<const double> p, std::size_t k) {
  const double interference = ctx.interference(p, k) + ctx.sigma2;
  const double g = ctx.kappa(k) * std::log1p(ctx.gains(k, k) * p[k] / interference);
  if (!(g > 0.0)) return std::numeric_limits<double>::infinity();
  return ctx.tasks[k].c * std::pow(g, -ctx.tasks[k].d);
}

inline double true_objective(const SurrogateContext& ctx, std::span<const double> p) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < ctx.users(); ++k) worst = std::max(worst, true_value(ctx, p, k));
  return worst;
}

inline double surrogate_objective(const SurrogateContext& ctx, std::span<const double> p) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < ctx.users(); ++k) worst = std::max(worst, surrogate_value(ctx, p, k));
  return worst;
}

namespace detail {

/// d(bracket_k)/dp_j
inline rvec bracket_gradient(const SurrogateContext& ctx, std::span<const double> p, std::size_t k) {
  const double anchor = ctx.interference(ctx.p_star, k) + ctx.sigma2;
  const double s = ctx.received(p, k);
  const double kap = ctx.kappa(k);
  rvec grad(ctx.users());
  for (std::size_t j = 0; j < grad.size(); ++j) {
    const double gkj = ctx.gains(k, j);
    grad[j] = kap * (gkj / s - (j != k ? gkj / anchor : 0.0));
  }
  return grad;
}

}  // namespace detail

/// Gradient of the surrogate of user k with respect to p.
inline rvec surrogate_gradient(const SurrogateContext& ctx, std::span<const double> p, std::size_t k) {
  if (k >= ctx.users()) throw contract_error("surrogate_gradient: user index out of range");
  const double g = surrogate_bracket(ctx, p, k);
  rvec grad(ctx.users(), std::numeric_limits<double>::quiet_NaN());
  if (!(g > 0.0)) return grad;
  const auto& task = ctx.tasks[k];
  const double outer = -task.c * task.d * std::pow(g, -task.d - 1.0);
  const rvec inner_grad = detail::bracket_gradient(ctx, p, k);
  for (std::size_t j = 0; j < grad.size(); ++j) grad[j] = outer * inner_grad[j];
  return grad;
}

/// Hessian of the surrogate of user k (positive semidefinite wherever finite).
inline rmat surrogate_hessian(const SurrogateContext& ctx, std::span<const double> p, std::size_t k) {
  const std::size_t n = ctx.users();
  const double g = surrogate_bracket(ctx, p, k);
  rmat hess(n, n, std::numeric_limits<double>::quiet_NaN());
  if (!(g > 0.0)) return hess;
  const auto& task = ctx.tasks[k];
  const rvec dg = detail::bracket_gradient(ctx, p, k);
  const double s = ctx.received(p, k);
  const double kap = ctx.kappa(k);
  const double a = task.c * task.d * (task.d + 1.0) * std::pow(g, -task.d - 2.0);
  const double b = task.c * task.d * std::pow(g, -task.d - 1.0) * kap / (s * s);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) hess(i, j) = a * dg[i] * dg[j] + b * ctx.gains(k, i) * ctx.gains(k, j);
  return hess;
}

struct SubproblemOptions {
  int max_iter = 5000;        // total Newton steps
  double gap_tolerance = 1e-9;   // barrier duality gap, relative to the anchor objective
};

struct SubproblemResult {
  rvec p;
  double value = std::numeric_limits<double>::infinity();  // max_k surrogate at p
  double kkt_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

namespace detail {

/// Barrier state for  min t  s.t.  f_k(x) <= t,  x >= 0,  sum x <= 1,
/// with x = p / P and f_k the surrogates divided by `scale`.
struct BarrierProblem {
  const SurrogateContext& ctx;
  double scale;

  rvec powers(std::span<const double> x) const {
    rvec p(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) p[i] = ctx.P * x[i];
    return p;
  }

  bool strictly_feasible(std::span<const double> z) const {
    const std::size_t n = ctx.users();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(z[i] > 0.0)) return false;
      sum += z[i];
    }
    if (!(sum < 1.0)) return false;
    const rvec p = powers(z.first(n));
    for (std::size_t k = 0; k < n; ++k) {
      const double f = surrogate_value(ctx, p, k) / scale;
      if (!(z[n] - f > 0.0)) return false;
    }
    return true;
  }

  /// value(b) - value(a) without forming the two large sums.
  double difference(std::span<const double> a, std::span<const double> b, double s) const {
    if (!strictly_feasible(b)) return std::numeric_limits<double>::infinity();
    const std::size_t n = ctx.users();
    const rvec pa = powers(a.first(n));
    const rvec pb = powers(b.first(n));
    double d = s * (b[n] - a[n]);
    double sa = 0.0;
    double sb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d -= std::log(b[i] / a[i]);
      sa += a[i];
      sb += b[i];
    }
    d -= std::log((1.0 - sb) / (1.0 - sa));
    for (std::size_t k = 0; k < n; ++k)
      d -= std::log((b[n] - surrogate_value(ctx, pb, k) / scale) / (a[n] - surrogate_value(ctx, pa, k) / scale));
    return d;
  }

  void derivatives(std::span<const double> z, double s, rvec& grad, rmat& hess) const {
    const std::size_t n = ctx.users();
    const std::size_t dim = n + 1;
    grad.assign(dim, 0.0);
    hess = rmat(dim, dim);
    const rvec p = powers(z.first(n));
    const double pscale = ctx.P / scale;

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += z[i];
    const double slack_budget = 1.0 - sum;

    grad[n] = s;
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] += -1.0 / z[i] + 1.0 / slack_budget;
      hess(i, i) += 1.0 / (z[i] * z[i]);
      for (std::size_t j = 0; j < n; ++j) hess(i, j) += 1.0 / (slack_budget * slack_budget);
    }

    for (std::size_t k = 0; k < n; ++k) {
      const double f = surrogate_value(ctx, p, k) / scale;
      const double slack = z[n] - f;
      rvec df = surrogate_gradient(ctx, p, k);
      for (auto& v : df) v *= pscale;
      const rmat d2f = surrogate_hessian(ctx, p, k);

      grad[n] -= 1.0 / slack;
      for (std::size_t i = 0; i < n; ++i) grad[i] += df[i] / slack;

      const double inv2 = 1.0 / (slack * slack);
      hess(n, n) += inv2;
      for (std::size_t i = 0; i < n; ++i) {
        hess(i, n) -= df[i] * inv2;
        hess(n, i) -= df[i] * inv2;
        for (std::size_t j = 0; j < n; ++j)
          hess(i, j) += df[i] * df[j] * inv2 + d2f(i, j) * pscale * ctx.P / slack;
      }
    }
  }
};

}  // namespace detail

/// Minimizes max_k surrogate_k(p | p*) over { p >= 0, sum p <= P } with a
/// log-barrier interior-point method (Newton centering, geometric barrier
/// schedule). The reported KKT residual is the relative stationarity defect
/// of the Lagrangian built from the barrier's dual estimates.
inline SubproblemResult solve_subproblem(const SurrogateContext& ctx, const SubproblemOptions& opts = {}) {
  ctx.validate();
  const std::size_t n = ctx.users();
  SubproblemResult result;
  result.p = ctx.p_star;
  result.value = surrogate_objective(ctx, ctx.p_star);

  for (std::size_t k = 0; k < n; ++k)
    if (!(ctx.gains(k, k) > 0.0)) return result;  // user k can never be served

  // Strictly interior start close to the anchor.
  rvec x_star(n);
  for (std::size_t i = 0; i < n; ++i) x_star[i] = ctx.p_star[i] / ctx.P;
  rvec x0(n);
  bool found_start = false;
  for (double eps = 1e-3; eps <= 1.0; eps *= 2.0) {
    for (std::size_t i = 0; i < n; ++i) x0[i] = (1.0 - eps) * x_star[i] + eps / static_cast<double>(n + 1);
    rvec p0(n);
    for (std::size_t i = 0; i < n; ++i) p0[i] = ctx.P * x0[i];
    if (std::isfinite(surrogate_objective(ctx, p0))) {
      found_start = true;
      break;
    }
    if (eps >= 0.5) {
      eps = 1.0;
      for (std::size_t i = 0; i < n; ++i) x0[i] = 1.0 / static_cast<double>(n + 1);
      for (std::size_t i = 0; i < n; ++i) p0[i] = ctx.P * x0[i];
      found_start = std::isfinite(surrogate_objective(ctx, p0));
      break;
    }
  }
  if (!found_start) return result;

  rvec p0(n);
  for (std::size_t i = 0; i < n; ++i) p0[i] = ctx.P * x0[i];
  double scale = std::isfinite(result.value) ? result.value : surrogate_objective(ctx, p0);
  scale = std::max(scale, std::numeric_limits<double>::min());

  detail::BarrierProblem prob{ctx, scale};
  rvec z(n + 1);
  std::copy(x0.begin(), x0.end(), z.begin());
  z[n] = surrogate_objective(ctx, p0) / scale + 1.0;

  const double m_constraints = static_cast<double>(2 * n + 1);
  double s = 1.0;
  rvec grad;
  rmat hess;
  int iters = 0;
  bool centered = false;
  // Last iterate that reached the central path, with its barrier weight.
  rvec z_good;
  double s_good = 0.0;
  while (iters < opts.max_iter) {
    // Newton centering at barrier weight s.
    centered = false;
    for (int inner = 0; inner < 200 && iters < opts.max_iter; ++inner) {
      prob.derivatives(z, s, grad, hess);
      rvec rhs(grad.size());
      for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = -grad[i];
      rvec step;
      try {
        const auto f = risel::detail::lu_factor(hess);
        step = risel::detail::lu_solve(f, std::span<const double>(rhs));
      } catch (const numerical_error&) {
        break;
      }
      double decrement = 0.0;
      for (std::size_t i = 0; i < step.size(); ++i) decrement -= grad[i] * step[i];
      ++iters;
      if (!(decrement >= 0.0) || !std::isfinite(decrement)) break;
      if (decrement <= 1e-10) {
        centered = true;
        break;
      }
      double alpha = 1.0;
      rvec trial(z.size());
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        for (std::size_t i = 0; i < z.size(); ++i) trial[i] = z[i] + alpha * step[i];
        if (prob.difference(z, trial, s) <= -0.25 * alpha * decrement) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        // No measurable decrease left at this barrier weight.
        centered = decrement < 1e-6;
        break;
      }
      z = trial;
    }
    if (!centered) {
      // Round-off stalls centering at large weights; fall back to the last centered point.
      if (!z_good.empty()) {
        z = z_good;
        s = s_good;
        centered = m_constraints / s < 1e-8;
      }
      break;
    }
    z_good = z;
    s_good = s;
    if (m_constraints / s < opts.gap_tolerance) break;
    s *= 20.0;
  }

  rvec x(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(n));
  rvec p = prob.powers(x);
  double value = surrogate_objective(ctx, p);

  // Stationarity of sum_k lam_k grad f_k + nu 1 - eta = 0 with barrier duals.
  {
    double sum = 0.0;
    for (double xi : x) sum += xi;
    rvec station(n, 0.0);
    double magnitude = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double lam = 1.0 / (s * (z[n] - surrogate_value(ctx, p, k) / scale));
      const rvec df = surrogate_gradient(ctx, p, k);
      for (std::size_t i = 0; i < n; ++i) {
        station[i] += lam * df[i] * ctx.P / scale;
        magnitude = std::max(magnitude, std::abs(lam * df[i] * ctx.P / scale) * x[i]);
      }
    }
    const double nu = 1.0 / (s * (1.0 - sum));
    double worst = 0.0;
    // Each component weighted by x_i so coordinates pinned at the boundary do not dominate.
    for (std::size_t i = 0; i < n; ++i) {
      const double eta = 1.0 / (s * x[i]);
      magnitude = std::max(magnitude, nu * x[i]);
      worst = std::max(worst, std::abs(station[i] + nu - eta) * x[i]);
    }
    result.kkt_residual = worst / std::max(magnitude, std::numeric_limits<double>::min());
  }

  // Spend any budget the barrier left unused if that does not hurt.
  double sum = 0.0;
  for (double v : p) sum += v;
  if (sum > 0.0 && sum < ctx.P) {
    rvec full(n);
    for (std::size_t i = 0; i < n; ++i) full[i] = p[i] * (ctx.P / sum);
    const double v_full = surrogate_objective(ctx, full);
    if (v_full <= value) {
      p = std::move(full);
      value = v_full;
    }
  }

  // Never return something worse than the anchor.
  if (value <= result.value || !std::isfinite(result.value)) {
    result.p = std::move(p);
    result.value = value;
  }
  result.iterations = iters;
  result.converged = centered && std::isfinite(result.value);
  return result;
}

struct PowerOptions {
  int max_outer = 50;
  double rel_tolerance = 1e-6;
  SubproblemOptions subproblem;
};

struct PowerResult {
  rvec p;
  rvec trace;  // true max-error objective, starting with the initial point
  int outer_iterations = 0;
  bool converged = false;
  bool subproblem_flag = false;  // some subproblem hit its iteration cap
};

/// Successive convex approximation loop. `base` supplies gains and tasks; its
/// anchor is replaced by the iterates, starting from p_init.
inline PowerResult optimize_power(SurrogateContext base, rvec p_init, const PowerOptions& opts = {}) {
  base.p_star = std::move(p_init);
  base.validate();
  PowerResult out;
  out.p = base.p_star;
  double current = true_objective(base, out.p);
  out.trace.push_back(current);

  for (int n = 0; n < opts.max_outer; ++n) {
    base.p_star = out.p;
    const SubproblemResult sub = solve_subproblem(base, opts.subproblem);
    if (!sub.converged) out.subproblem_flag = true;
    const double next = true_objective(base, sub.p);
    ++out.outer_iterations;
    if (!(next <= current)) {
      // Numerical noise only; the majorizer guarantees descent.
      out.converged = true;
      break;
    }
    out.p = sub.p;
    out.trace.push_back(next);
    const bool done = std::abs(next - current) < opts.rel_tolerance * std::max(1.0, current);
    current = next;
    if (done) {
      out.converged = true;
      break;
    }
  }
  return out;
}

/// Uniform split P/K, the standard starting point.
inline rvec equal_power(std::size_t k, double budget) { return rvec(k, budget / static_cast<double>(k)); }

}  // namespace risel
