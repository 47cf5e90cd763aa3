#pragma once

// RIS phase design for fixed powers and combiners.
//
// The max learning error is handled by bisection on an error level delta:
// each level becomes per-user SINR thresholds gamma_k(delta), and finding a
// unit-modulus theta meeting all of them is split by ADMM into
//   * a per-user projection onto one quadratic SINR constraint (a
//     one-constraint QCQP, solved exactly through its Lagrange multiplier),
//   * a consensus step projecting the average onto the unit circle,
//   * a scaled dual update.
// The per-user projections are independent given (theta, u), so they can be
// computed locally at each user and aggregated.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "risel/errors.hpp"
#include "risel/linalg.hpp"
#include "risel/metrics.hpp"
#include "risel/scenario.hpp"

namespace risel {

/// Reflected and direct contributions, arranged so that for every phase
/// vector theta
///   theta^H a[k][i] + b[k][i] == w_k^H h_i(theta).
/// Concretely a[k][i] = beta diag(h_r,i) conj(G w_k) and b[k][i] = w_k^H h_d,i.
struct QuadraticForms {
  std::vector<std::vector<cvec>> a;  // K x K vectors of length M
  cmat b;                            // K x K

  std::size_t users() const { return a.size(); }
  std::size_t elements() const { return a.empty() || a[0].empty() ? 0 : a[0][0].size(); }

  /// theta^H a[k][i] + b[k][i]
  cplx response(std::span<const cplx> theta, std::size_t k, std::size_t i) const {
    return inner(theta, std::span<const cplx>(a[k][i])) + b(k, i);
  }

  rmat gains(std::span<const cplx> theta) const {
    const std::size_t n = users();
    rmat g(n, n);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i) g(k, i) = std::norm(response(theta, k, i));
    return g;
  }
};

inline QuadraticForms build_quadratics(const ChannelSet& ch, const std::vector<cvec>& w, double beta) {
  const std::size_t k_users = ch.users();
  const std::size_t m_el = ch.elements();
  if (w.size() != k_users) throw contract_error("build_quadratics: need one combiner per user");
  QuadraticForms f;
  f.a.assign(k_users, std::vector<cvec>(k_users, cvec(m_el)));
  f.b = cmat(k_users, k_users);
  for (std::size_t k = 0; k < k_users; ++k) {
    if (w[k].size() != ch.antennas()) throw contract_error("build_quadratics: combiner length mismatch");
    const cvec gw = matvec(ch.G, w[k]);
    for (std::size_t i = 0; i < k_users; ++i) {
      for (std::size_t m = 0; m < m_el; ++m) f.a[k][i][m] = beta * ch.h_ris[i][m] * std::conj(gw[m]);
      f.b(k, i) = inner(w[k], ch.h_direct[i]);
    }
  }
  return f;
}

/// SINR threshold met exactly at error level delta:
///   gamma = 2^{D (c/delta)^{1/d} / (B T)} - 1.
/// Returns +inf once the exponent exceeds 1000 (level unreachable).
inline double gamma_from_delta(const TaskModel& task, double delta, double B, double T) {
  if (!(delta > 0.0)) throw domain_error("gamma_from_delta: error level must be positive");
  const double exponent = task.D * std::pow(task.c / delta, 1.0 / task.d) / (B * T);
  if (!(exponent <= 1000.0)) return std::numeric_limits<double>::infinity();
  return std::expm1(exponent * std::numbers::ln2);
}

// ---------------------------------------------------------------------------
// Per-user projection

/// min ||q - zeta||^2  s.t.  q^H A q - 2 Re(b^H q) <= tau
/// with A = sum_l weights[l] f_l f_l^H kept in factored form. All quantities
/// are divided by the noise power, which leaves the minimizer unchanged.
struct QcqpSubproblem {
  cmat factors;  // M x K, column i is a[k][i]
  rvec weights;  // gamma p_i / s2 for i != k, -p_k / s2 for i == k
  cvec b;
  double tau = 0.0;
  cvec zeta;

  std::size_t dimension() const { return factors.rows(); }

  cmat dense_A() const {
    const std::size_t m = factors.rows();
    cmat a(m, m);
    for (std::size_t l = 0; l < factors.cols(); ++l)
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < m; ++c) a(r, c) += weights[l] * factors(r, l) * std::conj(factors(c, l));
    return a;
  }

  /// q^H A q - 2 Re(b^H q)
  double constraint(std::span<const cplx> q) const {
    double v = 0.0;
    for (std::size_t l = 0; l < factors.cols(); ++l) {
      cplx proj{};
      for (std::size_t r = 0; r < factors.rows(); ++r) proj += std::conj(factors(r, l)) * q[r];
      v += weights[l] * std::norm(proj);
    }
    return v - 2.0 * inner(std::span<const cplx>(b), q).real();
  }
};

/// SINR_k >= gamma_k written as a QCQP constraint in q.
inline QcqpSubproblem build_qcqp(const QuadraticForms& forms, std::span<const double> p, double sigma2,
                                 double gamma, std::size_t k, cvec zeta) {
  const std::size_t n = forms.users();
  const std::size_t m = forms.elements();
  QcqpSubproblem sub;
  sub.factors = cmat(m, n);
  sub.weights.assign(n, 0.0);
  sub.b.assign(m, cplx{});
  sub.tau = p[k] * std::norm(forms.b(k, k)) / sigma2 - gamma;
  for (std::size_t i = 0; i < n; ++i) {
    const double wgt = (i == k ? -p[k] : gamma * p[i]) / sigma2;
    sub.weights[i] = wgt;
    const cvec& ai = forms.a[k][i];
    const cplx bi = forms.b(k, i);
    for (std::size_t r = 0; r < m; ++r) {
      sub.factors(r, i) = ai[r];
      sub.b[r] -= wgt * ai[r] * std::conj(bi);
    }
    if (i != k) sub.tau -= gamma * p[i] * std::norm(bi) / sigma2;
  }
  sub.zeta = std::move(zeta);
  return sub;
}

/// Subproblem in the eigenbasis of A. Only the nonzero spectrum is stored;
/// b lies in range(A), so the complement contributes nothing to chi.
struct QcqpSpectral {
  EigDecomposition eig;  // values lambda, vectors V (M x r)
  cvec b_t;              // V^H b
  double tau = 0.0;
  double lambda_min = 0.0;  // most negative nonzero eigenvalue, 0 if none
  double lambda_max = 0.0;  // most positive nonzero eigenvalue, 0 if none

  /// Feasible multiplier interval (-1/lambda_max, -1/lambda_min), infinite ends when a sign is absent.
  double interval_low() const {
    return lambda_max > 0.0 ? -1.0 / lambda_max : -std::numeric_limits<double>::infinity();
  }
  double interval_high() const {
    return lambda_min < 0.0 ? -1.0 / lambda_min : std::numeric_limits<double>::infinity();
  }

  cvec project(std::span<const cplx> v) const { return adjoint_matvec(eig.vectors, v); }

  /// chi(mu) = sum lambda |q~|^2 - 2 Re(b~^H q~) - tau, q~ = (zeta~ + mu b~) / (1 + mu lambda)
  double chi(std::span<const cplx> zeta_t, double mu) const {
    double v = -tau;
    for (std::size_t j = 0; j < b_t.size(); ++j) {
      const cplx q = (zeta_t[j] + mu * b_t[j]) / (1.0 + mu * eig.values[j]);
      v += eig.values[j] * std::norm(q) - 2.0 * (std::conj(b_t[j]) * q).real();
    }
    return v;
  }

  /// chi'(mu) = -2 sum |b~ - lambda zeta~|^2 / (1 + mu lambda)^3
  double chi_derivative(std::span<const cplx> zeta_t, double mu) const {
    double v = 0.0;
    for (std::size_t j = 0; j < b_t.size(); ++j) {
      const double den = 1.0 + mu * eig.values[j];
      v -= 2.0 * std::norm(b_t[j] - eig.values[j] * zeta_t[j]) / (den * den * den);
    }
    return v;
  }
};

inline QcqpSpectral decompose(const QcqpSubproblem& sub) {
  QcqpSpectral s;
  s.eig = compact_hermitian_eig(sub.factors, sub.weights);
  // Drop numerically zero eigenvalues; they carry no b component.
  double biggest = 0.0;
  for (double l : s.eig.values) biggest = std::max(biggest, std::abs(l));
  const double cut = 1e-12 * biggest;
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < s.eig.values.size(); ++j)
    if (std::abs(s.eig.values[j]) > cut) keep.push_back(j);
  if (keep.size() != s.eig.values.size()) {
    EigDecomposition trimmed{rvec(keep.size()), cmat(s.eig.vectors.rows(), keep.size())};
    for (std::size_t c = 0; c < keep.size(); ++c) {
      trimmed.values[c] = s.eig.values[keep[c]];
      for (std::size_t r = 0; r < s.eig.vectors.rows(); ++r) trimmed.vectors(r, c) = s.eig.vectors(r, keep[c]);
    }
    s.eig = std::move(trimmed);
  }
  s.b_t = s.project(sub.b);
  s.tau = sub.tau;
  for (double l : s.eig.values) {
    if (l < 0.0) s.lambda_min = std::min(s.lambda_min, l);
    if (l > 0.0) s.lambda_max = std::max(s.lambda_max, l);
  }
  return s;
}

/// Starting multiplier: midpoint of (-1/lambda_max, -1/lambda_min), i.e.
/// -(lambda_min + lambda_max) / (2 lambda_min lambda_max). Only defined for a
/// mixed-sign spectrum.
inline double newton_initial_mu(double lambda_min, double lambda_max) {
  return -(lambda_min + lambda_max) / (2.0 * lambda_min * lambda_max);
}

struct MultiplierResult {
  double mu = 0.0;
  double chi = std::numeric_limits<double>::quiet_NaN();
  bool found = false;
  int iterations = 0;
  bool bisection_steps = false;  // Newton was safeguarded at least once
};

/// Root of chi on the interval where I + mu Lambda is positive definite.
/// chi is strictly decreasing there, so Newton is safeguarded by a bracket
/// and falls back to bisection (or bracket expansion for infinite ends).
inline MultiplierResult newton_mu(const QcqpSpectral& s, std::span<const cplx> zeta_t, double tol = 1e-11) {
  MultiplierResult r;
  const double scale_tol = tol * std::max(1.0, std::abs(s.tau));
  double lo = s.interval_low();
  double hi = s.interval_high();
  double mu = (std::isfinite(lo) && std::isfinite(hi)) ? newton_initial_mu(s.lambda_min, s.lambda_max) : 0.0;
  if (!(mu > lo && mu < hi)) mu = 0.0;

  double best_mu = mu;
  double best_chi = std::numeric_limits<double>::infinity();
  constexpr int kMaxIter = 500;
  for (int it = 0; it < kMaxIter; ++it) {
    r.iterations = it + 1;
    const double c = s.chi(zeta_t, mu);
    if (std::abs(c) < std::abs(best_chi)) {
      best_chi = c;
      best_mu = mu;
    }
    if (std::abs(c) <= scale_tol) break;
    if (c > 0.0) {
      lo = mu;
    } else {
      hi = mu;
    }
    const double d = s.chi_derivative(zeta_t, mu);
    double next = (d < 0.0 && std::isfinite(d)) ? mu - c / d : std::numeric_limits<double>::quiet_NaN();
    if (!(next > lo && next < hi)) {
      r.bisection_steps = true;
      if (std::isfinite(lo) && std::isfinite(hi)) {
        next = 0.5 * (lo + hi);
      } else if (std::isfinite(lo)) {
        next = lo + std::max(1.0, 2.0 * std::abs(lo));
      } else {
        next = hi - std::max(1.0, 2.0 * std::abs(hi));
      }
    }
    if (std::abs(next) > 1e300) break;
    if (next == mu || (std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() *
                                                                               std::max(std::abs(lo), std::abs(hi)))) {
      break;
    }
    mu = next;
  }
  r.mu = best_mu;
  r.chi = best_chi;
  r.found = std::abs(best_chi) <= 1e-6 * std::max(1.0, std::abs(s.tau));
  return r;
}

struct QUpdateResult {
  cvec q;
  double mu = 0.0;
  double chi = 0.0;
  bool feasible = true;    // false: no multiplier in the admissible interval
  bool projected = false;  // false when zeta already satisfied the constraint
};

/// Projection of zeta onto { q : q^H A q - 2 Re(b^H q) <= tau }.
inline QUpdateResult q_update(const QcqpSubproblem& sub, const QcqpSpectral& s, std::span<const cplx> zeta) {
  QUpdateResult out;
  const double excess = sub.constraint(zeta) - sub.tau;
  if (excess <= 0.0) {
    out.q.assign(zeta.begin(), zeta.end());
    out.chi = excess;
    return out;
  }
  out.projected = true;
  const cvec zeta_t = s.project(zeta);
  const MultiplierResult root = newton_mu(s, zeta_t);
  out.mu = root.mu;
  out.chi = root.chi;
  if (!root.found || root.mu < 0.0) {
    out.feasible = false;
    out.q.assign(zeta.begin(), zeta.end());
    return out;
  }
  // q = zeta + V (q~ - zeta~): components outside range(A) are left untouched.
  out.q.assign(zeta.begin(), zeta.end());
  const std::size_t m = zeta.size();
  for (std::size_t j = 0; j < zeta_t.size(); ++j) {
    const cplx qt = (zeta_t[j] + root.mu * s.b_t[j]) / (1.0 + root.mu * s.eig.values[j]);
    const cplx delta = qt - zeta_t[j];
    for (std::size_t r = 0; r < m; ++r) out.q[r] += s.eig.vectors(r, j) * delta;
  }
  return out;
}

inline QUpdateResult q_update(const QcqpSubproblem& sub) { return q_update(sub, decompose(sub), sub.zeta); }

// ---------------------------------------------------------------------------
// Consensus and dual steps

/// theta_m = exp(j angle(mean_k (q_k + u_k)_m)); entries whose mean is exactly
/// zero keep their previous phase.
inline PhaseVector theta_update(const std::vector<cvec>& q, const std::vector<cvec>& u, const PhaseVector& previous) {
  const std::size_t m = previous.size();
  cvec out(m);
  for (std::size_t j = 0; j < m; ++j) {
    cplx acc{};
    for (std::size_t k = 0; k < q.size(); ++k) acc += q[k][j] + u[k][j];
    acc /= static_cast<double>(q.size());
    out[j] = std::abs(acc) > 0.0 ? acc / std::abs(acc) : previous[j];
  }
  return PhaseVector(std::move(out));
}

/// u_k <- u_k + q_k - theta
inline void u_update(std::vector<cvec>& u, const std::vector<cvec>& q, const PhaseVector& theta) {
  for (std::size_t k = 0; k < u.size(); ++k)
    for (std::size_t j = 0; j < theta.size(); ++j) u[k][j] += q[k][j] - theta[j];
}

inline double primal_residual(const std::vector<cvec>& q, const PhaseVector& theta) {
  double r = 0.0;
  for (const auto& qk : q) {
    double s = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) s += std::norm(qk[j] - theta[j]);
    r += std::sqrt(s);
  }
  return r;
}

// ---------------------------------------------------------------------------
// ADMM feasibility

struct AdmmOptions {
  double rho = 1.0;   // penalty; with scaled duals and indicator terms it does not change the iterates
  int max_iter = 1000;
  double eps = 1e-6;  // primal residual sum_k ||q_k - theta||
  /// Thresholds are tightened by this relative margin inside the projections
  /// so that the consensus theta, not just each q_k, meets gamma_k.
  double gamma_margin = 1e-5;
  /// Order of the per-user projections within an iteration (empty: 0..K-1).
  std::vector<std::size_t> q_order;
};

struct AdmmState {
  PhaseVector theta;
  std::vector<cvec> q;
  std::vector<cvec> u;
  double rho = 1.0;
  double primal_residual = std::numeric_limits<double>::infinity();

  static AdmmState start(const PhaseVector& theta, std::size_t k_users, double rho = 1.0) {
    AdmmState s;
    s.theta = theta;
    s.q.assign(k_users, theta.values());
    s.u.assign(k_users, cvec(theta.size()));
    s.rho = rho;
    return s;
  }
};

struct AdmmResult {
  bool feasible = false;
  bool projection_failed = false;  // some q-update had no admissible multiplier
  int iterations = 0;
  rvec residual_trace;
  AdmmState state;
};

inline rvec sinr_all(const QuadraticForms& forms, std::span<const double> p, double sigma2,
                     std::span<const cplx> theta) {
  const rmat g = forms.gains(theta);
  rvec out(forms.users());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = sinr_from_gains(g, p, sigma2, k);
  return out;
}

/// Finds a unit-modulus theta with SINR_k(theta) >= gamma_k for all k.
/// Running out of iterations is reported as infeasible; for this non-convex
/// problem that is a heuristic verdict, not a certificate.
inline AdmmResult admm_feasibility(const QuadraticForms& forms, std::span<const double> p, double sigma2,
                                   std::span<const double> gammas, AdmmState init, const AdmmOptions& opts = {}) {
  const std::size_t k_users = forms.users();
  const std::size_t m = forms.elements();
  if (gammas.size() != k_users || p.size() != k_users) throw contract_error("admm_feasibility: size mismatch");
  if (init.theta.size() != m) throw contract_error("admm_feasibility: theta length mismatch");
  if (init.q.size() != k_users || init.u.size() != k_users) init = AdmmState::start(init.theta, k_users, opts.rho);

  AdmmResult res;
  for (double g : gammas)
    if (!std::isfinite(g)) {
      res.state = std::move(init);
      return res;
    }

  std::vector<QcqpSubproblem> subs;
  std::vector<QcqpSpectral> spectra;
  subs.reserve(k_users);
  spectra.reserve(k_users);
  for (std::size_t k = 0; k < k_users; ++k) {
    subs.push_back(build_qcqp(forms, p, sigma2, gammas[k] * (1.0 + opts.gamma_margin), k, {}));
    spectra.push_back(decompose(subs.back()));
  }

  std::vector<std::size_t> order = opts.q_order;
  if (order.empty()) {
    order.resize(k_users);
    std::iota(order.begin(), order.end(), std::size_t{0});
  }

  AdmmState st = std::move(init);
  cvec zeta(m);
  for (int it = 0; it < opts.max_iter; ++it) {
    res.iterations = it + 1;
    for (std::size_t k : order) {
      for (std::size_t j = 0; j < m; ++j) zeta[j] = st.theta[j] - st.u[k][j];
      QUpdateResult qu = q_update(subs[k], spectra[k], zeta);
      if (!qu.feasible) {
        res.projection_failed = true;
        res.state = std::move(st);
        return res;
      }
      st.q[k] = std::move(qu.q);
    }
    st.theta = theta_update(st.q, st.u, st.theta);
    u_update(st.u, st.q, st.theta);
    st.primal_residual = primal_residual(st.q, st.theta);
    res.residual_trace.push_back(st.primal_residual);

    if (st.primal_residual < opts.eps) {
      const rvec s = sinr_all(forms, p, sigma2, st.theta.values());
      bool ok = true;
      for (std::size_t k = 0; k < k_users; ++k) ok = ok && s[k] >= gammas[k] * (1.0 - 1e-6);
      if (ok) {
        res.feasible = true;
        break;
      }
    }
  }
  res.state = std::move(st);
  return res;
}

// ---------------------------------------------------------------------------
// Error-level search

/// Per-user learning error for phases theta through the quadratic forms.
inline rvec errors_from_forms(const QuadraticForms& forms, std::span<const double> p, const SystemConfig& cfg,
                              std::span<const TaskModel> tasks, std::span<const cplx> theta) {
  const rvec s = sinr_all(forms, p, cfg.sigma2, theta);
  rvec e(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) e[k] = error_at_rate(cfg, tasks[k], rate_from_sinr(s[k]));
  return e;
}

inline double objective_from_forms(const QuadraticForms& forms, std::span<const double> p, const SystemConfig& cfg,
                                   std::span<const TaskModel> tasks, std::span<const cplx> theta) {
  const rvec e = errors_from_forms(forms, p, cfg, tasks, theta);
  return *std::max_element(e.begin(), e.end());
}

/// Lower bound on the achievable max error over all theta: every user alone,
/// with all reflected terms co-phased (|theta^H a + b| <= |b| + ||a||_1).
inline double error_level_floor(const QuadraticForms& forms, std::span<const double> p, const SystemConfig& cfg,
                                std::span<const TaskModel> tasks) {
  double floor_level = 0.0;
  for (std::size_t k = 0; k < forms.users(); ++k) {
    double amp = std::abs(forms.b(k, k));
    for (const auto& x : forms.a[k][k]) amp += std::abs(x);
    const double snr = p[k] * amp * amp / cfg.sigma2;
    const double e = error_at_rate(cfg, tasks[k], rate_from_sinr(snr));
    floor_level = std::max(floor_level, std::isfinite(e) ? e : 0.0);
  }
  return floor_level;
}

struct ThetaOptions {
  double rel_tolerance = 1e-4;  // stop when (delta_hi - delta_lo) <= rel_tolerance * delta_hi
  AdmmOptions admm;
};

struct ThetaResult {
  PhaseVector theta;
  double delta = std::numeric_limits<double>::infinity();  // achieved max error
  double delta_low = 0.0;  // final lower end of the bracket
  bool unchanged = true;   // no level below the starting objective was certified
  int levels = 0;
  int admm_iterations = 0;
  rvec admm_trace;  // residual trace of the last successful ADMM run
};

/// Bisection on the error level. Each level is tested by ADMM warm-started
/// from the last feasible state; the result never has a larger objective
/// than theta_init.
inline ThetaResult optimize_theta(const QuadraticForms& forms, std::span<const double> p, const SystemConfig& cfg,
                                  std::span<const TaskModel> tasks, const PhaseVector& theta_init,
                                  const ThetaOptions& opts = {}) {
  ThetaResult out;
  out.theta = theta_init;
  out.delta = objective_from_forms(forms, p, cfg, tasks, theta_init.values());

  double hi = out.delta;
  if (!std::isfinite(hi)) hi = 1.0;
  double lo = std::min(error_level_floor(forms, p, cfg, tasks), hi);
  out.delta_low = lo;

  AdmmState warm = AdmmState::start(theta_init, forms.users(), opts.admm.rho);
  rvec gammas(forms.users());
  while (hi - lo > opts.rel_tolerance * hi) {
    const double level = 0.5 * (lo + hi);
    ++out.levels;
    for (std::size_t k = 0; k < forms.users(); ++k) gammas[k] = gamma_from_delta(tasks[k], level, cfg.B, cfg.T);
    AdmmResult run = admm_feasibility(forms, p, cfg.sigma2, gammas, warm, opts.admm);
    out.admm_iterations += run.iterations;
    if (run.feasible) {
      const double achieved = objective_from_forms(forms, p, cfg, tasks, run.state.theta.values());
      if (achieved < out.delta) {
        out.delta = achieved;
        out.theta = run.state.theta;
        out.unchanged = false;
      }
      out.admm_trace = run.residual_trace;
      hi = std::min(level, achieved);
      warm = std::move(run.state);
    } else {
      lo = level;
    }
  }
  out.delta_low = lo;
  return out;
}

}  // namespace risel
