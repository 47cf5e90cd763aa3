#pragma once

// Composite channels, SINR, rates, sample counts and the max learning-error objective.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "risel/errors.hpp"
#include "risel/linalg.hpp"
#include "risel/rng.hpp"
#include "risel/scenario.hpp"

namespace risel {

inline constexpr double kUnitModulusTolerance = 1e-9;

/// RIS reflection coefficients, one unit-modulus entry per element.
class PhaseVector {
 public:
  PhaseVector() = default;

  explicit PhaseVector(cvec entries) : entries_(std::move(entries)) {
    for (const auto& e : entries_)
      if (!(std::abs(std::abs(e) - 1.0) <= kUnitModulusTolerance))
        throw contract_error("PhaseVector: entries must have unit modulus");
  }

  static PhaseVector ones(std::size_t m) { return PhaseVector(cvec(m, cplx{1.0, 0.0})); }

  static PhaseVector from_angles(std::span<const double> angles) {
    cvec e(angles.size());
    for (std::size_t i = 0; i < angles.size(); ++i) e[i] = std::polar(1.0, angles[i]);
    return PhaseVector(std::move(e));
  }

  static PhaseVector random(std::size_t m, Xoshiro256& rng) {
    cvec e(m);
    for (auto& x : e) x = rng.unit_phase();
    return PhaseVector(std::move(e));
  }

  /// Entrywise projection onto the unit circle; zero entries map to 1.
  static PhaseVector project(std::span<const cplx> v) {
    cvec e(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) e[i] = std::abs(v[i]) > 0.0 ? v[i] / std::abs(v[i]) : cplx{1.0, 0.0};
    return PhaseVector(std::move(e));
  }

  PhaseVector conjugate() const {
    cvec e(entries_.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::conj(entries_[i]);
    return PhaseVector(std::move(e));
  }

  std::size_t size() const noexcept { return entries_.size(); }
  const cvec& values() const noexcept { return entries_; }
  const cplx& operator[](std::size_t i) const { return entries_[i]; }

  bool operator==(const PhaseVector&) const = default;

 private:
  cvec entries_;
};

/// Joint solution (p, w, theta) with its evaluated metrics.
struct AllocationState {
  rvec p;                   // [W]
  std::vector<cvec> w;      // unit-norm receive beamformers
  PhaseVector theta;
  double objective = std::numeric_limits<double>::infinity();
  rvec per_task_error;
  rvec per_task_rate;       // [bps/Hz]

  bool operator==(const AllocationState&) const = default;
};

// ---------------------------------------------------------------------------

/// h_k = h_d,k + beta G^H diag(theta)^H h_r,k
inline cvec composite_channel(const ChannelSet& ch, const PhaseVector& theta, std::size_t k, double beta) {
  if (k >= ch.users()) throw contract_error("composite_channel: user index out of range");
  const std::size_t n_ant = ch.antennas();
  const std::size_t m_el = ch.elements();
  if (theta.size() != m_el || ch.h_ris[k].size() != m_el || ch.h_direct[k].size() != n_ant)
    throw contract_error("composite_channel: dimension mismatch");
  cvec h = ch.h_direct[k];
  if (beta == 0.0) return h;
  for (std::size_t m = 0; m < m_el; ++m) {
    const cplx s = beta * std::conj(theta[m]) * ch.h_ris[k][m];
    if (s == cplx{}) continue;
    const auto g_row = ch.G.row(m);
    for (std::size_t n = 0; n < n_ant; ++n) h[n] += std::conj(g_row[n]) * s;
  }
  return h;
}

inline std::vector<cvec> composite_channels(const ChannelSet& ch, const PhaseVector& theta, double beta) {
  std::vector<cvec> out;
  out.reserve(ch.users());
  for (std::size_t k = 0; k < ch.users(); ++k) out.push_back(composite_channel(ch, theta, k, beta));
  return out;
}

/// gains(k, i) = |w_k^H h_i|^2
inline rmat gain_matrix(const std::vector<cvec>& h, const std::vector<cvec>& w) {
  if (h.size() != w.size()) throw contract_error("gain_matrix: need one beamformer per user");
  const std::size_t k_users = h.size();
  rmat g(k_users, k_users);
  for (std::size_t k = 0; k < k_users; ++k)
    for (std::size_t i = 0; i < k_users; ++i) g(k, i) = std::norm(inner(w[k], h[i]));
  return g;
}

inline double sinr_from_gains(const rmat& gains, std::span<const double> p, double sigma2, std::size_t k) {
  double interference = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (i != k) interference += p[i] * gains(k, i);
  return p[k] * gains(k, k) / (interference + sigma2);
}

inline double rate_from_sinr(double sinr) { return std::log2(1.0 + sinr); }

inline double sinr(const SystemConfig& cfg, const ChannelSet& ch, const AllocationState& state, std::size_t k) {
  if (k >= ch.users()) throw contract_error("sinr: user index out of range");
  const auto h = composite_channels(ch, state.theta, cfg.beta);
  double interference = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i)
    if (i != k) interference += state.p[i] * std::norm(inner(state.w[k], h[i]));
  return state.p[k] * std::norm(inner(state.w[k], h[k])) / (interference + cfg.sigma2);
}

/// R_k in bps/Hz.
inline double spectral_efficiency(const SystemConfig& cfg, const ChannelSet& ch, const AllocationState& state,
                                  std::size_t k) {
  return rate_from_sinr(sinr(cfg, ch, state, k));
}

struct SampleCount {
  double continuous = 0.0;
  std::uint64_t integral = 0;
};

/// v = B T R / D, with the floored count kept for reports.
inline SampleCount sample_count(const SystemConfig& cfg, const TaskModel& task, double rate) {
  if (!(rate >= 0.0)) throw domain_error("sample_count: rate must be non-negative");
  const double v = cfg.B * cfg.T * rate / task.D;
  return {v, static_cast<std::uint64_t>(std::floor(v))};
}

inline double task_error(const TaskModel& task, double v) {
  if (!(v > 0.0)) throw domain_error("task_error: sample count must be positive");
  return task.c * std::pow(v, -task.d);
}

/// Learning error reached at rate R; +inf when no samples get through.
inline double error_at_rate(const SystemConfig& cfg, const TaskModel& task, double rate) {
  const double v = cfg.B * cfg.T * rate / task.D;
  if (!(v > 0.0)) return std::numeric_limits<double>::infinity();
  return task.c * std::pow(v, -task.d);
}

/// Reporting clamp onto (0, 1]. Never used inside solver objectives.
inline double clamp_reported_error(double e) {
  if (std::isnan(e)) return 1.0;
  return std::clamp(e, std::numeric_limits<double>::min(), 1.0);
}

/// Fills objective, per-task error and per-task rate of `state` in place.
inline void evaluate(const SystemConfig& cfg, const ChannelSet& ch, std::span<const TaskModel> tasks,
                     AllocationState& state) {
  if (tasks.size() != ch.users() || state.p.size() != ch.users() || state.w.size() != ch.users())
    throw contract_error("evaluate: per-user sizes disagree");
  const auto h = composite_channels(ch, state.theta, cfg.beta);
  const rmat g = gain_matrix(h, state.w);
  state.per_task_rate.assign(tasks.size(), 0.0);
  state.per_task_error.assign(tasks.size(), 0.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const double r = rate_from_sinr(sinr_from_gains(g, state.p, cfg.sigma2, k));
    state.per_task_rate[k] = r;
    state.per_task_error[k] = error_at_rate(cfg, tasks[k], r);
    worst = std::max(worst, state.per_task_error[k]);
  }
  state.objective = worst;
}

/// max_k Psi_k(v_k) with the continuous sample count; +inf if any v_k <= 0.
inline double objective(const SystemConfig& cfg, const ChannelSet& ch, std::span<const TaskModel> tasks,
                        const AllocationState& state) {
  AllocationState copy = state;
  evaluate(cfg, ch, tasks, copy);
  return copy.objective;
}

/// Objective from a precomputed gain matrix.
inline double objective_from_gains(const SystemConfig& cfg, std::span<const TaskModel> tasks, const rmat& gains,
                                   std::span<const double> p) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < tasks.size(); ++k)
    worst = std::max(worst, error_at_rate(cfg, tasks[k], rate_from_sinr(sinr_from_gains(gains, p, cfg.sigma2, k))));
  return worst;
}

inline bool is_unit_norm(std::span<const cplx> w, double tol = 1e-9) { return std::abs(norm2(w) - 1.0) <= tol; }

}  // namespace risel
