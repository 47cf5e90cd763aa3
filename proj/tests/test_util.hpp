#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "risel/beamforming.hpp"
#include "risel/linalg.hpp"
#include "risel/phase_admm.hpp"
#include "risel/power_sca.hpp"
#include "risel/rng.hpp"

namespace risel::testing {

inline cmat random_matrix(std::size_t r, std::size_t c, Xoshiro256& rng) {
  cmat a(r, c);
  for (auto& x : a.data()) x = rng.complex_normal();
  return a;
}

inline cmat random_hermitian(std::size_t n, Xoshiro256& rng) {
  const cmat x = random_matrix(n, n, rng);
  cmat h(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h(i, j) = 0.5 * (x(i, j) + std::conj(x(j, i)));
  for (std::size_t i = 0; i < n; ++i) h(i, i) = h(i, i).real();
  return h;
}

inline cvec random_vector(std::size_t n, Xoshiro256& rng) {
  cvec v(n);
  for (auto& x : v) x = rng.complex_normal();
  return v;
}

// Realistic gains from a seeded deployment with MMSE combiners.
inline SurrogateContext random_context(std::uint64_t seed, std::size_t k, std::size_t n = 6, std::size_t m = 8) {
  SystemConfig cfg = SystemConfig::with_dimensions(k, n, m);
  const ChannelSet ch = generate_channels(cfg, seed);
  Xoshiro256 rng(seed ^ 0xabcdefu);
  const PhaseVector th = PhaseVector::random(m, rng);
  const auto h = composite_channels(ch, th, cfg.beta);
  const rvec p0 = equal_power(k, cfg.P);
  const auto w = optimal_beamformers_all(h, p0, cfg.sigma2);
  auto tasks = default_tasks();
  tasks.resize(k, task_preset("svm"));
  return make_surrogate_context(cfg, tasks, gain_matrix(h, w), p0);
}

inline rvec random_simplex_point(std::size_t k, double budget, Xoshiro256& rng) {
  rvec x(k + 1);
  double s = 0.0;
  for (auto& v : x) {
    v = -std::log(rng.uniform_open_left());
    s += v;
  }
  rvec p(k);
  for (std::size_t i = 0; i < k; ++i) p[i] = budget * x[i] / s;
  return p;
}

inline std::vector<cvec> random_channels(std::size_t k, std::size_t n, Xoshiro256& rng) {
  std::vector<cvec> h;
  for (std::size_t i = 0; i < k; ++i) h.push_back(random_vector(n, rng));
  return h;
}

inline double sinr_of(const std::vector<cvec>& h, const rvec& p, double s2, std::size_t k, const cvec& w) {
  const double nw = norm2(w);
  double num = 0.0, den = s2 * nw * nw;
  for (std::size_t i = 0; i < h.size(); ++i) (i == k ? num : den) += p[i] * std::norm(inner(w, h[i]));
  return num / den;
}

// Dominant generalized eigenvector of (p_k h_k h_k^H, sum_{i != k} p_i h_i h_i^H + s2 I)
// through the whitened standard problem.
inline cvec eig_oracle(const std::vector<cvec>& h, const rvec& p, double s2, std::size_t k) {
  const std::size_t n = h[k].size();
  cmat gamma = cmat::identity(n);
  for (std::size_t i = 0; i < n; ++i) gamma(i, i) = s2;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i == k) continue;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) gamma(r, c) += p[i] * h[i][r] * std::conj(h[i][c]);
  }
  const auto eg = hermitian_eig(gamma);
  cmat inv_sqrt(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double s = 1.0 / std::sqrt(eg.values[j]);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) inv_sqrt(r, c) += s * eg.vectors(r, j) * std::conj(eg.vectors(c, j));
  }
  const cvec g = matvec(inv_sqrt, h[k]);
  cmat xi(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) xi(r, c) = p[k] * g[r] * std::conj(g[c]);
  const auto ex = hermitian_eig(xi);
  cvec v(n);
  for (std::size_t r = 0; r < n; ++r) v[r] = ex.vectors(r, n - 1);
  cvec w = matvec(inv_sqrt, v);
  const double nw = norm2(w);
  for (auto& x : w) x /= nw;
  return w;
}

inline double dist2(const cvec& a, const cvec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
  return s;
}

struct Instance {
  SystemConfig cfg;
  ChannelSet ch;
  std::vector<cvec> w;
  rvec p;
  QuadraticForms forms;
};

inline Instance make_instance(std::uint64_t seed, std::size_t k, std::size_t n, std::size_t m) {
  Instance in;
  in.cfg = SystemConfig::with_dimensions(k, n, m);
  in.ch = generate_channels(in.cfg, seed);
  in.p = equal_power(k, in.cfg.P);
  in.w = optimal_beamformers_all(composite_channels(in.ch, PhaseVector::ones(m), in.cfg.beta), in.p, in.cfg.sigma2);
  in.forms = build_quadratics(in.ch, in.w, in.cfg.beta);
  return in;
}

// Random subproblem whose current point violates the constraint.
inline QcqpSubproblem random_subproblem(std::size_t m, std::size_t r, Xoshiro256& rng) {
  for (;;) {
    QcqpSubproblem s;
    s.factors = random_matrix(m, r, rng);
    s.weights.resize(r);
    for (std::size_t l = 0; l < r; ++l) s.weights[l] = l == 0 ? -(0.5 + rng.uniform()) : 0.2 + rng.uniform();
    s.b = random_vector(m, rng);
    // keep b inside range(factors), as for the SINR constraints
    cvec mix = random_vector(r, rng);
    s.b = matvec(s.factors, mix);
    s.tau = rng.uniform() - 0.5;
    s.zeta = random_vector(m, rng);
    if (s.constraint(s.zeta) > s.tau) return s;
  }
}

inline std::string source_path(const std::string& rel) { return std::string(RISEL_SOURCE_DIR) + "/" + rel; }

}  // namespace risel::testing
