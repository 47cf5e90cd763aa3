#pragma once

// MMSE-type receive combining: for fixed powers and RIS phases the SINR of
// user k is a generalized Rayleigh quotient whose maximizer is
//   w_k ~ (I + sum_i p_i/s2 h_i h_i^H)^{-1} h_k.

#include <span>
#include <vector>

#include "risel/errors.hpp"
#include "risel/linalg.hpp"
#include "risel/metrics.hpp"

namespace risel {

/// I_N + sum_{i} (p_i / sigma2) h_i h_i^H, optionally skipping user `skip`.
inline cmat interference_covariance(const std::vector<cvec>& h, std::span<const double> p, double sigma2,
                                    std::size_t skip = static_cast<std::size_t>(-1)) {
  if (h.empty()) throw contract_error("interference_covariance: no users");
  const std::size_t n = h.front().size();
  cmat gamma = cmat::identity(n);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i == skip) continue;
    const double scale = p[i] / sigma2;
    if (scale == 0.0) continue;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) gamma(r, c) += scale * h[i][r] * std::conj(h[i][c]);
  }
  return gamma;
}

/// Unit-norm SINR-optimal combiner for user k given composite channels h.
/// With include_self = false the own-user term is dropped from the covariance;
/// that only rescales the solution along h_k and leaves the SINR unchanged.
inline cvec optimal_beamformer(const std::vector<cvec>& h, std::span<const double> p, double sigma2, std::size_t k,
                               bool include_self = true) {
  if (k >= h.size()) throw contract_error("optimal_beamformer: user index out of range");
  if (!(sigma2 > 0.0)) throw contract_error("optimal_beamformer: noise power must be positive");
  if (norm2(h[k]) == 0.0) throw numerical_error("optimal_beamformer: degenerate all-zero channel");
  const cmat gamma = interference_covariance(h, p, sigma2, include_self ? static_cast<std::size_t>(-1) : k);
  cvec w = solve_linear(gamma, h[k]);
  const double nw = norm2(w);
  for (auto& x : w) x /= nw;
  return w;
}

inline cvec optimal_beamformer(const SystemConfig& cfg, const ChannelSet& ch, const PhaseVector& theta,
                               std::span<const double> p, std::size_t k) {
  return optimal_beamformer(composite_channels(ch, theta, cfg.beta), p, cfg.sigma2, k);
}

/// Combiners for every user; one covariance assembly shared across users.
inline std::vector<cvec> optimal_beamformers_all(const std::vector<cvec>& h, std::span<const double> p,
                                                 double sigma2) {
  if (!(sigma2 > 0.0)) throw contract_error("optimal_beamformers_all: noise power must be positive");
  const cmat gamma = interference_covariance(h, p, sigma2);
  std::vector<cvec> w;
  w.reserve(h.size());
  for (const auto& hk : h) {
    if (norm2(hk) == 0.0) throw numerical_error("optimal_beamformers_all: degenerate all-zero channel");
    cvec v = solve_linear(gamma, hk);
    const double nv = norm2(v);
    for (auto& x : v) x /= nv;
    w.push_back(std::move(v));
  }
  return w;
}

inline std::vector<cvec> optimal_beamformers_all(const SystemConfig& cfg, const ChannelSet& ch,
                                                 const PhaseVector& theta, std::span<const double> p) {
  return optimal_beamformers_all(composite_channels(ch, theta, cfg.beta), p, cfg.sigma2);
}

/// Matched filters h_k / ||h_k||, the usual initialization.
inline std::vector<cvec> matched_filters(const std::vector<cvec>& h) {
  std::vector<cvec> w;
  w.reserve(h.size());
  for (const auto& hk : h) {
    const double n = norm2(hk);
    if (n == 0.0) throw numerical_error("matched_filters: degenerate all-zero channel");
    cvec v = hk;
    for (auto& x : v) x /= n;
    w.push_back(std::move(v));
  }
  return w;
}

}  // namespace risel
