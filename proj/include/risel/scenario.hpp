#pragma once

// System configuration, random channel draws and learning-task error models.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "risel/errors.hpp"
#include "risel/linalg.hpp"
#include "risel/rng.hpp"

namespace risel {

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }

/// Physical and geometric parameters of one deployment.
///
/// Node positions are not modelled; each link is described by its distance
/// and a pathloss exponent, giving a large-scale gain of dist^(-exponent).
/// The defaults (100 m user-BS, 20 m user-RIS, 80 m RIS-BS) are a chosen
/// geometry in which the reflected path competes with the direct one.
struct SystemConfig {
  std::size_t K = 4;     // users
  std::size_t N = 10;    // BS antennas
  std::size_t M = 50;    // RIS elements
  double B = 5e6;        // bandwidth [Hz]
  double T = 10.0;       // transmission time [s]
  double P = 1.0;        // total power budget [W]
  double sigma2 = dbm_to_watt(-77.0);  // noise power [W]
  double beta = 1.0;     // RIS amplitude coefficient
  double pathloss_direct_exp = 4.0;
  double pathloss_ris_exp = 2.2;
  rvec dist_user_bs;     // per user [m]
  rvec dist_user_ris;    // per user [m]
  double dist_ris_bs = 80.0;
  std::uint64_t seed = 1;

  static SystemConfig with_dimensions(std::size_t k, std::size_t n, std::size_t m) {
    SystemConfig cfg;
    cfg.K = k;
    cfg.N = n;
    cfg.M = m;
    cfg.dist_user_bs.assign(k, 100.0);
    cfg.dist_user_ris.assign(k, 20.0);
    return cfg;
  }

  /// Throws config_error on the first violated invariant.
  void validate() const {
    if (K < 1 || N < 1 || M < 1) throw config_error("K, N and M must all be at least 1");
    if (!(B > 0.0) || !(T > 0.0) || !(P > 0.0) || !(sigma2 > 0.0))
      throw config_error("B, T, P and sigma2 must be positive");
    if (!(beta >= 0.0 && beta <= 1.0)) throw config_error("beta must lie in [0, 1]");
    if (!std::isfinite(pathloss_direct_exp) || !std::isfinite(pathloss_ris_exp))
      throw config_error("pathloss exponents must be finite");
    if (dist_user_bs.size() != K || dist_user_ris.size() != K)
      throw config_error("per-user distance lists must have exactly K entries");
    auto positive = [](double d) { return d > 0.0 && std::isfinite(d); };
    if (!std::all_of(dist_user_bs.begin(), dist_user_bs.end(), positive) ||
        !std::all_of(dist_user_ris.begin(), dist_user_ris.end(), positive) || !positive(dist_ris_bs))
      throw config_error("distances must be positive and finite");
  }
};

/// Power-law learning curve Psi(v) = c v^(-d) plus the payload size of one sample.
struct TaskModel {
  std::string name;
  double c = 1.0;
  double d = 1.0;
  double D = 1.0;  // bits per data sample (integer valued)

  void validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) throw config_error("task '" + name + "': c must be positive");
    if (!(d > 0.0) || !std::isfinite(d)) throw config_error("task '" + name + "': d must be positive");
    if (!(D >= 1.0) || D != std::floor(D) || !std::isfinite(D))
      throw config_error("task '" + name + "': D must be an integer >= 1");
  }

  bool operator==(const TaskModel&) const = default;
};

/// Fitted learning-curve parameters: SVM on 8x8 digits, a CNN on MNIST and on
/// Fashion-MNIST, and PointNet on ModelNet40.
inline TaskModel task_preset(std::string_view name) {
  if (name == "svm") return {"svm", 7.07, 0.81, 324.0};
  if (name == "cnn_mnist") return {"cnn_mnist", 10.79, 0.73, 6276.0};
  if (name == "cnn_fashion") return {"cnn_fashion", 0.82, 0.23, 6276.0};
  if (name == "pointnet") return {"pointnet", 0.96, 0.24, 192008.0};
  throw config_error("unknown task preset '" + std::string(name) + "'");
}

inline std::vector<std::string> task_preset_names() { return {"svm", "cnn_mnist", "cnn_fashion", "pointnet"}; }

/// The four-task mix used in the default experiments.
inline std::vector<TaskModel> default_tasks() {
  std::vector<TaskModel> tasks;
  for (const auto& n : task_preset_names()) tasks.push_back(task_preset(n));
  return tasks;
}

/// Channels of one realization. G maps the RIS to the BS (M x N).
struct ChannelSet {
  std::vector<cvec> h_direct;  // K x N
  std::vector<cvec> h_ris;     // K x M
  cmat G;                      // M x N

  std::size_t users() const { return h_direct.size(); }
  std::size_t antennas() const { return G.cols(); }
  std::size_t elements() const { return G.rows(); }

  void validate_against(const SystemConfig& cfg) const {
    if (h_direct.size() != cfg.K || h_ris.size() != cfg.K)
      throw contract_error("channel set: user count does not match configuration");
    if (G.rows() != cfg.M || G.cols() != cfg.N) throw contract_error("channel set: G must be M x N");
    for (std::size_t k = 0; k < cfg.K; ++k) {
      if (h_direct[k].size() != cfg.N || h_ris[k].size() != cfg.M)
        throw contract_error("channel set: per-user vector length mismatch");
    }
  }

  bool operator==(const ChannelSet&) const = default;
};

/// Rayleigh fading with distance pathloss. Entries are drawn in a fixed order
/// (all direct channels, then all user-RIS channels, then G row-major) from
/// one xoshiro256** stream seeded with `seed`.
inline ChannelSet generate_channels(const SystemConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Xoshiro256 rng(seed);
  ChannelSet ch;
  ch.h_direct.assign(cfg.K, cvec(cfg.N));
  ch.h_ris.assign(cfg.K, cvec(cfg.M));
  ch.G = cmat(cfg.M, cfg.N);

  for (std::size_t k = 0; k < cfg.K; ++k) {
    const double amp = std::sqrt(std::pow(cfg.dist_user_bs[k], -cfg.pathloss_direct_exp));
    for (auto& x : ch.h_direct[k]) x = amp * rng.complex_normal();
  }
  for (std::size_t k = 0; k < cfg.K; ++k) {
    const double amp = std::sqrt(std::pow(cfg.dist_user_ris[k], -cfg.pathloss_ris_exp));
    for (auto& x : ch.h_ris[k]) x = amp * rng.complex_normal();
  }
  const double amp_g = std::sqrt(std::pow(cfg.dist_ris_bs, -cfg.pathloss_ris_exp));
  for (auto& x : ch.G.data()) x = amp_g * rng.complex_normal();
  return ch;
}

inline ChannelSet generate_channels(const SystemConfig& cfg) { return generate_channels(cfg, cfg.seed); }

struct ErrorSample {
  double sample_size = 0.0;
  double error = 0.0;
};

struct ErrorModelFit {
  double c = 0.0;
  double d = 0.0;
  /// Set when the fitted decay is not positive, i.e. error does not fall with data.
  bool nonpositive_decay = false;
};

/// Ordinary least squares of ln(error) on ln(sample_size).
inline ErrorModelFit fit_error_model(std::span<const ErrorSample> samples) {
  for (const auto& s : samples) {
    if (!(s.sample_size > 0.0) || !std::isfinite(s.sample_size))
      throw domain_error("fit_error_model: sample sizes must be positive");
    if (!(s.error > 0.0 && s.error <= 1.0)) throw domain_error("fit_error_model: errors must lie in (0, 1]");
  }
  if (samples.size() < 2) throw insufficient_data_error("fit_error_model: need at least two samples");
  const bool distinct = std::any_of(samples.begin(), samples.end(),
                                    [&](const ErrorSample& s) { return s.sample_size != samples[0].sample_size; });
  if (!distinct) throw insufficient_data_error("fit_error_model: need at least two distinct sample sizes");

  const double n = static_cast<double>(samples.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& s : samples) {
    mx += std::log(s.sample_size);
    my += std::log(s.error);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& s : samples) {
    const double dx = std::log(s.sample_size) - mx;
    sxy += dx * (std::log(s.error) - my);
    sxx += dx * dx;
  }
  const double slope = sxy / sxx;
  ErrorModelFit fit;
  fit.d = -slope;
  fit.c = std::exp(my - slope * mx);
  fit.nonpositive_decay = fit.d <= 0.0;
  return fit;
}

inline ErrorModelFit fit_error_model(const std::vector<ErrorSample>& samples) {
  return fit_error_model(std::span<const ErrorSample>(samples));
}

}  // namespace risel
