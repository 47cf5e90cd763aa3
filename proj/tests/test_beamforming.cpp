#include <gtest/gtest.h>

#include <cmath>

#include "risel/beamforming.hpp"
#include "test_util.hpp"

using namespace risel;
using risel::testing::random_channels;
using risel::testing::sinr_of;
using risel::testing::eig_oracle;
using risel::testing::random_vector;

TEST(Beamformer, SingleUserIsMatchedFilter) {
  Xoshiro256 rng(1);
  const auto h = random_channels(1, 5, rng);
  const cvec w = optimal_beamformer(h, rvec{0.8}, 1e-3, 0);
  const double nh = norm2(h[0]);
  EXPECT_NEAR(std::abs(inner(w, h[0])), nh, 1e-10 * nh);
  EXPECT_NEAR(norm2(w), 1.0, 1e-12);
}

TEST(Beamformer, ZeroPowerIsMatchedFilter) {
  Xoshiro256 rng(2);
  const auto h = random_channels(3, 4, rng);
  const auto w = optimal_beamformers_all(h, rvec{0.0, 0.0, 0.0}, 1.0);
  const auto mf = matched_filters(h);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t n = 0; n < 4; ++n) EXPECT_LT(std::abs(w[k][n] - mf[k][n]), 1e-15);
}

TEST(Beamformer, BeatsRandomVectorsAndMatchesEigenOracle) {
  Xoshiro256 rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto h = random_channels(3, 4, rng);
    const rvec p{0.2, 0.5, 0.3};
    const double s2 = 0.1;
    for (std::size_t k = 0; k < 3; ++k) {
      const cvec w = optimal_beamformer(h, p, s2, k);
      const double best = sinr_of(h, p, s2, k, w);
      for (int r = 0; r < 2000; ++r) {
        const cvec v = random_vector(4, rng);
        EXPECT_LE(sinr_of(h, p, s2, k, v), best + 1e-9);
      }
      const cvec o = eig_oracle(h, p, s2, k);
      EXPECT_LT(std::abs(1.0 - std::abs(inner(w, o))), 1e-8);
    }
  }
}

TEST(Beamformer, BatchEqualsPerUserBitwise) {
  Xoshiro256 rng(4);
  const auto h = random_channels(4, 6, rng);
  const rvec p{0.1, 0.2, 0.3, 0.4};
  const auto all = optimal_beamformers_all(h, p, 0.05);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(all[k], optimal_beamformer(h, p, 0.05, k));
}

TEST(Beamformer, IdenticalUsersGetIdenticalCombiners) {
  Xoshiro256 rng(5);
  const cvec h0 = random_vector(3, rng);
  const auto w = optimal_beamformers_all({h0, h0}, rvec{0.5, 0.5}, 0.2);
  EXPECT_LT(std::abs(1.0 - std::abs(inner(w[0], w[1]))), 1e-12);
}

TEST(Beamformer, SelfTermDoesNotChangeSinr) {
  Xoshiro256 rng(6);
  const auto h = random_channels(3, 4, rng);
  const rvec p{0.3, 0.3, 0.4};
  for (std::size_t k = 0; k < 3; ++k) {
    const double a = sinr_of(h, p, 0.1, k, optimal_beamformer(h, p, 0.1, k, true));
    const double b = sinr_of(h, p, 0.1, k, optimal_beamformer(h, p, 0.1, k, false));
    EXPECT_NEAR(a, b, 1e-10 * a);
  }
}

TEST(Beamformer, ScaleAndPhaseInvariance) {
  Xoshiro256 rng(7);
  const auto h = random_channels(2, 3, rng);
  const rvec p{0.6, 0.4};
  const cvec w = optimal_beamformer(h, p, 0.1, 0);
  const double base = sinr_of(h, p, 0.1, 0, w);
  for (double a : {0.5, 2.0, 10.0}) {
    cvec v = w;
    for (auto& x : v) x *= a;
    EXPECT_NEAR(sinr_of(h, p, 0.1, 0, v), base, 1e-12 * base);
  }
  cvec v = w;
  for (auto& x : v) x *= std::polar(1.0, 1.3);
  EXPECT_NEAR(sinr_of(h, p, 0.1, 0, v), base, 1e-12 * base);
}

TEST(Beamformer, DegenerateChannelThrows) {
  const std::vector<cvec> h{cvec(3), cvec{1.0, 0.0, 0.0}};
  EXPECT_THROW(optimal_beamformer(h, rvec{0.5, 0.5}, 0.1, 0), numerical_error);
}
