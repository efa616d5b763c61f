#include <doctest.h>

#include <cmath>
#include <random>

#include "fbl/error.hpp"
#include "fbl/normal.hpp"
#include "fbl/rate_distortion.hpp"
#include "support.hpp"

using namespace fbl;
using fbl::testing::h2;

namespace {

Eigen::MatrixXd hamming(int k) {
  return Eigen::MatrixXd::Ones(k, k) - Eigen::MatrixXd::Identity(k, k);
}

}  // namespace

TEST_CASE("binary Hamming rate-distortion function") {
  for (double p : {0.5, 0.3, 0.1}) {
    for (double d : {0.01, 0.05, 0.09}) {
      const RateDistortionResult r = rate_distortion(Pmf::binary(1.0 - p), hamming(2), d);
      CHECK(std::abs(r.rate - (h2(p) - h2(d))) <= 1e-9);
      CHECK(std::abs(r.distortion - d) <= 1e-9);
      // Slope of h(p) - h(D) in bits: log2((1 - D) / D).
      CHECK(std::abs(r.lambda_star - std::log2((1.0 - d) / d)) <= 1e-6);
    }
  }
}

TEST_CASE("uniform ternary Hamming rate-distortion function") {
  for (double d : {0.1, 0.3, 0.6}) {
    const double expect = std::log2(3.0) - h2(d) - d;
    CHECK(std::abs(rate_distortion(Pmf::uniform(3), hamming(3), d).rate - expect) <= 1e-9);
  }
}

TEST_CASE("endpoints of the distortion range") {
  const Pmf p({0.2, 0.8});
  const RateDistortionResult zero_rate = rate_distortion(p, hamming(2), 0.25);
  CHECK(zero_rate.rate == 0.0);
  CHECK(zero_rate.lambda_star == 0.0);
  CHECK(zero_rate.q_xhat_star[1] == 1.0);
  const RateDistortionResult lossless = rate_distortion(p, hamming(2), 0.0);
  CHECK(std::abs(lossless.rate - h2(0.2)) <= 1e-12);
  CHECK(std::isinf(lossless.lambda_star));
  CHECK_THROWS_AS(rate_distortion(p, hamming(2), -0.1), InvalidArgument);
}

TEST_CASE("property: larger slope gives smaller distortion and larger rate") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Pmf p(fbl::testing::random_simplex(3, rng));
    Eigen::MatrixXd d(3, 3);
    for (int i = 0; i < 9; ++i) d(i / 3, i % 3) = (i / 3 == i % 3) ? 0.0 : u(rng);
    double prev_d = 1e9, prev_r = -1.0;
    for (double lambda : {0.5, 1.0, 2.0, 4.0, 8.0}) {
      const SlopePoint s = blahut_arimoto(p, d, lambda);
      CHECK(s.distortion <= prev_d + 1e-9);
      CHECK(s.rate >= prev_r - 1e-9);
      prev_d = s.distortion;
      prev_r = s.rate;
    }
  }
}

TEST_CASE("tilted information of a binary Hamming source") {
  const double p = 0.3, d = 0.1;
  const Pmf px = Pmf::binary(1.0 - p);
  const RateDistortionResult r = rate_distortion(px, hamming(2), d);
  // j(x, D) = -log2 P_X(x) - h(D) for the binary Hamming source.
  CHECK(std::abs(d_tilted_information(0, d, r.lambda_star, r.q_xhat_star, hamming(2)) -
                 (-std::log2(1.0 - p) - h2(d))) <= 1e-8);
  CHECK(std::abs(d_tilted_information(1, d, r.lambda_star, r.q_xhat_star, hamming(2)) -
                 (-std::log2(p) - h2(d))) <= 1e-8);
  const LossyDispersion disp = lossy_dispersion(px, hamming(2), d);
  const double l = std::log2((1.0 - p) / p);
  CHECK(std::abs(disp.dispersion - p * (1.0 - p) * l * l) <= 1e-8);
  const std::size_t n = 1000;
  CHECK(std::abs(lossy_second_order(px, hamming(2), d, n, 0.1) -
                 (h2(p) - h2(d) + std::sqrt(disp.dispersion / n) * q_inverse(0.1))) <= 1e-8);
}
