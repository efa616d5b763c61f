#include <doctest.h>

#include <cmath>
#include <random>

#include "fbl/error.hpp"
#include "fbl/normal.hpp"
#include "fbl/region.hpp"
#include "support.hpp"

using namespace fbl;
using fbl::testing::h2;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Inverse standard normal CDF by bisection on normal_cdf.
double phi_inverse(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double varentropy(double q) {
  const double l = std::log2((1.0 - q) / q);
  return q * (1.0 - q) * l * l;
}

}  // namespace

TEST_CASE("one-dimensional boundary scales with the standard deviation") {
  for (double var : {0.04, 1.0, 9.0}) {
    for (double eps : {0.01, 0.2, 0.7}) {
      CHECK(std::abs(s_set_boundary(var, eps) - std::sqrt(var) * phi_inverse(1.0 - eps)) <= 1e-9);
    }
  }
  CHECK(s_set_boundary(0.0, 0.1) == 0.0);
}

TEST_CASE("two-dimensional boundary for independent coordinates") {
  Eigen::MatrixXd v(2, 2);
  v << 1.0, 0.0, 0.0, 4.0;
  const double eps = 0.1;
  const std::vector<double> z1{1.3, 2.0, 3.5};
  const std::vector<double> z2 = s_set_boundary(v, eps, z1);
  for (std::size_t i = 0; i < z1.size(); ++i) {
    const double expect = 2.0 * phi_inverse((1.0 - eps) / normal_cdf(z1[i]));
    CHECK(std::abs(z2[i] - expect) <= 1e-8);
  }
  // Below the marginal quantile no second coordinate suffices.
  const double below[] = {1.0};
  CHECK(s_set_boundary(v, eps, below)[0] == kInf);
}

TEST_CASE("property: membership is monotone and agrees with the boundary") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  for (int trial = 0; trial < 20; ++trial) {
    const double r = u(rng);
    Eigen::MatrixXd v(2, 2);
    v << 1.0, r, r, 1.0;
    const double eps = 0.05 + 0.4 * (u(rng) + 0.9) / 1.8;
    const double z1 = 2.5;
    const double z2 = s_set_min_second(v, eps, z1);
    REQUIRE(std::isfinite(z2));
    CHECK(s_set_membership(v, eps, Eigen::Vector2d(z1, z2 + 1e-6)));
    CHECK_FALSE(s_set_membership(v, eps, Eigen::Vector2d(z1, z2 - 1e-3)));
    CHECK(s_set_membership(v, eps, Eigen::Vector2d(z1 + 0.5, z2 + 1e-6)));
  }
}

TEST_CASE("least sum over the identity covariance is symmetric") {
  const double eps = 0.1;
  const double z = phi_inverse(std::sqrt(1.0 - eps));
  CHECK(std::abs(s_set_min_sum(Eigen::MatrixXd::Identity(2, 2), eps) - 2.0 * z) <= 1e-7);
}

TEST_CASE("log term") {
  CHECK(log_term(1024, false) == doctest::Approx(20.0 / 1024.0));
  CHECK(log_term(1024, true) == 0.0);
}

TEST_CASE("lossless and channel second-order rates against closed forms") {
  const std::size_t n = 1000;
  const double eps = 0.01;
  const double q = q_inverse(eps);
  CHECK(std::abs(lossless_rate(Pmf({0.1, 0.9}), n, eps) -
                 (h2(0.1) + std::sqrt(varentropy(0.1) / n) * q + 2.0 * std::log2(n) / n)) <= 1e-12);
  CHECK(std::abs(channel_rate(Channel::bsc(0.11), Pmf::uniform(2), n, eps, true) -
                 (1.0 - h2(0.11) - std::sqrt(varentropy(0.11) / n) * q)) <= 1e-12);
}

TEST_CASE("helper region degenerates to the mean with a zero dispersion") {
  DispersionStats s;
  s.dim = 2;
  s.j_mean = Eigen::Vector2d(0.5, 0.25);
  s.v_matrix = Eigen::MatrixXd::Zero(2, 2);
  const std::size_t n = 100;
  const double c = log_term(n, false);
  CHECK(wak_min_r2(s, n, 0.1, 0.5 + c + 1e-9, 0.0, false) == doctest::Approx(0.25 + c));
  CHECK(wak_min_r2(s, n, 0.1, 0.5 + c - 1e-3, 0.0, false) == kInf);
}

TEST_CASE("helper region boundary is monotone and tends to the first-order corner") {
  const WakInstance inst = dsbs_wak(0.11, 0.2);
  RegionOptions opts;
  opts.points = 41;
  const RegionCurve curve = wak_region(inst, 2000, 0.1, WakVariant::kCs, {}, opts);
  REQUIRE(curve.points.size() > 5);
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    CHECK(curve.points[i].first > curve.points[i - 1].first);
    CHECK(curve.points[i].second <= curve.points[i - 1].second + 1e-9);
  }
  const DispersionStats s = dispersion_stats(inst);
  const double far_r1 = s.j_mean(0) + 1.0;
  const double r2 = wak_min_r2(s, 1'000'000'000'000, 0.1, far_r1, 0.0, true);
  CHECK(std::abs(r2 - s.j_mean(1)) <= 1e-5);
}

TEST_CASE("split construction is inside the joint region") {
  const WakInstance inst = dsbs_wak(0.2, 0.1);
  const DispersionStats s = dispersion_stats(inst);
  const std::size_t n = 500;
  std::vector<double> lambdas;
  for (int i = 1; i < 20; ++i) lambdas.push_back(i / 20.0);
  for (const auto& [r1, r2] : wak_verdu_split_points(s, n, 0.2, lambdas, true)) {
    CHECK(wak_min_r2(s, n, 0.2, r1, 0.0, true) <= r2 + 1e-9);
  }
}

TEST_CASE("modified construction with zero shift reproduces the plain one") {
  const DispersionStats s = dispersion_stats(dsbs_wak(0.11, 0.25));
  for (double r1 : {0.95, 1.0, 1.1}) {
    REQUIRE(std::isfinite(wak_min_r2(s, 1000, 0.1, r1, 0.0, false)));
    CHECK(wak_min_r2(s, 1000, 0.1, r1, 0.0, false) ==
          doctest::Approx(wak_union_envelope({s}, 1000, 0.1, std::vector<double>{r1}, std::vector<double>{0.0}, false)[0]));
  }
}

TEST_CASE("corner construction boundary is nonnegative and finite past its asymptote") {
  RegionOptions opts;
  opts.points = 21;
  const RegionCurve c = wak_region(biased_binary_wak(0.3, 0.11, 0.0), 1000, 0.1, WakVariant::kCorner, {}, opts);
  REQUIRE_FALSE(c.points.empty());
  for (const auto& [r1, r2] : c.points) CHECK(r2 >= 0.0);
}

TEST_CASE("side-information rates tend to their first-order values") {
  const WzInstance wz = dsbs_wz(0.11, 0.2, 0.25);
  const DispersionStats s = dispersion_stats(wz);
  const double first_order = s.j_mean(0) + s.j_mean(1);
  CHECK(std::abs(wz_rate(wz, 1'000'000'000'000, 0.1, s.j_mean(2) + 1e-3, true) - first_order) <= 1e-3);
  CHECK(wz_rate(wz, 1000, 0.1, s.j_mean(2) + 0.05) > first_order);
  CHECK_THROWS_AS(wz_rate(wz, 1000, 0.1, -0.1), Infeasible);

  const GpInstance gp = stuck_at_gp(0.1, 0.11);
  const double capacity = 0.9 * (1.0 - h2(0.11));
  CHECK(std::abs(gp_rate(gp, 1'000'000'000'000, 0.01, true) - capacity) <= 1e-4);
  CHECK(gp_rate(gp, 1000, 0.01) < gp_rate(gp, 10000, 0.01));
  const DispersionStats gs = dispersion_stats(gp);
  CHECK(gp_rate_at_cost(gs, 1000, 0.01, kInf) == gp_rate(gs, 1000, 0.01));
}

TEST_CASE("property: lossy rate at a fixed blocklength decreases with distortion") {
  const WzInstance wz = dsbs_wz(0.11, 0.2, 0.25);
  const DispersionStats s = dispersion_stats(wz);
  double prev = kInf;
  for (double d = s.j_mean(2) + 0.06; d < s.j_mean(2) + 0.25; d += 0.03) {
    const double r = wz_rate(s, 2000, 0.1, d);
    CHECK(r <= prev + 1e-6);
    prev = r;
  }
}

TEST_CASE("region validation") {
  const WakInstance inst = dsbs_wak(0.11, 0.2);
  RegionOptions opts;
  CHECK_THROWS_AS(wak_region(inst, 100, 1.5, WakVariant::kCs, {}, opts), InvalidArgument);
  CHECK_THROWS_AS(wak_region(inst, 100, 0.1, WakVariant::kModified, {}, opts), InvalidArgument);
  opts.points = 0;
  CHECK_THROWS_AS(wak_region(inst, 100, 0.1, WakVariant::kCs, {}, opts), InvalidArgument);
}
