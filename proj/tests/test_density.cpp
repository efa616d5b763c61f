#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "fbl/density.hpp"
#include "fbl/error.hpp"
#include "fbl/normal.hpp"
#include "support.hpp"

using namespace fbl;
using fbl::testing::h2;
using fbl::testing::random_simplex;

namespace {

// Sum over all m^n index sequences of the product probability where the event fires.
double brute_tail(const AtomDistribution& a, std::size_t n, const TailSpec& spec) {
  const std::size_t m = a.size(), k = a.dim();
  std::vector<std::size_t> idx(n, 0);
  long double total = 0.0L;
  while (true) {
    std::vector<double> sum(k, 0.0);
    long double p = 1.0L;
    for (std::size_t i = 0; i < n; ++i) {
      p *= a.prob(idx[i]);
      for (std::size_t c = 0; c < k; ++c) sum[c] += a.value(idx[i])[c];
    }
    if (spec_fires(sum, spec)) total += p;
    std::size_t pos = 0;
    while (pos < n && ++idx[pos] == m) idx[pos++] = 0;
    if (pos == n) break;
  }
  return static_cast<double>(total);
}

AtomDistribution random_atoms(std::size_t dim, std::size_t m, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> values(dim * m);
  for (double& v : values) v = g(rng);
  return AtomDistribution(dim, values, random_simplex(m, rng));
}

}  // namespace

TEST_CASE("atoms merge near-duplicates, drop zero mass and sort") {
  const AtomDistribution a(2, {1.0, 2.0, 0.0, 5.0, 1.0 + 1e-14, 2.0, 3.0, 3.0},
                           {0.2, 0.3, 0.5, 0.0}, kDedupTolerance);
  REQUIRE(a.size() == 2);
  CHECK(a.value(0)[0] == 0.0);
  CHECK(a.prob(0) == doctest::Approx(0.3));
  CHECK(a.prob(1) == doctest::Approx(0.7));
  CHECK_THROWS_AS(AtomDistribution(5, std::vector<double>(5, 0.0), {1.0}), InvalidArgument);
}

TEST_CASE("moments of a two-point law") {
  const AtomDistribution a(1, {0.0, 1.0}, {0.7, 0.3});
  CHECK(a.mean()[0] == doctest::Approx(0.3));
  CHECK(a.covariance()[0] == doctest::Approx(0.21));
  CHECK(a.third_abs_moment() == doctest::Approx(0.7 * 0.027 + 0.3 * 0.343));
}

TEST_CASE("tie rule treats sums within relative slack as equal") {
  CHECK(coordinate_fires(1.0 + 1e-12, 1.0, Direction::kAtMost));
  CHECK_FALSE(coordinate_fires(1.0 + 1e-12, 1.0, Direction::kAbove));
  CHECK(coordinate_fires(1.0 - 1e-12, 1.0, Direction::kAtLeast));
  CHECK_FALSE(coordinate_fires(1.0 - 1e-12, 1.0, Direction::kBelow));
  CHECK(coordinate_fires(1.1, 1.0, Direction::kAbove));
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_FALSE(coordinate_fires(1e300, inf, Direction::kAbove));
  CHECK(coordinate_fires(1e300, inf, Direction::kBelow));
}

TEST_CASE("composition count") {
  CHECK(composition_count(5, 3) == 21.0);
  CHECK(composition_count(1, 8) == 8.0);
}

TEST_CASE("property: exact tail equals sequence enumeration in one to three dimensions") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  const Direction dirs[] = {Direction::kAbove, Direction::kAtLeast, Direction::kBelow, Direction::kAtMost};
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t dim = 1 + trial % 3;
    const std::size_t m = 2 + rng() % 4;
    const std::size_t n = 1 + rng() % 5;
    const AtomDistribution a = random_atoms(dim, m, rng);
    TailSpec spec;
    for (std::size_t c = 0; c < dim; ++c) {
      spec.thresholds.push_back(g(rng) * std::sqrt(static_cast<double>(n)));
      spec.directions.push_back(dirs[rng() % 4]);
    }
    spec.combine = rng() % 2 ? Combine::kUnion : Combine::kIntersection;
    CHECK(std::abs(nfold_tail_exact(a, n, spec) - brute_tail(a, n, spec)) <= 1e-13);
  }
}

TEST_CASE("exact tail refuses oversized composition sets") {
  std::mt19937_64 rng(8);
  const AtomDistribution a = random_atoms(1, 12, rng);
  CHECK_THROWS_AS(nfold_tail_exact(a, 200, {{0.0}, {Direction::kAbove}, Combine::kUnion}), Infeasible);
}

TEST_CASE("Monte Carlo agrees with exact and is deterministic across thread counts") {
  std::mt19937_64 rng(9);
  const AtomDistribution a = random_atoms(2, 4, rng);
  const TailSpec spec{{0.5, -0.3}, {Direction::kAbove, Direction::kBelow}, Combine::kUnion};
  const double exact = nfold_tail_exact(a, 10, spec);
  const McEstimate mc = nfold_tail_mc(a, 10, spec, 200000, 11);
  CHECK(std::abs(mc.estimate - exact) <= 5.0 * mc.std_error + 1e-12);
  setenv("FBL_THREADS", "1", 1);
  const McEstimate single = nfold_tail_mc(a, 10, spec, 200000, 11);
  unsetenv("FBL_THREADS");
  CHECK(single.estimate == mc.estimate);
  CHECK_THROWS_AS(nfold_tail_mc(a, 10, spec, 999, 1), InvalidArgument);
}

TEST_CASE("Gaussian tail of a one-dimensional law matches the normal formula") {
  const AtomDistribution a(1, {0.0, 1.0}, {0.6, 0.4});
  const std::size_t n = 400;
  const double mean = 0.4 * n, sd = std::sqrt(0.24 * n);
  const GaussianEstimate g = nfold_tail_gaussian(a, n, {{170.0}, {Direction::kAbove}, Combine::kUnion});
  CHECK(std::abs(g.estimate - q_function((170.0 - mean) / sd)) <= 1e-12);
  CHECK(g.rank == 1);
  REQUIRE(g.certificate);
  // 254 xi / (sigma^3 sqrt(n)) with xi = E|X - 0.4|^3.
  const double xi = 0.6 * std::pow(0.4, 3) + 0.4 * std::pow(0.6, 3);
  CHECK(*g.certificate == doctest::Approx(254.0 * xi / (std::pow(0.24, 1.5) * 20.0)).epsilon(1e-12));
  const GaussianEstimate below = nfold_tail_gaussian(a, n, {{170.0}, {Direction::kAtMost}, Combine::kUnion});
  CHECK(std::abs(below.estimate + g.estimate - 1.0) <= 1e-12);
}

TEST_CASE("Gaussian tail handles rank-deficient laws on the reduced space") {
  // Second coordinate is twice the first.
  const AtomDistribution a(2, {0.0, 0.0, 1.0, 2.0}, {0.5, 0.5});
  const std::size_t n = 100;
  const GaussianEstimate g =
      nfold_tail_gaussian(a, n, {{55.0, 1e9}, {Direction::kAbove, Direction::kAbove}, Combine::kUnion});
  CHECK(g.rank == 1);
  CHECK(std::abs(g.estimate - q_function(5.0 / 5.0)) <= 1e-9);
  REQUIRE(g.certificate);
  CHECK(std::isfinite(*g.certificate));
}

TEST_CASE("per-letter density means match information quantities") {
  const double alpha = 0.11, beta = 0.2;
  const AtomDistribution w = per_letter_atoms(dsbs_wak(alpha, beta));
  CHECK(std::abs(w.mean()[0] - h2(binary_convolution(beta, alpha))) <= 1e-13);
  CHECK(std::abs(w.mean()[1] - (1.0 - h2(beta))) <= 1e-13);
  const AtomDistribution c = corner_atoms(dsbs(alpha));
  CHECK(std::abs(c.mean()[0] - h2(alpha)) <= 1e-13);
  CHECK(std::abs(c.mean()[1] - (1.0 + h2(alpha))) <= 1e-13);
  const AtomDistribution l = lossless_atoms(Pmf({0.25, 0.75}));
  CHECK(std::abs(l.mean()[0] - h2(0.25)) <= 1e-14);
  const AtomDistribution ch = channel_atoms(Channel::bsc(alpha), Pmf::uniform(2));
  CHECK(std::abs(ch.mean()[0] - (1.0 - h2(alpha))) <= 1e-13);
}

TEST_CASE("time-share split weights and conditional laws") {
  const WakInstance ts = dsbs_wak_timeshared(0.11, 0.0, 0.5, 0.25);
  const std::vector<ConditionalAtoms> parts = atoms_by_time_share(ts);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].weight == doctest::Approx(0.25));
  // beta = 1/2 makes U independent of everything: a point mass at (1, 0).
  REQUIRE(parts[1].atoms.size() == 1);
  CHECK(parts[1].atoms.value(0)[0] == doctest::Approx(1.0));
  CHECK(parts[1].atoms.value(0)[1] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("nfold_tail dispatches to the selected evaluator") {
  const AtomDistribution a(1, {0.0, 1.0}, {0.5, 0.5});
  const TailSpec spec{{3.5}, {Direction::kAbove}, Combine::kUnion};
  const TailResult e = nfold_tail(a, 6, spec, {});
  CHECK(e.method == TailMethod::kExact);
  CHECK(e.probability == doctest::Approx(22.0 / 64.0));
  const TailResult mc = nfold_tail(a, 6, spec, {TailMethod::kMonteCarlo, 20000, 3});
  CHECK(mc.std_error > 0.0);
  const TailResult ga = nfold_tail(a, 6, spec, {TailMethod::kGaussian, 0, 0});
  CHECK(ga.certificate.has_value());
}
