#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "fbl/codec_sim.hpp"
#include "fbl/error.hpp"
#include "fbl/parallel.hpp"
#include "support.hpp"

using namespace fbl;

TEST_CASE("codebook depends only on the seed and codeword position") {
  const Pmf p_u({0.3, 0.7});
  const ResolvabilityCode a = build_code(p_u, 6, 2, 3, 99);
  const ResolvabilityCode b = build_code(p_u, 6, 2, 3, 99);
  CHECK(std::equal(a.symbols().begin(), a.symbols().end(), b.symbols().begin()));
  const ResolvabilityCode wide = build_code(p_u, 6, 4, 8, 99);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t l = 0; l < 3; ++l) {
      auto x = a.codeword(k, l), y = wide.codeword(k, l);
      CHECK(std::equal(x.begin(), x.end(), y.begin()));
    }
  }
  const ResolvabilityCode other = build_code(p_u, 6, 2, 3, 100);
  CHECK_FALSE(std::equal(a.symbols().begin(), a.symbols().end(), other.symbols().begin()));
  CHECK_THROWS_AS(build_code(p_u, 0, 1, 1, 1), InvalidArgument);
}

TEST_CASE("property: codeword symbol frequencies follow the input law") {
  const Pmf p_u({0.2, 0.5, 0.3});
  const ResolvabilityCode c = build_code(p_u, 50, 4, 50, 5);
  std::vector<double> count(3, 0.0);
  for (std::uint32_t s : c.symbols()) count[s] += 1.0;
  const double total = static_cast<double>(c.symbols().size());
  for (std::size_t i = 0; i < 3; ++i) {
    const double sd = std::sqrt(p_u[i] * (1.0 - p_u[i]) / total);
    CHECK(std::abs(count[i] / total - p_u[i]) <= 5.0 * sd);
  }
}

TEST_CASE("simulation weights are the normalized thresholded likelihoods") {
  const JointPmf p_uz({2, 2}, {0.4, 0.1, 0.15, 0.35});
  const SimulationKernel kernel(p_uz);
  const ResolvabilityCode code(2, 1, 3, 0, {0, 0, 0, 1, 1, 1});
  const std::uint32_t z[2] = {0, 1};
  // P(z|u) rows: u=0 -> {0.8, 0.2}, u=1 -> {0.3, 0.7}.
  const double lik[3] = {0.8 * 0.2, 0.8 * 0.7, 0.3 * 0.7};
  const std::vector<double> w = simulation_map_weights(code, 0, z, 10.0, kernel);
  const double total = lik[0] + lik[1] + lik[2];
  for (int l = 0; l < 3; ++l) CHECK(std::abs(w[l] - lik[l] / total) <= 1e-15);
  // A threshold below every log ratio leaves the uniform fallback.
  const std::vector<double> flat = simulation_map_weights(code, 0, z, -10.0, kernel);
  for (double v : flat) CHECK(v == doctest::Approx(1.0 / 3.0));
  const std::size_t pick = simulation_map_sample(code, 0, z, 10.0, 3, kernel);
  CHECK(pick < 3);
  CHECK(pick == simulation_map_sample(code, 0, z, 10.0, 3, kernel));
  const std::uint32_t short_z[1] = {0};
  CHECK_THROWS_AS(simulation_map_weights(code, 0, short_z, 1.0, kernel), InvalidArgument);
  CHECK_THROWS_AS(simulation_map_weights(code, 1, z, 1.0, kernel), InvalidArgument);
}

TEST_CASE("independent pair gives an exactly resolvable output") {
  const JointPmf p_uz({2, 2}, {0.12, 0.28, 0.18, 0.42});
  const ResolvabilityCode code = build_code(Pmf({0.4, 0.6}), 4, 1, 2, 1);
  CHECK(resolvability_distance(p_uz, code, 0.0).distance <= 1e-15);
}

TEST_CASE("single codeword distance is the total variation of one conditional law") {
  const JointPmf p_uz({2, 2}, {0.4, 0.1, 0.15, 0.35});
  for (std::uint32_t u : {0u, 1u}) {
    const ResolvabilityCode code(1, 1, 1, 0, {u});
    const double row[2][2] = {{0.8, 0.2}, {0.3, 0.7}};
    const double expect = 0.5 * (std::abs(row[u][0] - 0.55) + std::abs(row[u][1] - 0.45));
    CHECK(std::abs(resolvability_distance(p_uz, code, 10.0).distance - expect) <= 1e-15);
  }
}

TEST_CASE("noiseless helper ensemble error is the miss probability of the list") {
  // X = Y = U: decoding succeeds exactly when some codeword equals y.
  const WakInstance inst = dsbs_wak(0.0, 0.0);
  WakCodeParams p;
  p.m_size = 2;
  p.l_size = 4;
  p.gamma_b = 0.5;
  p.gamma_c = 3.0;
  const std::uint64_t trials = 40000;
  const TrialStats s = wak_trial_ensemble(inst, 2, p, trials, 17);
  const double expect = std::pow(0.75, 4.0);
  CHECK(s.trials == trials);
  // The only in-set sequence is the chosen codeword, so every error is a violation.
  CHECK(s.errors == s.binning_violations);
  CHECK(std::abs(s.error_rate - expect) <= 5.0 * std::sqrt(expect * (1.0 - expect) / trials));
}

TEST_CASE("trial statistics are independent of the worker count") {
  const WakInstance inst = dsbs_wak(0.11, 0.2);
  WakCodeParams p;
  p.m_size = 8;
  p.l_size = 4;
  p.gamma_b = 3.5;
  p.gamma_c = 2.0;
  const ResolvabilityCode code = build_code(marginal(inst.joint(), {1}).to_pmf(), 4, 1, 4, 3);
  setenv("FBL_THREADS", "1", 1);
  const TrialStats one = wak_trial(inst, 4, code, 5, p, 3000, 11);
  const TrialStats one_e = wak_trial_ensemble(inst, 4, p, 3000, 11);
  setenv("FBL_THREADS", "5", 1);
  const TrialStats many = wak_trial(inst, 4, code, 5, p, 3000, 11);
  const TrialStats many_e = wak_trial_ensemble(inst, 4, p, 3000, 11);
  unsetenv("FBL_THREADS");
  CHECK(one.errors == many.errors);
  CHECK(one.collisions == many.collisions);
  CHECK(one_e.errors == many_e.errors);
  CHECK(one.errors <= one.binning_violations + one.collisions);
}

TEST_CASE("simulator guards") {
  const WakInstance inst = dsbs_wak(0.11, 0.2);
  WakCodeParams p;
  CHECK_THROWS_AS(wak_trial_ensemble(inst, 25, p, 10, 1), Infeasible);
  p.m_size = 0;
  CHECK_THROWS_AS(wak_trial_ensemble(inst, 2, p, 10, 1), InvalidArgument);
  p.m_size = 2;
  const ResolvabilityCode code = build_code(Pmf::uniform(2), 3, 1, 2, 1);
  CHECK_THROWS_AS(wak_trial(inst, 3, code, 1, p, 10, 1), InvalidArgument);
  CHECK_THROWS_AS(wak_trial_ensemble(dsbs_wak_timeshared(0.11, 0.1, 0.3, 0.5), 2, p, 10, 1),
                  InvalidArgument);
}
