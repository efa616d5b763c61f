#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fbl/instances.hpp"
#include "fbl/prob.hpp"

namespace fbl {

// Codewords u_{k,l} of length n, drawn i.i.d. from P_U under `seed`.
class ResolvabilityCode {
 public:
  ResolvabilityCode(std::size_t n, std::size_t k_size, std::size_t l_size, std::uint64_t seed,
                    std::vector<std::uint32_t> symbols);

  std::size_t n() const { return n_; }
  std::size_t k_size() const { return k_size_; }
  std::size_t l_size() const { return l_size_; }
  std::uint64_t seed() const { return seed_; }
  std::span<const std::uint32_t> codeword(std::size_t k, std::size_t l) const {
    return {symbols_.data() + (k * l_size_ + l) * n_, n_};
  }
  std::span<const std::uint32_t> symbols() const { return symbols_; }

 private:
  std::size_t n_;
  std::size_t k_size_;
  std::size_t l_size_;
  std::uint64_t seed_;
  std::vector<std::uint32_t> symbols_;
};

ResolvabilityCode build_code(const Pmf& p_u, std::size_t n, std::size_t k_size,
                             std::size_t l_size, std::uint64_t seed);

// Per-letter P_{Z|U} and the induced P_Z, from a joint over (U, Z).
struct SimulationKernel {
  Channel z_given_u;
  std::vector<double> p_z;

  explicit SimulationKernel(const JointPmf& p_uz);
};

// Smoothed likelihood weights of each l for row k; uniform when all vanish.
std::vector<double> simulation_map_weights(const ResolvabilityCode& code, std::size_t k,
                                           std::span<const std::uint32_t> z_seq, double gamma_c,
                                           const SimulationKernel& kernel);

std::size_t simulation_map_sample(const ResolvabilityCode& code, std::size_t k,
                                  std::span<const std::uint32_t> z_seq, double gamma_c,
                                  std::uint64_t seed, const SimulationKernel& kernel);

struct ResolvabilityReport {
  // Half the L1 distance between the codebook output law and P_Z^n.
  double distance;
  // P(T_c^c) + (1/2) sqrt(Delta_n / |I|) for |I| = K L codewords.
  double bound;
};
ResolvabilityReport resolvability_distance(const JointPmf& p_uz, const ResolvabilityCode& code,
                                           double gamma_c);

struct TrialStats {
  std::uint64_t trials = 0;
  std::uint64_t errors = 0;
  double error_rate = 0.0;
  double std_error = 0.0;
  // (u, x) outside the binning set.
  std::uint64_t binning_violations = 0;
  // Another sequence of the same bin inside the binning set.
  std::uint64_t collisions = 0;
};

struct WakCodeParams {
  std::size_t m_size = 2;
  std::size_t l_size = 1;
  std::size_t k_size = 1;
  double gamma_b = 0.0;
  double gamma_c = 0.0;
};

// Fixed codebook and a fixed binning keyed by bin_seed.
TrialStats wak_trial(const WakInstance& inst, std::size_t n, const ResolvabilityCode& code,
                     std::uint64_t bin_seed, const WakCodeParams& params, std::uint64_t trials,
                     std::uint64_t seed);

// Codebook and binning redrawn every trial, so the rate estimates the
// ensemble-average error.
TrialStats wak_trial_ensemble(const WakInstance& inst, std::size_t n,
                              const WakCodeParams& params, std::uint64_t trials,
                              std::uint64_t seed);

}  // namespace fbl
