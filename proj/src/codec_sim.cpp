#include "fbl/codec_sim.hpp"

#include <cmath>
#include <random>

#include "fbl/bounds.hpp"
#include "fbl/density.hpp"
#include "fbl/error.hpp"
#include "fbl/parallel.hpp"

namespace fbl {
namespace {

constexpr std::size_t kMaxSequences = std::size_t{1} << 20;
constexpr std::size_t kTrialShards = 64;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t draw(std::span<const double> probs, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

std::size_t power_checked(std::size_t base, std::size_t exp) {
  std::size_t v = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    v *= base;
    if (v > kMaxSequences) throw Infeasible("sequence space too large for exhaustive search");
  }
  return v;
}

// Sequence of length n from its base-`radix` index, most significant first.
void decode_index(std::size_t index, std::size_t radix, std::span<std::uint32_t> out) {
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<std::uint32_t>(index % radix);
    index /= radix;
  }
}

std::size_t encode_index(std::span<const std::uint32_t> seq, std::size_t radix) {
  std::size_t idx = 0;
  for (std::uint32_t s : seq) idx = idx * radix + s;
  return idx;
}

struct WakModel {
  JointPmf p_xy;
  Pmf p_u;
  Channel x_given_u;
  SimulationKernel helper;

  explicit WakModel(const WakInstance& inst)
      : p_xy(inst.p_xy()),
        p_u(marginal(inst.joint(), {1}).to_pmf()),
        x_given_u(conditional_channel(marginal(inst.joint(), {1, 2}), std::vector<std::size_t>{0},
                                      std::vector<std::size_t>{1})),
        helper(marginal(inst.joint(), {1, 3})) {
    if (inst.time_share().size() != 1) {
      throw InvalidArgument("wak_trial: time sharing is not supported by the simulator");
    }
  }
};

struct TrialOutcome {
  bool binning_violation;
  bool collision;
};

// One transmission given the helper's codebook row and the binning map.
template <typename Row, typename Bin>
TrialOutcome run_trial(const WakModel& model, std::size_t n, const WakCodeParams& params,
                       const Row& row, const Bin& bin, std::mt19937_64& rng,
                       std::vector<std::uint32_t>& x, std::vector<std::uint32_t>& y,
                       std::vector<std::uint32_t>& scratch, std::size_t sequences) {
  const std::size_t nx = model.p_xy.dims()[0];
  const std::size_t ny = model.p_xy.dims()[1];
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t pair = draw(model.p_xy.probs(), rng);
    x[i] = static_cast<std::uint32_t>(pair / ny);
    y[i] = static_cast<std::uint32_t>(pair % ny);
  }
  // Helper picks l from the smoothed posterior over row k.
  std::vector<double> w(params.l_size);
  double total = 0.0;
  for (std::size_t l = 0; l < params.l_size; ++l) {
    auto u = row(l);
    double lik = 1.0, log_ratio = 0.0;
    for (std::size_t i = 0; i < n && lik > 0.0; ++i) {
      const double p = model.helper.z_given_u(u[i], y[i]);
      lik *= p;
      if (p > 0.0) log_ratio += std::log2(p / model.helper.p_z[y[i]]);
    }
    if (lik > 0.0 && !coordinate_fires(log_ratio, params.gamma_c, Direction::kAtMost)) lik = 0.0;
    w[l] = lik;
    total += lik;
  }
  std::size_t l = 0;
  if (total > 0.0) {
    for (double& v : w) v /= total;
    l = draw(w, rng);
  } else {
    l = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(params.l_size));
  }
  auto u = row(l);
  auto in_set = [&](std::span<const std::uint32_t> seq) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = model.x_given_u(u[i], seq[i]);
      if (p <= 0.0) return false;
      s -= std::log2(p);
    }
    return coordinate_fires(s, params.gamma_b, Direction::kAtMost);
  };
  const std::size_t x_index = encode_index(x, nx);
  const std::size_t x_bin = bin(x_index);
  TrialOutcome out{!in_set(x), false};
  for (std::size_t idx = 0; idx < sequences && !out.collision; ++idx) {
    if (idx == x_index || bin(idx) != x_bin) continue;
    decode_index(idx, nx, scratch);
    out.collision = in_set(scratch);
  }
  return out;
}

TrialStats aggregate(const std::vector<TrialStats>& shards) {
  TrialStats s;
  for (const TrialStats& t : shards) {
    s.trials += t.trials;
    s.errors += t.errors;
    s.binning_violations += t.binning_violations;
    s.collisions += t.collisions;
  }
  if (s.trials > 0) {
    s.error_rate = static_cast<double>(s.errors) / static_cast<double>(s.trials);
    s.std_error = std::sqrt(s.error_rate * (1.0 - s.error_rate) / static_cast<double>(s.trials));
  }
  return s;
}

void check_code_params(const WakCodeParams& p) {
  if (p.m_size == 0 || p.l_size == 0 || p.k_size == 0) {
    throw InvalidArgument("wak_trial: code sizes must be positive");
  }
  if (std::isnan(p.gamma_b) || std::isnan(p.gamma_c)) {
    throw InvalidArgument("wak_trial: NaN threshold");
  }
}

template <typename PerTrial>
TrialStats run_sharded(std::uint64_t trials, const PerTrial& per_trial) {
  std::vector<TrialStats> shards(kTrialShards);
  parallel_for(kTrialShards, [&](std::size_t shard) {
    TrialStats& s = shards[shard];
    for (std::uint64_t t = shard; t < trials; t += kTrialShards) {
      const TrialOutcome o = per_trial(t);
      ++s.trials;
      s.binning_violations += o.binning_violation;
      s.collisions += o.collision;
      s.errors += (o.binning_violation || o.collision);
    }
  });
  return aggregate(shards);
}

}  // namespace

ResolvabilityCode::ResolvabilityCode(std::size_t n, std::size_t k_size, std::size_t l_size,
                                     std::uint64_t seed, std::vector<std::uint32_t> symbols)
    : n_(n), k_size_(k_size), l_size_(l_size), seed_(seed), symbols_(std::move(symbols)) {
  if (n_ == 0 || k_size_ == 0 || l_size_ == 0) {
    throw InvalidArgument("ResolvabilityCode: sizes must be positive");
  }
  if (symbols_.size() != n_ * k_size_ * l_size_) {
    throw InvalidArgument("ResolvabilityCode: symbol count does not match sizes");
  }
}

ResolvabilityCode build_code(const Pmf& p_u, std::size_t n, std::size_t k_size,
                             std::size_t l_size, std::uint64_t seed) {
  if (n == 0 || k_size == 0 || l_size == 0) throw InvalidArgument("build_code: sizes must be positive");
  std::vector<std::uint32_t> symbols(n * k_size * l_size);
  // One stream per codeword, so codewords do not depend on K or L.
  for (std::size_t k = 0; k < k_size; ++k) {
    for (std::size_t l = 0; l < l_size; ++l) {
      std::mt19937_64 rng(derive_seed(derive_seed(seed, k), l));
      for (std::size_t i = 0; i < n; ++i) {
        symbols[(k * l_size + l) * n + i] = static_cast<std::uint32_t>(draw(p_u.probs(), rng));
      }
    }
  }
  return ResolvabilityCode(n, k_size, l_size, seed, std::move(symbols));
}

SimulationKernel::SimulationKernel(const JointPmf& p_uz)
    : z_given_u(conditional_channel(p_uz, std::vector<std::size_t>{0}, std::vector<std::size_t>{1})) {
  const JointPmf pz = marginal(p_uz, {1});
  p_z.assign(pz.probs().begin(), pz.probs().end());
}

std::vector<double> simulation_map_weights(const ResolvabilityCode& code, std::size_t k,
                                           std::span<const std::uint32_t> z_seq, double gamma_c,
                                           const SimulationKernel& kernel) {
  if (k >= code.k_size()) throw InvalidArgument("simulation_map: k out of range");
  if (z_seq.size() != code.n()) throw InvalidArgument("simulation_map: sequence length mismatch");
  std::vector<double> w(code.l_size());
  double total = 0.0;
  for (std::size_t l = 0; l < code.l_size(); ++l) {
    auto u = code.codeword(k, l);
    double lik = 1.0, log_ratio = 0.0;
    for (std::size_t i = 0; i < code.n() && lik > 0.0; ++i) {
      const double p = kernel.z_given_u(u[i], z_seq[i]);
      lik *= p;
      if (p > 0.0) log_ratio += std::log2(p / kernel.p_z[z_seq[i]]);
    }
    if (lik > 0.0 && !coordinate_fires(log_ratio, gamma_c, Direction::kAtMost)) lik = 0.0;
    w[l] = lik;
    total += lik;
  }
  for (double& v : w) v = total > 0.0 ? v / total : 1.0 / static_cast<double>(w.size());
  return w;
}

std::size_t simulation_map_sample(const ResolvabilityCode& code, std::size_t k,
                                  std::span<const std::uint32_t> z_seq, double gamma_c,
                                  std::uint64_t seed, const SimulationKernel& kernel) {
  const std::vector<double> w = simulation_map_weights(code, k, z_seq, gamma_c, kernel);
  std::mt19937_64 rng(derive_seed(seed, 0));
  return draw(w, rng);
}

ResolvabilityReport resolvability_distance(const JointPmf& p_uz, const ResolvabilityCode& code,
                                           double gamma_c) {
  const SimulationKernel kernel(p_uz);
  const std::size_t n = code.n();
  const std::size_t nz = kernel.p_z.size();
  const std::size_t sequences = power_checked(nz, n);
  const std::size_t codewords = code.k_size() * code.l_size();
  std::vector<std::uint32_t> z(n);
  double distance = 0.0;
  for (std::size_t idx = 0; idx < sequences; ++idx) {
    decode_index(idx, nz, z);
    double target = 1.0;
    for (std::size_t i = 0; i < n; ++i) target *= kernel.p_z[z[i]];
    double simulated = 0.0;
    for (std::size_t k = 0; k < code.k_size(); ++k) {
      for (std::size_t l = 0; l < code.l_size(); ++l) {
        auto u = code.codeword(k, l);
        double p = 1.0;
        for (std::size_t i = 0; i < n && p > 0.0; ++i) p *= kernel.z_given_u(u[i], z[i]);
        simulated += p;
      }
    }
    distance += std::abs(simulated / static_cast<double>(codewords) - target);
  }
  // Tail of the per-letter log ratio above gamma_c.
  const JointPmf pu = marginal(p_uz, {0});
  std::vector<double> values, probs;
  for (std::size_t u = 0; u < p_uz.dims()[0]; ++u) {
    for (std::size_t zz = 0; zz < nz; ++zz) {
      const double p = p_uz[u * nz + zz];
      if (p <= 0.0) continue;
      values.push_back(std::log2(p / (pu[u] * kernel.p_z[zz])));
      probs.push_back(p);
    }
  }
  const double outside = nfold_tail_exact(AtomDistribution(1, values, probs), n,
                                          {{gamma_c}, {Direction::kAbove}, Combine::kUnion});
  const NfoldDelta delta = delta_nfold(p_uz, n, gamma_c);
  return {0.5 * distance,
          outside + 0.5 * std::sqrt(delta.value / static_cast<double>(codewords))};
}

TrialStats wak_trial(const WakInstance& inst, std::size_t n, const ResolvabilityCode& code,
                     std::uint64_t bin_seed, const WakCodeParams& params, std::uint64_t trials,
                     std::uint64_t seed) {
  check_code_params(params);
  if (code.n() != n || code.l_size() != params.l_size || code.k_size() != params.k_size) {
    throw InvalidArgument("wak_trial: codebook does not match the code parameters");
  }
  const WakModel model(inst);
  const std::size_t sequences = power_checked(inst.x_size(), n);
  const std::size_t m = params.m_size;
  auto bin = [&](std::size_t idx) { return derive_seed(bin_seed, idx) % m; };
  return run_sharded(trials, [&](std::uint64_t t) {
    std::mt19937_64 rng(derive_seed(seed, t));
    const std::size_t k = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(code.k_size()));
    auto row = [&](std::size_t l) { return code.codeword(k, l); };
    std::vector<std::uint32_t> x(n), y(n), scratch(n);
    return run_trial(model, n, params, row, bin, rng, x, y, scratch, sequences);
  });
}

TrialStats wak_trial_ensemble(const WakInstance& inst, std::size_t n, const WakCodeParams& params,
                              std::uint64_t trials, std::uint64_t seed) {
  check_code_params(params);
  if (n == 0) throw InvalidArgument("wak_trial: blocklength must be positive");
  const WakModel model(inst);
  const std::size_t sequences = power_checked(inst.x_size(), n);
  const std::size_t m = params.m_size;
  return run_sharded(trials, [&](std::uint64_t t) {
    std::mt19937_64 rng(derive_seed(seed, t));
    const std::uint64_t bin_seed = rng();
    // Only row k is ever consulted, so only its L codewords are drawn.
    std::vector<std::uint32_t> row_symbols(params.l_size * n);
    for (std::uint32_t& s : row_symbols) s = static_cast<std::uint32_t>(draw(model.p_u.probs(), rng));
    auto row = [&](std::size_t l) {
      return std::span<const std::uint32_t>(row_symbols.data() + l * n, n);
    };
    auto bin = [&](std::size_t idx) { return derive_seed(bin_seed, idx) % m; };
    std::vector<std::uint32_t> x(n), y(n), scratch(n);
    return run_trial(model, n, params, row, bin, rng, x, y, scratch, sequences);
  });
}

}  // namespace fbl
