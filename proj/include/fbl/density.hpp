#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fbl/instances.hpp"
#include "fbl/prob.hpp"

namespace fbl {

inline constexpr double kDedupTolerance = 1e-12;
// Composition count above which exact n-fold evaluation is refused.
inline constexpr double kExactCompositionLimit = 1e7;

// Finite law of a k-dimensional per-letter vector (k = 1..4). Atoms closer
// than the dedup tolerance in sup-norm are merged; zero-mass atoms dropped.
class AtomDistribution {
 public:
  AtomDistribution(std::size_t dim, std::vector<double> values, std::vector<double> probs,
                   double dedup_tol = kDedupTolerance);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return probs_.size(); }
  std::span<const double> value(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  double prob(std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }

  std::vector<double> mean() const;
  // Row-major dim x dim.
  std::vector<double> covariance() const;
  // E |atom - mean|_2^3.
  double third_abs_moment() const;

 private:
  std::size_t dim_;
  std::vector<double> values_;
  std::vector<double> probs_;
};

// Mixture component conditioned on one time-sharing symbol.
struct ConditionalAtoms {
  double weight;
  AtomDistribution atoms;
};

enum class DensityKind { kWak, kWz, kGp, kCorner, kLossless, kChannel };

// Law of the per-letter density vector, time-sharing symbol marginalized.
//   wak:      [-log P(x|u,t), log P(y|u,t)/P(y)]
//   corner:   [-log P(x|y), -log P(x,y)]
//   lossless: [-log P(x)]
//   wz:       [-log P(y|u,t)/P(y), log P(x|u,t)/P(x), d(x, x-hat)]
//   gp:       [log P(y|u,t)/P(y|t), -log P(s|u,t)/P(s), -g(x)]
//   channel:  [log W(y|x)/P(y)]
AtomDistribution per_letter_atoms(const WakInstance& inst, DensityKind kind = DensityKind::kWak);
AtomDistribution per_letter_atoms(const WzInstance& inst, DensityKind kind = DensityKind::kWz);
AtomDistribution per_letter_atoms(const GpInstance& inst, DensityKind kind = DensityKind::kGp);
AtomDistribution per_letter_atoms(const ChannelInstance& inst,
                                  DensityKind kind = DensityKind::kChannel);

// Same vectors split by time-sharing symbol; weights are P_T.
std::vector<ConditionalAtoms> atoms_by_time_share(const WakInstance& inst,
                                                  DensityKind kind = DensityKind::kWak);
std::vector<ConditionalAtoms> atoms_by_time_share(const WzInstance& inst);
std::vector<ConditionalAtoms> atoms_by_time_share(const GpInstance& inst);

AtomDistribution corner_atoms(const JointPmf& p_xy);
AtomDistribution lossless_atoms(const Pmf& p_x);
AtomDistribution channel_atoms(const Channel& w, const Pmf& p_x);

enum class Direction {
  kAbove,    // sum > threshold
  kAtLeast,  // sum >= threshold
  kBelow,    // sum < threshold
  kAtMost,   // sum <= threshold
};
enum class Combine { kUnion, kIntersection };

// Event on the n-fold sum of atoms; coordinate i fires per directions[i].
struct TailSpec {
  std::vector<double> thresholds;
  std::vector<Direction> directions;
  Combine combine = Combine::kUnion;
};

// Coordinate comparison with ties resolved within 1e-9 relative slack, so
// sums computed in different orders classify identically.
bool coordinate_fires(double sum, double threshold, Direction direction);
bool spec_fires(std::span<const double> sum, const TailSpec& spec);

// Number of multiset compositions C(n+m-1, m-1), as a double.
double composition_count(std::size_t n, std::size_t m);

double nfold_tail_exact(const AtomDistribution& atoms, std::size_t n, const TailSpec& spec);

struct McEstimate {
  double estimate;
  double std_error;
};
McEstimate nfold_tail_mc(const AtomDistribution& atoms, std::size_t n, const TailSpec& spec,
                         std::uint64_t samples, std::uint64_t seed);

struct GaussianEstimate {
  double estimate;
  // Two-sided Berry-Esseen slack over the nonzero eigenspace.
  std::optional<double> certificate;
  std::size_t rank;
};
GaussianEstimate nfold_tail_gaussian(const AtomDistribution& atoms, std::size_t n,
                                     const TailSpec& spec);

// Berry-Esseen slack 254 sqrt(r) xi / (lambda_min^{3/2} sqrt(n)) with r the
// numerical rank and lambda_min the least nonzero eigenvalue; 0 when the
// covariance vanishes, empty for n = 0.
std::optional<double> berry_esseen_certificate(const AtomDistribution& atoms, std::size_t n);

enum class TailMethod { kExact, kMonteCarlo, kGaussian };

struct TailOptions {
  TailMethod method = TailMethod::kExact;
  std::uint64_t samples = 100000;
  std::uint64_t seed = 1;
};

struct TailResult {
  double probability;
  double std_error = 0.0;
  std::optional<double> certificate;
  TailMethod method;
};
TailResult nfold_tail(const AtomDistribution& atoms, std::size_t n, const TailSpec& spec,
                      const TailOptions& options);

}  // namespace fbl
