#include "fbl/density.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <limits>
#include <random>
#include <string>

#include "fbl/error.hpp"
#include "fbl/normal.hpp"
#include "fbl/parallel.hpp"

namespace fbl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieSlack = 1e-9;

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

double log2_ratio(double num, double den) {
  if (!(den > 0.0)) {
    throw InvalidArgument("density: zero denominator on a positive-probability outcome");
  }
  return std::log2(num / den);
}

// Marginal lookup by full multi-index of the parent joint.
class MarginalView {
 public:
  MarginalView(const JointPmf& joint, std::vector<std::size_t> axes)
      : axes_(std::move(axes)), table_(marginal(joint, axes_)) {}
  double operator()(std::span<const std::size_t> full) const {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < axes_.size(); ++i) {
      flat = flat * table_.dims()[i] + full[axes_[i]];
    }
    return table_[flat];
  }

 private:
  std::vector<std::size_t> axes_;
  JointPmf table_;
};

using VectorFn = std::function<void(std::span<const std::size_t>, double*)>;

// Outcomes of positive mass, optionally restricted to axis 0 == t and
// renormalized by that slice's mass.
AtomDistribution collect(const JointPmf& joint, std::size_t dim, const VectorFn& fn,
                         std::optional<std::size_t> t = std::nullopt) {
  std::vector<double> values;
  std::vector<double> probs;
  std::vector<std::size_t> idx(joint.rank());
  std::vector<double> v(dim);
  double slice_mass = 0.0;
  for (std::size_t flat = 0; flat < joint.size(); ++flat) {
    const double p = joint[flat];
    if (p <= 0.0) continue;
    joint.unflatten(flat, idx);
    if (t && idx[0] != *t) continue;
    fn(idx, v.data());
    values.insert(values.end(), v.begin(), v.end());
    probs.push_back(p);
    slice_mass += p;
  }
  for (double& p : probs) p /= slice_mass;
  return AtomDistribution(dim, std::move(values), std::move(probs));
}

VectorFn wak_fn(const JointPmf& j, DensityKind kind) {
  // Axes (T, U, X, Y).
  switch (kind) {
    case DensityKind::kWak: {
      auto tu = std::make_shared<MarginalView>(j, std::vector<std::size_t>{0, 1});
      auto tux = std::make_shared<MarginalView>(j, std::vector<std::size_t>{0, 1, 2});
      auto tuy = std::make_shared<MarginalView>(j, std::vector<std::size_t>{0, 1, 3});
      auto y = std::make_shared<MarginalView>(j, std::vector<std::size_t>{3});
      return [=](std::span<const std::size_t> i, double* out) {
        const double ptu = (*tu)(i);
        out[0] = -log2_ratio((*tux)(i), ptu);
        out[1] = log2_ratio((*tuy)(i), ptu * (*y)(i));
      };
    }
    case DensityKind::kCorner: {
      auto xy = std::make_shared<MarginalView>(j, std::vector<std::size_t>{2, 3});
      auto y = std::make_shared<MarginalView>(j, std::vector<std::size_t>{3});
      return [=](std::span<const std::size_t> i, double* out) {
        const double pxy = (*xy)(i);
        out[0] = -log2_ratio(pxy, (*y)(i));
        out[1] = -std::log2(pxy);
      };
    }
    case DensityKind::kLossless: {
      auto x = std::make_shared<MarginalView>(j, std::vector<std::size_t>{2});
      return [=](std::span<const std::size_t> i, double* out) { out[0] = -std::log2((*x)(i)); };
    }
    default:
      throw InvalidArgument("per_letter_atoms: kind not available for a WAK instance");
  }
}

std::size_t wak_dim(DensityKind kind) { return kind == DensityKind::kLossless ? 1 : 2; }

VectorFn wz_fn(const JointPmf& j, const Eigen::MatrixXd& d) {
  // Axes (T, U, X, Y, X-hat).
  auto tu = std::make_shared<MarginalView>(j, std::vector<std::size_t>{0, 1});
  auto tux = std::make_shared<MarginalView>(j, std::vector<std::size_t>{0, 1, 2});
  auto tuy = std::make_shared<MarginalView>(j, std::vector<std::size_t>{0, 1, 3});
  auto x = std::make_shared<MarginalView>(j, std::vector<std::size_t>{2});
  auto y = std::make_shared<MarginalView>(j, std::vector<std::size_t>{3});
  return [=](std::span<const std::size_t> i, double* out) {
    const double ptu = (*tu)(i);
    out[0] = -log2_ratio((*tuy)(i), ptu * (*y)(i));
    out[1] = log2_ratio((*tux)(i), ptu * (*x)(i));
    out[2] = d(static_cast<Eigen::Index>(i[2]), static_cast<Eigen::Index>(i[4]));
  };
}

VectorFn gp_fn(const JointPmf& j, const std::vector<double>& cost) {
  // Axes (T, S, U, X, Y).
  auto tu = std::make_shared<MarginalView>(j, std::vector<std::size_t>{0, 2});
  auto tuy = std::make_shared<MarginalView>(j, std::vector<std::size_t>{0, 2, 4});
  auto tus = std::make_shared<MarginalView>(j, std::vector<std::size_t>{0, 1, 2});
  auto ty = std::make_shared<MarginalView>(j, std::vector<std::size_t>{0, 4});
  auto t = std::make_shared<MarginalView>(j, std::vector<std::size_t>{0});
  auto s = std::make_shared<MarginalView>(j, std::vector<std::size_t>{1});
  return [=](std::span<const std::size_t> i, double* out) {
    const double ptu = (*tu)(i);
    out[0] = log2_ratio((*tuy)(i) * (*t)(i), ptu * (*ty)(i));
    out[1] = -log2_ratio((*tus)(i), ptu * (*s)(i));
    out[2] = -cost[i[3]];
  };
}

std::vector<ConditionalAtoms> split_by_t(const JointPmf& joint, const Pmf& time_share,
                                         std::size_t dim, const VectorFn& fn) {
  std::vector<ConditionalAtoms> out;
  for (std::size_t t = 0; t < time_share.size(); ++t) {
    if (time_share[t] <= 0.0) continue;
    out.push_back({time_share[t], collect(joint, dim, fn, t)});
  }
  return out;
}

}  // namespace

AtomDistribution::AtomDistribution(std::size_t dim, std::vector<double> values,
                                   std::vector<double> probs, double dedup_tol)
    : dim_(dim) {
  if (dim < 1 || dim > 4) throw InvalidArgument("AtomDistribution: dimension must be 1..4");
  if (values.size() != probs.size() * dim) {
    throw InvalidArgument("AtomDistribution: values/probs size mismatch");
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw InvalidArgument("AtomDistribution: invalid probability");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw InvalidArgument("AtomDistribution: probabilities sum to " + std::to_string(total));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("AtomDistribution: non-finite atom value");
  }
  // Greedy clustering in sup-norm, then lexicographic order.
  std::vector<std::vector<double>> reps;
  std::vector<double> mass;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    if (probs[a] <= 0.0) continue;
    const double* v = values.data() + a * dim;
    bool merged = false;
    for (std::size_t c = 0; c < reps.size() && !merged; ++c) {
      double dist = 0.0;
      for (std::size_t i = 0; i < dim; ++i) dist = std::max(dist, std::abs(reps[c][i] - v[i]));
      if (dist <= dedup_tol) {
        mass[c] += probs[a];
        merged = true;
      }
    }
    if (!merged) {
      reps.emplace_back(v, v + dim);
      mass.push_back(probs[a]);
    }
  }
  std::vector<std::size_t> order(reps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return reps[a] < reps[b]; });
  for (std::size_t c : order) {
    values_.insert(values_.end(), reps[c].begin(), reps[c].end());
    probs_.push_back(mass[c]);
  }
}

std::vector<double> AtomDistribution::mean() const {
  std::vector<double> m(dim_, 0.0);
  for (std::size_t a = 0; a < size(); ++a)
    for (std::size_t i = 0; i < dim_; ++i) m[i] += probs_[a] * values_[a * dim_ + i];
  return m;
}

std::vector<double> AtomDistribution::covariance() const {
  const std::vector<double> m = mean();
  std::vector<double> c(dim_ * dim_, 0.0);
  for (std::size_t a = 0; a < size(); ++a)
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j)
        c[i * dim_ + j] +=
            probs_[a] * (values_[a * dim_ + i] - m[i]) * (values_[a * dim_ + j] - m[j]);
  return c;
}

double AtomDistribution::third_abs_moment() const {
  const std::vector<double> m = mean();
  double xi = 0.0;
  for (std::size_t a = 0; a < size(); ++a) {
    double sq = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double d = values_[a * dim_ + i] - m[i];
      sq += d * d;
    }
    xi += probs_[a] * sq * std::sqrt(sq);
  }
  return xi;
}

AtomDistribution per_letter_atoms(const WakInstance& inst, DensityKind kind) {
  const JointPmf j = inst.joint();
  return collect(j, wak_dim(kind), wak_fn(j, kind));
}

AtomDistribution per_letter_atoms(const WzInstance& inst, DensityKind kind) {
  if (kind != DensityKind::kWz) throw InvalidArgument("per_letter_atoms: WZ instance needs wz");
  const JointPmf j = inst.joint();
  return collect(j, 3, wz_fn(j, inst.distortion()));
}

AtomDistribution per_letter_atoms(const GpInstance& inst, DensityKind kind) {
  if (kind != DensityKind::kGp) throw InvalidArgument("per_letter_atoms: GP instance needs gp");
  const JointPmf j = inst.joint();
  return collect(j, 3, gp_fn(j, inst.cost()));
}

AtomDistribution per_letter_atoms(const ChannelInstance& inst, DensityKind kind) {
  if (kind != DensityKind::kChannel) {
    throw InvalidArgument("per_letter_atoms: channel instance needs channel");
  }
  return channel_atoms(inst.channel, inst.p_x);
}

std::vector<ConditionalAtoms> atoms_by_time_share(const WakInstance& inst, DensityKind kind) {
  const JointPmf j = inst.joint();
  return split_by_t(j, inst.time_share(), wak_dim(kind), wak_fn(j, kind));
}

std::vector<ConditionalAtoms> atoms_by_time_share(const WzInstance& inst) {
  const JointPmf j = inst.joint();
  return split_by_t(j, inst.time_share(), 3, wz_fn(j, inst.distortion()));
}

std::vector<ConditionalAtoms> atoms_by_time_share(const GpInstance& inst) {
  const JointPmf j = inst.joint();
  return split_by_t(j, inst.time_share(), 3, gp_fn(j, inst.cost()));
}

AtomDistribution corner_atoms(const JointPmf& p_xy) {
  if (p_xy.rank() != 2) throw InvalidArgument("corner_atoms: rank-2 joint required");
  const JointPmf p_y = marginal(p_xy, {1});
  const std::size_t ny = p_xy.dims()[1];
  std::vector<double> values, probs;
  for (std::size_t flat = 0; flat < p_xy.size(); ++flat) {
    const double p = p_xy[flat];
    if (p <= 0.0) continue;
    values.push_back(-log2_ratio(p, p_y[flat % ny]));
    values.push_back(-std::log2(p));
    probs.push_back(p);
  }
  return AtomDistribution(2, std::move(values), std::move(probs));
}

AtomDistribution lossless_atoms(const Pmf& p_x) {
  std::vector<double> values, probs;
  for (double p : p_x.probs()) {
    if (p <= 0.0) continue;
    values.push_back(-std::log2(p));
    probs.push_back(p);
  }
  return AtomDistribution(1, std::move(values), std::move(probs));
}

AtomDistribution channel_atoms(const Channel& w, const Pmf& p_x) {
  if (w.input_size() != p_x.size()) throw InvalidArgument("channel_atoms: size mismatch");
  std::vector<double> p_y(w.output_size(), 0.0);
  for (std::size_t x = 0; x < p_x.size(); ++x)
    for (std::size_t y = 0; y < w.output_size(); ++y) p_y[y] += p_x[x] * w(x, y);
  std::vector<double> values, probs;
  for (std::size_t x = 0; x < p_x.size(); ++x) {
    for (std::size_t y = 0; y < w.output_size(); ++y) {
      const double p = p_x[x] * w(x, y);
      if (p <= 0.0) continue;
      values.push_back(log2_ratio(w(x, y), p_y[y]));
      probs.push_back(p);
    }
  }
  return AtomDistribution(1, std::move(values), std::move(probs));
}

bool coordinate_fires(double sum, double threshold, Direction direction) {
  const double slack =
      std::isfinite(threshold) ? kTieSlack * std::max(1.0, std::abs(threshold)) : 0.0;
  switch (direction) {
    case Direction::kAbove:
      return sum > threshold + slack;
    case Direction::kAtLeast:
      return sum >= threshold - slack;
    case Direction::kBelow:
      return sum < threshold - slack;
    case Direction::kAtMost:
      return sum <= threshold + slack;
  }
  return false;
}

bool spec_fires(std::span<const double> sum, const TailSpec& spec) {
  const bool any = spec.combine == Combine::kUnion;
  for (std::size_t i = 0; i < sum.size(); ++i) {
    if (coordinate_fires(sum[i], spec.thresholds[i], spec.directions[i]) == any) return any;
  }
  return !any;
}

double composition_count(std::size_t n, std::size_t m) {
  if (m == 0) return 0.0;
  return std::round(std::exp(std::lgamma(static_cast<double>(n + m)) -
                             std::lgamma(static_cast<double>(n + 1)) -
                             std::lgamma(static_cast<double>(m))));
}

static void check_spec(const AtomDistribution& atoms, const TailSpec& spec) {
  if (spec.thresholds.size() != atoms.dim() || spec.directions.size() != atoms.dim()) {
    throw InvalidArgument("TailSpec: dimension does not match atoms");
  }
  for (double t : spec.thresholds) {
    if (std::isnan(t)) throw InvalidArgument("TailSpec: NaN threshold");
  }
}

double nfold_tail_exact(const AtomDistribution& atoms, std::size_t n, const TailSpec& spec) {
  check_spec(atoms, spec);
  const std::size_t m = atoms.size();
  const std::size_t k = atoms.dim();
  if (n == 0) {
    const std::vector<double> zero(k, 0.0);
    return spec_fires(zero, spec) ? 1.0 : 0.0;
  }
  if (composition_count(n, m) > kExactCompositionLimit) {
    char count[32];
    std::snprintf(count, sizeof count, "%.3g", composition_count(n, m));
    throw Infeasible(std::string("nfold_tail_exact: ") + count + " compositions exceed the exact-evaluation limit; use mc or gauss");
  }
  std::vector<double> log_p(m);
  for (std::size_t a = 0; a < m; ++a) log_p[a] = std::log(atoms.prob(a));
  const double log_n_fact = std::lgamma(static_cast<double>(n) + 1.0);

  // Partition on the count of atom 0; each slot is summed independently.
  std::vector<double> partial(n + 1, 0.0);
  parallel_for(n + 1, [&](std::size_t c0) {
    KahanSum acc;
    std::vector<double> sum(k, 0.0);
    auto v0 = atoms.value(0);
    for (std::size_t i = 0; i < k; ++i) sum[i] = static_cast<double>(c0) * v0[i];
    const double lw0 = log_n_fact - std::lgamma(static_cast<double>(c0) + 1.0) +
                       static_cast<double>(c0) * log_p[0];
    std::function<void(std::size_t, std::size_t, double)> rec = [&](std::size_t a,
                                                                     std::size_t remaining,
                                                                     double lw) {
      auto v = atoms.value(a);
      if (a + 1 == m) {
        const double c = static_cast<double>(remaining);
        for (std::size_t i = 0; i < k; ++i) sum[i] += c * v[i];
        if (spec_fires(sum, spec)) {
          acc.add(std::exp(lw - std::lgamma(c + 1.0) + c * log_p[a]));
        }
        for (std::size_t i = 0; i < k; ++i) sum[i] -= c * v[i];
        return;
      }
      for (std::size_t c = 0; c <= remaining; ++c) {
        const double cd = static_cast<double>(c);
        for (std::size_t i = 0; i < k; ++i) sum[i] += cd * v[i];
        rec(a + 1, remaining - c, lw - std::lgamma(cd + 1.0) + cd * log_p[a]);
        for (std::size_t i = 0; i < k; ++i) sum[i] -= cd * v[i];
      }
    };
    if (m == 1) {
      if (c0 == n && spec_fires(sum, spec)) acc.add(1.0);
    } else {
      rec(1, n - c0, lw0);
    }
    partial[c0] = acc.sum;
  });
  KahanSum total;
  for (double p : partial) total.add(p);
  return std::clamp(total.sum, 0.0, 1.0);
}

McEstimate nfold_tail_mc(const AtomDistribution& atoms, std::size_t n, const TailSpec& spec,
                         std::uint64_t samples, std::uint64_t seed) {
  check_spec(atoms, spec);
  if (samples < 1000) throw InvalidArgument("nfold_tail_mc: need at least 1000 samples");
  constexpr std::size_t kShards = 64;
  const std::size_t m = atoms.size();
  const std::size_t k = atoms.dim();
  // Conditional masses for sequential binomial draws of the multinomial counts.
  std::vector<double> cond(m, 1.0);
  {
    double rest = 1.0;
    for (std::size_t a = 0; a < m; ++a) {
      cond[a] = rest > 0.0 ? std::clamp(atoms.prob(a) / rest, 0.0, 1.0) : 0.0;
      rest -= atoms.prob(a);
    }
    cond[m - 1] = 1.0;
  }
  std::vector<std::uint64_t> hits(kShards, 0);
  parallel_for(kShards, [&](std::size_t shard) {
    const std::uint64_t count = samples / kShards + (shard < samples % kShards ? 1 : 0);
    std::mt19937_64 rng(derive_seed(seed, shard));
    std::vector<double> sum(k);
    std::uint64_t h = 0;
    for (std::uint64_t s = 0; s < count; ++s) {
      std::fill(sum.begin(), sum.end(), 0.0);
      std::uint64_t remaining = n;
      for (std::size_t a = 0; a < m && remaining > 0; ++a) {
        std::uint64_t c = remaining;
        if (a + 1 < m) {
          std::binomial_distribution<std::uint64_t> draw(remaining, cond[a]);
          c = draw(rng);
        }
        auto v = atoms.value(a);
        for (std::size_t i = 0; i < k; ++i) sum[i] += static_cast<double>(c) * v[i];
        remaining -= c;
      }
      if (spec_fires(sum, spec)) ++h;
    }
    hits[shard] = h;
  });
  std::uint64_t total = 0;
  for (std::uint64_t h : hits) total += h;
  const double p = static_cast<double>(total) / static_cast<double>(samples);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(samples))};
}

std::optional<double> berry_esseen_certificate(const AtomDistribution& atoms, std::size_t n) {
  if (n == 0) return std::nullopt;
  const std::size_t k = atoms.dim();
  const std::vector<double> flat = atoms.covariance();
  const Eigen::Map<const Eigen::MatrixXd> cov(flat.data(),
                                              static_cast<Eigen::Index>(k),
                                              static_cast<Eigen::Index>(k));
  Eigen::MatrixXd c = cov;
  c = 0.5 * (c + c.transpose());
  const double trace = c.trace();
  if (trace <= 0.0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
  double lambda_min = kInf;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double l = eig.eigenvalues()(i);
    if (l > 1e-10 * trace) {
      ++rank;
      lambda_min = std::min(lambda_min, l);
    }
  }
  // Null directions carry no fluctuation, so xi is already the projected moment.
  return 254.0 * std::sqrt(static_cast<double>(rank)) * atoms.third_abs_moment() /
         (std::pow(lambda_min, 1.5) * std::sqrt(static_cast<double>(n)));
}

static std::size_t numerical_rank(const Eigen::MatrixXd& c) {
  const double trace = c.trace();
  if (trace <= 0.0) return 0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    if (eig.eigenvalues()(i) > 1e-10 * trace) ++r;
  }
  return r;
}

GaussianEstimate nfold_tail_gaussian(const AtomDistribution& atoms, std::size_t n,
                                     const TailSpec& spec) {
  check_spec(atoms, spec);
  const std::size_t k = atoms.dim();
  if (k > 3) throw InvalidArgument("nfold_tail_gaussian: dimension above 3");
  const auto k_idx = static_cast<Eigen::Index>(k);
  const std::vector<double> mean = atoms.mean();
  const std::vector<double> cov_flat = atoms.covariance();
  Eigen::MatrixXd cov = Eigen::Map<const Eigen::MatrixXd>(cov_flat.data(), k_idx, k_idx);
  cov = 0.5 * (cov + cov.transpose());
  const std::size_t rank = numerical_rank(cov);
  // Zero out null directions so the orthant routine sees exact degeneracy.
  if (rank < k && rank > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    Eigen::VectorXd ev = eig.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (ev(i) <= 1e-10 * cov.trace()) ev(i) = 0.0;
    }
    cov = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
  } else if (rank == 0) {
    cov.setZero();
  }
  const double nd = static_cast<double>(n);
  // Each coordinate event becomes W_i > w_i with W_i = sign_i (S_i - n J_i).
  Eigen::VectorXd w(k_idx);
  Eigen::VectorXd sign(k_idx);
  for (std::size_t i = 0; i < k; ++i) {
    const bool upper = spec.directions[i] == Direction::kAbove ||
                       spec.directions[i] == Direction::kAtLeast;
    sign(static_cast<Eigen::Index>(i)) = upper ? 1.0 : -1.0;
    w(static_cast<Eigen::Index>(i)) =
        (upper ? 1.0 : -1.0) * (spec.thresholds[i] - nd * mean[i]);
  }
  const Eigen::MatrixXd scaled = nd * (sign.asDiagonal() * cov * sign.asDiagonal());
  double estimate = 0.0;
  if (spec.combine == Combine::kUnion) {
    estimate = 1.0 - mvn_lower_orthant(scaled, w);
  } else {
    estimate = mvn_lower_orthant(scaled, -w);
  }
  return {std::clamp(estimate, 0.0, 1.0), berry_esseen_certificate(atoms, n), rank};
}

TailResult nfold_tail(const AtomDistribution& atoms, std::size_t n, const TailSpec& spec,
                      const TailOptions& options) {
  switch (options.method) {
    case TailMethod::kExact:
      return {nfold_tail_exact(atoms, n, spec), 0.0, std::nullopt, TailMethod::kExact};
    case TailMethod::kMonteCarlo: {
      const McEstimate mc = nfold_tail_mc(atoms, n, spec, options.samples, options.seed);
      return {mc.estimate, mc.std_error, std::nullopt, TailMethod::kMonteCarlo};
    }
    case TailMethod::kGaussian: {
      const GaussianEstimate g = nfold_tail_gaussian(atoms, n, spec);
      return {g.estimate, 0.0, g.certificate, TailMethod::kGaussian};
    }
  }
  throw InvalidArgument("nfold_tail: unknown method");
}

}  // namespace fbl
