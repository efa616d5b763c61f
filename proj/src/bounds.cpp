#include "fbl/bounds.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "fbl/error.hpp"

namespace fbl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log2n(std::size_t n) { return std::log2(static_cast<double>(n)); }

void check_params(const BoundParams& p, bool needs_delta) {
  if (p.n == 0) throw InvalidArgument("bound: blocklength must be positive");
  for (double v : {p.log_m, p.log_l, p.log_big_l}) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("bound: code sizes must be >= 1");
  }
  if (p.log_j && (!std::isfinite(*p.log_j) || *p.log_j < 0.0)) {
    throw InvalidArgument("bound: log_j must be finite and >= 0");
  }
  for (double g : {p.gamma_b, p.gamma_c, p.gamma_p, p.gamma_s}) {
    if (std::isnan(g)) throw InvalidArgument("bound: NaN threshold");
  }
  if (needs_delta && !(p.delta > 0.0 && p.delta < 1.0)) {
    throw InvalidArgument("bound: delta must lie in (0, 1)");
  }
}

// Collapses the leading `merged` axes of a joint into one axis.
JointPmf merge_leading(const JointPmf& j, std::size_t merged) {
  std::vector<std::size_t> dims{1};
  for (std::size_t a = 0; a < merged; ++a) dims[0] *= j.dims()[a];
  for (std::size_t a = merged; a < j.rank(); ++a) dims.push_back(j.dims()[a]);
  return JointPmf(std::move(dims), std::vector<double>(j.probs().begin(), j.probs().end()), true);
}

// Outcomes of a joint as atoms, each value built from the full index.
AtomDistribution joint_atoms(const JointPmf& j, std::size_t dim,
                             const std::function<void(std::span<const std::size_t>, double*)>& fn) {
  std::vector<double> values, probs, v(dim);
  std::vector<std::size_t> idx(j.rank());
  for (std::size_t flat = 0; flat < j.size(); ++flat) {
    if (j[flat] <= 0.0) continue;
    j.unflatten(flat, idx);
    fn(idx, v.data());
    values.insert(values.end(), v.begin(), v.end());
    probs.push_back(j[flat]);
  }
  return AtomDistribution(dim, std::move(values), std::move(probs));
}

// Lookup of a marginal by the parent index.
struct Marg {
  std::vector<std::size_t> axes;
  JointPmf table;
  Marg(const JointPmf& j, std::vector<std::size_t> a) : axes(a), table(marginal(j, a)) {}
  double operator()(std::span<const std::size_t> full) const {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < axes.size(); ++i) flat = flat * table.dims()[i] + full[axes[i]];
    return table[flat];
  }
};

// log2 of the n-fold sum of weight(a, b) over pairs whose value passes the
// threshold; value(a, b) is -inf off support. -inf when the sum is zero.
std::optional<double> product_measure_log_tail(std::size_t na, std::size_t nb,
                                           const std::function<double(std::size_t, std::size_t)>& weight,
                                           const std::function<double(std::size_t, std::size_t)>& value,
                                           std::size_t n, double threshold, Direction dir) {
  std::vector<double> values, probs;
  double mass = 0.0;
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t b = 0; b < nb; ++b) {
      const double w = weight(a, b);
      const double v = value(a, b);
      if (w <= 0.0 || !std::isfinite(v)) continue;
      values.push_back(v);
      probs.push_back(w);
      mass += w;
    }
  }
  if (mass <= 0.0) return -kInf;
  for (double& p : probs) p /= mass;
  const AtomDistribution atoms(1, std::move(values), std::move(probs));
  try {
    const double tail = nfold_tail_exact(atoms, n, {{threshold}, {dir}, Combine::kUnion});
    return tail > 0.0 ? static_cast<double>(n) * std::log2(mass) + std::log2(tail) : -kInf;
  } catch (const Infeasible&) {
    return std::nullopt;
  }
}

std::optional<double> binning_log_mass_nfold(const JointPmf& p_ux, std::size_t n, double gamma_b) {
  if (p_ux.rank() != 2) throw InvalidArgument("binning_mass_nfold: rank-2 joint required");
  const JointPmf pu = marginal(p_ux, {0});
  const std::size_t nx = p_ux.dims()[1];
  return product_measure_log_tail(
      p_ux.dims()[0], nx, [&](std::size_t u, std::size_t) { return pu[u]; },
      [&](std::size_t u, std::size_t x) {
        const double p = p_ux[u * nx + x];
        return p > 0.0 ? -std::log2(p / pu[u]) : -kInf;
      },
      n, gamma_b, Direction::kAtMost);
}

BoundReport finish(std::string name, const BoundParams& params, std::vector<BoundTerm> terms,
                   const TailResult& primary, std::vector<std::string> notes) {
  BoundReport r;
  r.bound = std::move(name);
  r.params = params;
  r.terms = std::move(terms);
  for (const BoundTerm& t : r.terms) {
    if (std::isnan(t.value) || t.value < 0.0) {
      throw NumericFailure("bound: term " + t.name + " is negative or NaN");
    }
    r.raw_total += t.value;
  }
  r.total = std::min(1.0, r.raw_total);
  r.evaluator = tail_method_name(primary.method);
  if (primary.method == TailMethod::kMonteCarlo) r.primary_std_error = primary.std_error;
  if (primary.certificate) r.primary_certificate = primary.certificate;
  r.notes = std::move(notes);
  return r;
}

TailResult tail(const AtomDistribution& atoms, std::size_t n, std::vector<double> thresholds,
                std::vector<Direction> dirs, const TailOptions& options) {
  return nfold_tail(atoms, n, {std::move(thresholds), std::move(dirs), Combine::kUnion}, options);
}

// exp(-2^{log_size - gamma}), the covering residual of the prior bounds.
double covering_exp(double log_size, double gamma) { return std::exp(-std::exp2(log_size - gamma)); }

JointPmf wak_pair(const WakInstance& inst, std::size_t other_axis) {
  // (T, U, other) with (T, U) merged.
  return merge_leading(marginal(inst.joint(), {0, 1, other_axis}), 2);
}

// delta_nfold with the value as log2.
NfoldDelta delta_log_nfold(const JointPmf& p_uz, std::size_t n, double gamma_c) {
  if (p_uz.rank() != 2) throw InvalidArgument("delta_nfold: rank-2 joint required");
  if (n == 0) throw InvalidArgument("delta_nfold: blocklength must be positive");
  if (n == 1) return {std::log2(delta_quantity(p_uz, gamma_c)), true};
  const JointPmf pu = marginal(p_uz, {0});
  const JointPmf pz = marginal(p_uz, {1});
  const std::size_t nz = p_uz.dims()[1];
  // Tilting each atom by its ratio turns the functional into a plain tail.
  std::vector<double> values, probs;
  double mass = 0.0;
  for (std::size_t u = 0; u < p_uz.dims()[0]; ++u) {
    for (std::size_t z = 0; z < nz; ++z) {
      const double p = p_uz[u * nz + z];
      if (p <= 0.0) continue;
      const double ratio = p / (pu[u] * pz[z]);
      values.push_back(std::log2(ratio));
      probs.push_back(p * ratio);
      mass += p * ratio;
    }
  }
  for (double& p : probs) p /= mass;
  const double log_mean_n = static_cast<double>(n) * std::log2(mass);
  try {
    const double t = nfold_tail_exact(AtomDistribution(1, values, probs), n,
                                      {{gamma_c}, {Direction::kAtMost}, Combine::kUnion});
    return {t > 0.0 ? log_mean_n + std::log2(t) : -kInf, true};
  } catch (const Infeasible&) {
    return {std::min(gamma_c, log_mean_n), false};
  }
}

BoundReport wak_cs_common(const WakInstance& inst, const BoundParams& params,
                          const TailOptions& options, bool simplified, std::optional<double> log_j) {
  const AtomDistribution atoms = wak_event_atoms(inst);
  const TailResult primary = tail(atoms, params.n, {params.gamma_b, params.gamma_c},
                                  {Direction::kAbove, Direction::kAbove}, options);
  std::vector<std::string> notes;
  double log_bin = params.gamma_b - params.log_m;
  if (!simplified) {
    const std::optional<double> log_mass =
        binning_log_mass_nfold(wak_pair(inst, 2), params.n, params.gamma_b);
    if (log_mass) {
      log_bin = *log_mass - params.log_m;
      notes.push_back("binning_residual:exact");
    } else {
      notes.push_back("binning_residual:relaxed");
    }
  }
  const double log_div = log_j ? *log_j : params.log_l;
  double log_delta = params.gamma_c;
  if (!simplified) {
    const NfoldDelta d = delta_log_nfold(wak_pair(inst, 3), params.n, params.gamma_c);
    log_delta = d.value;
    notes.push_back(d.exact ? "covering_residual:exact" : "covering_residual:relaxed");
  }
  std::vector<BoundTerm> terms{{"primary_prob", primary.probability},
                               {"binning_residual", std::exp2(log_bin)}};
  if (log_j) {
    terms.push_back({"helper_residual", std::exp2(log_bin + *log_j - params.log_l)});
  }
  terms.push_back({"covering_residual", std::exp2(0.5 * (log_delta - log_div))});
  terms.push_back({"delta", params.delta});
  return finish(log_j ? "wak_modified" : (simplified ? "wak_cs_simplified" : "wak_cs"), params,
                std::move(terms), primary, std::move(notes));
}

BoundReport wak_prior(const WakInstance& inst, const BoundParams& params, const TailOptions& options,
                      bool sqrt_first, const char* name) {
  check_params(params, false);
  const AtomDistribution atoms = wak_event_atoms(inst);
  const TailResult bin = tail(atoms, params.n, {params.gamma_b, kInf},
                              {Direction::kAbove, Direction::kAbove}, options);
  const TailResult cov = tail(atoms, params.n, {kInf, params.gamma_c},
                              {Direction::kAbove, Direction::kAbove}, options);
  const double first = sqrt_first ? 2.0 * std::sqrt(bin.probability) : bin.probability;
  return finish(name, params,
                {{"binning_prob", first},
                 {"covering_prob", cov.probability},
                 {"binning_residual", std::exp2(params.gamma_b - params.log_m)},
                 {"covering_residual", covering_exp(params.log_l, params.gamma_c)}},
                bin, {});
}

// Events: packing coordinate below gamma_p, covering above gamma_c, third above n * level.
BoundReport side_info_cs(const AtomDistribution& atoms, const BoundParams& params, double level,
                         const TailOptions& options, double packing_residual, const char* name) {
  check_params(params, true);
  const double third = std::isinf(level) ? kInf : static_cast<double>(params.n) * level;
  const TailResult primary =
      tail(atoms, params.n, {params.gamma_p, params.gamma_c, third},
           {Direction::kBelow, Direction::kAbove, Direction::kAbove}, options);
  return finish(name, params,
                {{"primary_prob", primary.probability},
                 {"packing_residual", packing_residual},
                 {"covering_residual", std::sqrt(std::exp2(params.gamma_c - params.log_big_l))},
                 {"delta", params.delta}},
                primary, {});
}

BoundReport side_info_prior(const AtomDistribution& atoms, const BoundParams& params, double level,
                            const TailOptions& options, double packing_residual, bool sqrt_first,
                            const char* name) {
  check_params(params, false);
  const std::size_t n = params.n;
  const TailResult pack = tail(atoms, n, {params.gamma_p, kInf, kInf},
                               {Direction::kBelow, Direction::kAbove, Direction::kAbove}, options);
  const TailResult cov = tail(atoms, n, {-kInf, params.gamma_c, kInf},
                              {Direction::kBelow, Direction::kAbove, Direction::kAbove}, options);
  std::vector<BoundTerm> terms{
      {"packing_prob", sqrt_first ? 2.0 * std::sqrt(pack.probability) : pack.probability},
      {"covering_prob", cov.probability}};
  if (!std::isinf(level)) {
    const TailResult dist =
        tail(atoms, n, {-kInf, kInf, static_cast<double>(n) * level},
             {Direction::kBelow, Direction::kAbove, Direction::kAbove}, options);
    terms.push_back({"distortion_prob", dist.probability});
  }
  terms.push_back({"packing_residual", packing_residual});
  terms.push_back({"covering_residual", covering_exp(params.log_big_l, params.gamma_c)});
  return finish(name, params, std::move(terms), pack, {});
}

}  // namespace

double BoundReport::term(std::string_view name) const {
  for (const BoundTerm& t : terms) {
    if (t.name == name) return t.value;
  }
  throw InvalidArgument("BoundReport: no term named " + std::string(name));
}

const char* tail_method_name(TailMethod method) {
  switch (method) {
    case TailMethod::kExact:
      return "exact";
    case TailMethod::kMonteCarlo:
      return "mc";
    case TailMethod::kGaussian:
      return "gauss";
  }
  return "unknown";
}

BoundParams wak_auto_params(std::size_t n, double log_m, double log_l) {
  if (n == 0) throw InvalidArgument("bound: blocklength must be positive");
  BoundParams p;
  p.n = n;
  p.log_m = log_m;
  p.log_l = log_l;
  p.gamma_b = log_m - log2n(n);
  p.gamma_c = log_l - log2n(n);
  p.delta = 1.0 / static_cast<double>(n);
  if (n == 1) p.delta = 0.5;
  return p;
}

BoundParams wak_modified_auto_params(std::size_t n, double log_m, double log_l, double rho) {
  BoundParams p = wak_auto_params(n, log_m, log_l);
  const double shift = rho * std::sqrt(static_cast<double>(n));
  p.gamma_b -= shift;
  p.gamma_c += shift;
  p.log_j = log_l + shift;
  return p;
}

BoundParams corner_auto_params(std::size_t n, double log_m, double log_l) {
  BoundParams p = wak_auto_params(n, log_m, log_l);
  p.gamma_s = log_m + log_l - log2n(n);
  return p;
}

BoundParams wz_auto_params(std::size_t n, double log_m, double log_big_l) {
  BoundParams p = wak_auto_params(n, log_m, 0.0);
  p.log_big_l = log_big_l;
  p.gamma_p = log_big_l - log_m + log2n(n);
  p.gamma_c = log_big_l - log2n(n);
  p.gamma_b = 0.0;
  return p;
}

BoundParams gp_auto_params(std::size_t n, double log_m, double log_big_l) {
  BoundParams p = wz_auto_params(n, log_m, log_big_l);
  p.gamma_p = log_m + log_big_l + log2n(n);
  return p;
}

double delta_quantity(const JointPmf& p_uz, double gamma_c) {
  if (p_uz.rank() != 2) throw InvalidArgument("delta_quantity: rank-2 joint required");
  if (std::isnan(gamma_c)) throw InvalidArgument("delta_quantity: NaN threshold");
  const JointPmf pu = marginal(p_uz, {0});
  const JointPmf pz = marginal(p_uz, {1});
  const std::size_t nz = p_uz.dims()[1];
  double sum = 0.0;
  for (std::size_t u = 0; u < p_uz.dims()[0]; ++u) {
    for (std::size_t z = 0; z < nz; ++z) {
      const double p = p_uz[u * nz + z];
      if (p <= 0.0) continue;
      const double ratio = p / (pu[u] * pz[z]);
      if (coordinate_fires(std::log2(ratio), gamma_c, Direction::kAtMost)) sum += p * ratio;
    }
  }
  return sum;
}

NfoldDelta delta_nfold(const JointPmf& p_uz, std::size_t n, double gamma_c) {
  const NfoldDelta d = delta_log_nfold(p_uz, n, gamma_c);
  return {std::exp2(d.value), d.exact};
}

std::optional<double> binning_mass_nfold(const JointPmf& p_ux, std::size_t n, double gamma_b) {
  const std::optional<double> log_mass = binning_log_mass_nfold(p_ux, n, gamma_b);
  if (!log_mass) return std::nullopt;
  return std::exp2(*log_mass);
}

std::optional<double> packing_mass_nfold(const JointPmf& p_uy, std::size_t n, double gamma_p) {
  if (p_uy.rank() != 2) throw InvalidArgument("packing_mass_nfold: rank-2 joint required");
  const JointPmf pu = marginal(p_uy, {0});
  const JointPmf py = marginal(p_uy, {1});
  const std::size_t ny = p_uy.dims()[1];
  const std::optional<double> log_mass = product_measure_log_tail(
      p_uy.dims()[0], ny, [&](std::size_t u, std::size_t y) { return pu[u] * py[y]; },
      [&](std::size_t u, std::size_t y) {
        const double p = p_uy[u * ny + y];
        return p > 0.0 ? std::log2(p / (pu[u] * py[y])) : -kInf;
      },
      n, gamma_p, Direction::kAtLeast);
  if (!log_mass) return std::nullopt;
  return std::exp2(*log_mass);
}

AtomDistribution wak_event_atoms(const WakInstance& inst) {
  const JointPmf j = inst.joint();  // (T, U, X, Y)
  const Marg tu(j, {0, 1}), tux(j, {0, 1, 2}), tuy(j, {0, 1, 3}), y(j, {3});
  return joint_atoms(j, 2, [&](std::span<const std::size_t> i, double* out) {
    out[0] = -std::log2(tux(i) / tu(i));
    out[1] = std::log2(tuy(i) / (tu(i) * y(i)));
  });
}

AtomDistribution wz_event_atoms(const WzInstance& inst) {
  const JointPmf j = inst.joint();  // (T, U, X, Y, X-hat)
  const Marg tu(j, {0, 1}), tux(j, {0, 1, 2}), tuy(j, {0, 1, 3}), x(j, {2}), y(j, {3});
  const Eigen::MatrixXd& d = inst.distortion();
  return joint_atoms(j, 3, [&](std::span<const std::size_t> i, double* out) {
    out[0] = std::log2(tuy(i) / (tu(i) * y(i)));
    out[1] = std::log2(tux(i) / (tu(i) * x(i)));
    out[2] = d(static_cast<Eigen::Index>(i[2]), static_cast<Eigen::Index>(i[4]));
  });
}

AtomDistribution gp_event_atoms(const GpInstance& inst) {
  const JointPmf j = inst.joint();  // (T, S, U, X, Y)
  const Marg tu(j, {0, 2}), tuy(j, {0, 2, 4}), tus(j, {0, 1, 2}), s(j, {1}), y(j, {4});
  return joint_atoms(j, 3, [&](std::span<const std::size_t> i, double* out) {
    out[0] = std::log2(tuy(i) / (tu(i) * y(i)));
    out[1] = std::log2(tus(i) / (tu(i) * s(i)));
    out[2] = inst.cost()[i[3]];
  });
}

BoundReport wak_cs_bound(const WakInstance& inst, const BoundParams& params,
                         const TailOptions& tail_options) {
  check_params(params, true);
  return wak_cs_common(inst, params, tail_options, false, std::nullopt);
}

BoundReport wak_cs_simplified(const WakInstance& inst, const BoundParams& params,
                              const TailOptions& tail_options) {
  check_params(params, true);
  return wak_cs_common(inst, params, tail_options, true, std::nullopt);
}

BoundReport wak_modified_bound(const WakInstance& inst, const BoundParams& params,
                               const TailOptions& tail_options) {
  check_params(params, true);
  if (!params.log_j) throw InvalidArgument("wak_modified_bound: log_j is required");
  return wak_cs_common(inst, params, tail_options, false, params.log_j);
}

BoundReport wak_corner_bound(const JointPmf& p_xy, const BoundParams& params,
                             const TailOptions& tail_options) {
  check_params(params, false);
  const AtomDistribution atoms = corner_atoms(p_xy);
  const TailResult primary = tail(atoms, params.n, {params.gamma_b, params.gamma_s},
                                  {Direction::kAbove, Direction::kAbove}, tail_options);
  return finish("wak_corner", params,
                {{"primary_prob", primary.probability},
                 {"binning_residual", std::exp2(params.gamma_b - params.log_m)},
                 {"joint_binning_residual",
                  std::exp2(params.gamma_s - params.log_m - params.log_l)}},
                primary, {});
}

BoundReport wak_kuzuoka_bound(const WakInstance& inst, const BoundParams& params,
                              const TailOptions& tail_options) {
  return wak_prior(inst, params, tail_options, true, "wak_kuzuoka");
}

BoundReport wak_verdu_bound(const WakInstance& inst, const BoundParams& params,
                            const TailOptions& tail_options) {
  return wak_prior(inst, params, tail_options, false, "wak_verdu");
}

static double wz_packing_residual(const BoundParams& p) {
  return std::exp2(p.log_big_l - p.gamma_p - p.log_m);
}

static double gp_packing_residual(const BoundParams& p) {
  return std::exp2(p.log_big_l + p.log_m - p.gamma_p);
}

BoundReport wz_cs_bound(const WzInstance& inst, const BoundParams& params,
                        const TailOptions& tail_options) {
  return side_info_cs(wz_event_atoms(inst), params, inst.level_d(), tail_options,
                      wz_packing_residual(params), "wz_cs");
}

BoundReport wz_verdu_bound(const WzInstance& inst, const BoundParams& params,
                           const TailOptions& tail_options) {
  return side_info_prior(wz_event_atoms(inst), params, inst.level_d(), tail_options,
                         wz_packing_residual(params), false, "wz_verdu");
}

BoundReport wz_iwata_bound(const WzInstance& inst, const BoundParams& params,
                           const TailOptions& tail_options) {
  return side_info_prior(wz_event_atoms(inst), params, inst.level_d(), tail_options,
                         wz_packing_residual(params), true, "wz_iwata");
}

BoundReport gp_cs_bound(const GpInstance& inst, const BoundParams& params,
                        const TailOptions& tail_options) {
  return side_info_cs(gp_event_atoms(inst), params, inst.budget_gamma(), tail_options,
                      gp_packing_residual(params), "gp_cs");
}

BoundReport gp_verdu_bound(const GpInstance& inst, const BoundParams& params,
                           const TailOptions& tail_options) {
  return side_info_prior(gp_event_atoms(inst), params, kInf, tail_options,
                         gp_packing_residual(params), false, "gp_verdu");
}

BoundReport gp_tan_bound(const GpInstance& inst, const BoundParams& params,
                         const TailOptions& tail_options) {
  return side_info_prior(gp_event_atoms(inst), params, kInf, tail_options,
                         gp_packing_residual(params), true, "gp_tan");
}

}  // namespace fbl
