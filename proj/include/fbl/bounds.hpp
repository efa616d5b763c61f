#pragma once

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fbl/density.hpp"
#include "fbl/instances.hpp"
#include "fbl/prob.hpp"

namespace fbl {

// Sizes are log2 values; thresholds are in bits except where noted.
struct BoundParams {
  std::size_t n = 1;
  double log_m = 0.0;
  double log_l = 0.0;
  double log_big_l = 0.0;
  std::optional<double> log_j;
  double gamma_b = 0.0;
  double gamma_c = 0.0;
  double gamma_p = 0.0;
  double gamma_s = std::numeric_limits<double>::infinity();
  double delta = 0.0;
};

BoundParams wak_auto_params(std::size_t n, double log_m, double log_l);
BoundParams wak_modified_auto_params(std::size_t n, double log_m, double log_l, double rho);
BoundParams corner_auto_params(std::size_t n, double log_m, double log_l);
BoundParams wz_auto_params(std::size_t n, double log_m, double log_big_l);
BoundParams gp_auto_params(std::size_t n, double log_m, double log_big_l);

struct BoundTerm {
  std::string name;
  double value;
};

struct BoundReport {
  std::string bound;
  // Clipped to [0, 1]; raw_total is the exact term sum.
  double total = 0.0;
  double raw_total = 0.0;
  std::vector<BoundTerm> terms;
  std::string evaluator;
  std::optional<double> primary_std_error;
  std::optional<double> primary_certificate;
  // Which residuals were evaluated exactly and which fell back to closed forms.
  std::vector<std::string> notes;
  BoundParams params;

  double term(std::string_view name) const;
};

// Single-letter sum of P_U P_{Z|U}^2 / P_Z over pairs with log ratio <= gamma_c.
double delta_quantity(const JointPmf& p_uz, double gamma_c);

struct NfoldDelta {
  double value;
  bool exact;
};
// The same functional for the n-fold product; falls back to
// min(2^gamma_c, E[ratio]^n) when exact evaluation is refused.
NfoldDelta delta_nfold(const JointPmf& p_uz, std::size_t n, double gamma_c);

BoundReport wak_cs_bound(const WakInstance& inst, const BoundParams& params,
                         const TailOptions& tail = {});
BoundReport wak_cs_simplified(const WakInstance& inst, const BoundParams& params,
                              const TailOptions& tail = {});
BoundReport wak_modified_bound(const WakInstance& inst, const BoundParams& params,
                               const TailOptions& tail = {});
BoundReport wak_corner_bound(const JointPmf& p_xy, const BoundParams& params,
                             const TailOptions& tail = {});
BoundReport wak_kuzuoka_bound(const WakInstance& inst, const BoundParams& params,
                              const TailOptions& tail = {});
BoundReport wak_verdu_bound(const WakInstance& inst, const BoundParams& params,
                            const TailOptions& tail = {});

BoundReport wz_cs_bound(const WzInstance& inst, const BoundParams& params,
                        const TailOptions& tail = {});
BoundReport wz_verdu_bound(const WzInstance& inst, const BoundParams& params,
                           const TailOptions& tail = {});
BoundReport wz_iwata_bound(const WzInstance& inst, const BoundParams& params,
                           const TailOptions& tail = {});

BoundReport gp_cs_bound(const GpInstance& inst, const BoundParams& params,
                        const TailOptions& tail = {});
BoundReport gp_verdu_bound(const GpInstance& inst, const BoundParams& params,
                           const TailOptions& tail = {});
BoundReport gp_tan_bound(const GpInstance& inst, const BoundParams& params,
                         const TailOptions& tail = {});

// Per-letter event vectors used by the bounds, with (T,U) as one auxiliary:
//   wak: [-log P(x|u'), log P(y|u')/P(y)]
//   wz:  [log P(y|u')/P(y), log P(x|u')/P(x), d(x, x-hat)]
//   gp:  [log P(y|u')/P(y), log P(s|u')/P(s), g(x)]
AtomDistribution wak_event_atoms(const WakInstance& inst);
AtomDistribution wz_event_atoms(const WzInstance& inst);
AtomDistribution gp_event_atoms(const GpInstance& inst);

// Sum of P_U(u) over pairs (u, x) of the n-fold product with
// -log P(x|u) <= gamma_b; `p_ux` is a rank-2 joint over (U, X). Empty when
// exact evaluation is refused.
std::optional<double> binning_mass_nfold(const JointPmf& p_ux, std::size_t n, double gamma_b);
// Sum of P_U(u) P_Y(y) over n-fold pairs with log P(y|u)/P(y) >= gamma_p.
std::optional<double> packing_mass_nfold(const JointPmf& p_uy, std::size_t n, double gamma_p);

const char* tail_method_name(TailMethod method);

}  // namespace fbl
