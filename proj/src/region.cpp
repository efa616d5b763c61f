#include "fbl/region.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>

#include "fbl/error.hpp"
#include "fbl/normal.hpp"
#include "fbl/parallel.hpp"

namespace fbl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_eps(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("eps must lie in (0, 1)");
}

void check_n(std::size_t n) {
  if (n == 0) throw InvalidArgument("blocklength must be positive");
}

double sd(const Eigen::MatrixXd& v, Eigen::Index i) { return std::sqrt(std::max(0.0, v(i, i))); }

Eigen::VectorXd point(double a, double b, std::optional<double> c = std::nullopt) {
  Eigen::VectorXd z(c ? 3 : 2);
  z(0) = a;
  z(1) = b;
  if (c) z(2) = *c;
  return z;
}

// Least x with pred(x) for a monotone pred; `scale` sets the first bracket.
double bisect_least(const std::function<bool(double)>& pred, double scale, double tol) {
  double lo = -scale, hi = scale;
  int guard = 0;
  while (!pred(hi)) {
    const double w = hi - lo;
    lo = hi;
    hi += 2.0 * w;
    if (++guard > 100) return kInf;
  }
  while (pred(lo)) {
    const double w = hi - lo;
    hi = lo;
    lo -= 2.0 * w;
    if (++guard > 200) return -kInf;
  }
  const double width = tol * std::max(1.0, scale);
  for (int i = 0; i < 400 && hi - lo > width; ++i) {
    const double mid = 0.5 * (lo + hi);
    (pred(mid) ? hi : lo) = mid;
  }
  return hi;
}

// Minimizer value of a convex function on [a, b] by golden-section search.
double golden_min(const std::function<double(double)>& f, double a, double b, double tol) {
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - ratio * (b - a), x2 = a + ratio * (b - a);
  double f1 = f(x1), f2 = f(x2);
  double best = std::min({f1, f2, f(b)});
  const double width = tol * std::max(1.0, b - a);
  for (int i = 0; i < 300 && b - a > width; ++i) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - ratio * (b - a);
      f1 = f(x1);
      best = std::min(best, f1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + ratio * (b - a);
      f2 = f(x2);
      best = std::min(best, f2);
    }
  }
  return best;
}

Eigen::MatrixXd sub2(const Eigen::MatrixXd& v, Eigen::Index i, Eigen::Index j) {
  Eigen::MatrixXd m(2, 2);
  m << v(i, i), v(i, j), v(j, i), v(j, j);
  return m;
}

std::vector<double> linspace(double a, double b, std::size_t count) {
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) {
    g[i] = count == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return g;
}

std::vector<std::pair<double, double>> finite_sorted(std::vector<std::pair<double, double>> pts) {
  std::erase_if(pts, [](const auto& p) { return !std::isfinite(p.first) || !std::isfinite(p.second); });
  std::stable_sort(pts.begin(), pts.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  return pts;
}

// Span of z values worth scanning past an asymptote.
double scan_span(const Eigen::MatrixXd& v) { return 8.0 * std::sqrt(std::max(v.trace(), 0.0)) + 1e-6; }

}  // namespace

bool s_set_membership(const Eigen::MatrixXd& v, double eps, const Eigen::VectorXd& z) {
  check_eps(eps);
  return mvn_lower_orthant(v, z) >= 1.0 - eps - kMembershipSlack;
}

double s_set_boundary(double variance, double eps) {
  check_eps(eps);
  if (!(variance >= 0.0)) throw InvalidArgument("s_set_boundary: negative variance");
  if (variance == 0.0) return 0.0;
  const double sigma = std::sqrt(variance);
  Eigen::MatrixXd v(1, 1);
  v(0, 0) = variance;
  Eigen::VectorXd z(1);
  double lo = -40.0 * sigma, hi = 40.0 * sigma;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * sigma; ++i) {
    const double mid = 0.5 * (lo + hi);
    z(0) = mid;
    (mvn_lower_orthant(v, z) >= 1.0 - eps ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

double s_set_min_second(const Eigen::MatrixXd& v, double eps, double z1, double z3, double tol) {
  check_eps(eps);
  const Eigen::Index k = v.rows();
  if (k != 2 && k != 3) throw InvalidArgument("s_set_min_second: need a 2x2 or 3x3 matrix");
  const std::optional<double> third = k == 3 ? std::optional<double>(z3) : std::nullopt;
  const double target = 1.0 - eps;
  if (mvn_lower_orthant(v, point(z1, kInf, third)) < target) return kInf;
  const double s2 = sd(v, 1);
  const double scale = s2 > 0.0 ? 10.0 * s2 : 1.0;
  return bisect_least(
      [&](double z2) { return mvn_lower_orthant(v, point(z1, z2, third)) >= target; }, scale, tol);
}

std::vector<double> s_set_boundary(const Eigen::MatrixXd& v, double eps,
                                   std::span<const double> z1_grid, double tol) {
  if (v.rows() != 2 || v.cols() != 2) throw InvalidArgument("s_set_boundary: need a 2x2 matrix");
  std::vector<double> out(z1_grid.size());
  parallel_for(z1_grid.size(), [&](std::size_t i) { out[i] = s_set_min_second(v, eps, z1_grid[i], 0.0, tol); });
  return out;
}

double s_set_min_sum(const Eigen::MatrixXd& v, double eps, double z3, double tol) {
  check_eps(eps);
  const Eigen::Index k = v.rows();
  if (k != 2 && k != 3) throw InvalidArgument("s_set_min_sum: need a 2x2 or 3x3 matrix");
  double a = 0.0;
  if (k == 2) {
    a = s_set_boundary(v(0, 0), eps);
  } else {
    // Least z1 with the (z1, z3) marginal orthant reaching 1 - eps.
    a = s_set_min_second(sub2(v, 2, 0), eps, z3, 0.0, tol);
    if (!std::isfinite(a)) throw Infeasible("s_set_min_sum: slice of S is empty at this z3");
  }
  const double span = scan_span(v);
  auto total = [&](double z1) { return z1 + s_set_min_second(v, eps, z1, z3, tol); };
  const double best = golden_min(total, a, a + span, tol);
  if (!std::isfinite(best)) throw Infeasible("s_set_min_sum: no finite point found");
  return best;
}

double log_term(std::size_t n, bool drop) {
  check_n(n);
  if (drop) return 0.0;
  const double nd = static_cast<double>(n);
  return 2.0 * std::log2(nd) / nd;
}

double wak_min_r2(const DispersionStats& stats, std::size_t n, double eps, double r1, double rho,
                  bool drop_logterm, double tol) {
  check_eps(eps);
  if (stats.dim != 2) throw InvalidArgument("wak_min_r2: need 2-D stats");
  if (rho < 0.0) throw InvalidArgument("wak_min_r2: rho must be >= 0");
  const double c = log_term(n, drop_logterm);
  const double root_n = std::sqrt(static_cast<double>(n));
  const double z1 = root_n * (r1 - stats.j_mean(0) - c) - rho;
  double z2 = 0.0;
  if (numerical_rank(stats.v_matrix) == 0) {
    // Degenerate: S is the nonnegative orthant.
    if (z1 < -tol) return kInf;
  } else {
    z2 = s_set_min_second(stats.v_matrix, eps, z1, 0.0, tol);
    if (!std::isfinite(z2)) return kInf;
  }
  return stats.j_mean(1) + c + (z2 - rho) / root_n;
}

double wak_corner_min_r2(const DispersionStats& stats, std::size_t n, double eps, double r1,
                         bool drop_logterm, double tol) {
  // Sum rate R1 + R2 obeys the second coordinate.
  const double sum = wak_min_r2(stats, n, eps, r1, 0.0, drop_logterm, tol);
  return sum - r1;
}

std::vector<double> wak_union_envelope(const std::vector<DispersionStats>& family, std::size_t n,
                                       double eps, std::span<const double> r1_grid,
                                       std::span<const double> rho_grid, bool drop_logterm,
                                       double tol) {
  if (family.empty()) throw InvalidArgument("wak_union_envelope: empty family");
  if (rho_grid.empty()) throw InvalidArgument("wak_union_envelope: empty rho grid");
  std::vector<double> out(r1_grid.size(), kInf);
  parallel_for(r1_grid.size(), [&](std::size_t i) {
    double best = kInf;
    for (const DispersionStats& s : family)
      for (double rho : rho_grid)
        best = std::min(best, wak_min_r2(s, n, eps, r1_grid[i], rho, drop_logterm, tol));
    out[i] = best;
  });
  return out;
}

std::vector<std::pair<double, double>> wak_verdu_split_points(const DispersionStats& stats,
                                                              std::size_t n, double eps,
                                                              std::span<const double> lambdas,
                                                              bool drop_logterm) {
  check_eps(eps);
  if (stats.dim != 2) throw InvalidArgument("wak_verdu_split_points: need 2-D stats");
  const double c = log_term(n, drop_logterm);
  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<std::pair<double, double>> pts;
  for (double lambda : lambdas) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("split weight outside [0,1]");
    const double z1 = sd(stats.v_matrix, 0) * q_inverse(lambda * eps);
    const double z2 = sd(stats.v_matrix, 1) * q_inverse((1.0 - lambda) * eps);
    // Zero variance times an infinite quantile leaves the coordinate at its mean.
    const double a = std::isnan(z1) ? 0.0 : z1;
    const double b = std::isnan(z2) ? 0.0 : z2;
    pts.emplace_back(stats.j_mean(0) + c + a / root_n, stats.j_mean(1) + c + b / root_n);
  }
  return pts;
}

static std::vector<double> r1_grid_for(const std::vector<DispersionStats>& family, std::size_t n,
                                       double eps, double c, double extra, std::size_t count) {
  const double root_n = std::sqrt(static_cast<double>(n));
  double lo = kInf, hi = -kInf;
  for (const DispersionStats& s : family) {
    const double asym = s.j_mean(0) + c + s_set_boundary(s.v_matrix(0, 0), eps) / root_n;
    lo = std::min(lo, asym);
    hi = std::max(hi, asym + (scan_span(s.v_matrix) + extra) / root_n);
  }
  return linspace(lo, hi, std::max<std::size_t>(count, 2));
}

RegionCurve wak_region_union(const std::vector<DispersionStats>& family, std::size_t n, double eps,
                             std::span<const double> rho_grid, const RegionOptions& options) {
  check_eps(eps);
  if (options.points == 0) throw InvalidArgument("wak_region_union: empty grid");
  const double c = log_term(n, options.drop_logterm);
  const double extra = rho_grid.empty() ? 0.0 : *std::max_element(rho_grid.begin(), rho_grid.end());
  const std::vector<double> grid = r1_grid_for(family, n, eps, c, extra, options.points);
  const std::vector<double> r2 =
      wak_union_envelope(family, n, eps, grid, rho_grid, options.drop_logterm, options.tol);
  RegionCurve curve;
  for (std::size_t i = 0; i < grid.size(); ++i) curve.points.emplace_back(grid[i], r2[i]);
  curve.points = finite_sorted(std::move(curve.points));
  curve.first_name = "R1";
  curve.second_name = "R2";
  curve.n = n;
  curve.eps = eps;
  curve.construction = "union";
  return curve;
}

RegionCurve wak_region(const WakInstance& inst, std::size_t n, double eps, WakVariant variant,
                       std::span<const double> grid, const RegionOptions& options) {
  check_eps(eps);
  const double c = log_term(n, options.drop_logterm);
  RegionCurve curve;
  curve.first_name = "R1";
  curve.second_name = "R2";
  curve.n = n;
  curve.eps = eps;
  switch (variant) {
    case WakVariant::kCs: {
      const double zero[] = {0.0};
      curve = wak_region_union({dispersion_stats(inst)}, n, eps, zero, options);
      curve.construction = "cs";
      return curve;
    }
    case WakVariant::kModified: {
      if (grid.empty()) throw InvalidArgument("wak_region: empty rho grid");
      curve = wak_region_union({dispersion_stats(inst)}, n, eps, grid, options);
      curve.construction = "modified";
      return curve;
    }
    case WakVariant::kVerduSplit: {
      if (grid.empty()) throw InvalidArgument("wak_region: empty split grid");
      curve.points = finite_sorted(
          wak_verdu_split_points(dispersion_stats(inst), n, eps, grid, options.drop_logterm));
      curve.construction = "verdu_split";
      return curve;
    }
    case WakVariant::kCorner: {
      if (options.points == 0) throw InvalidArgument("wak_region: empty grid");
      const DispersionStats s = dispersion_stats(inst, DensityKind::kCorner);
      const std::vector<double> r1 = r1_grid_for({s}, n, eps, c, 0.0, options.points);
      std::vector<std::pair<double, double>> pts(r1.size());
      parallel_for(r1.size(), [&](std::size_t i) {
        pts[i] = {r1[i], wak_corner_min_r2(s, n, eps, r1[i], options.drop_logterm, options.tol)};
      });
      // Past the sum-rate corner R2 would go negative; clip at zero.
      for (auto& p : pts) p.second = std::max(p.second, 0.0);
      curve.points = finite_sorted(std::move(pts));
      curve.construction = "corner";
      return curve;
    }
  }
  throw InvalidArgument("wak_region: unknown variant");
}

double wz_rate(const DispersionStats& stats, std::size_t n, double eps, double d,
               bool drop_logterm) {
  check_eps(eps);
  if (stats.dim != 3) throw InvalidArgument("wz_rate: need 3-D stats");
  const double c = log_term(n, drop_logterm);
  const double root_n = std::sqrt(static_cast<double>(n));
  const double z3 = root_n * (d - stats.j_mean(2) - c);
  const double base = stats.j_mean(0) + stats.j_mean(1) + 2.0 * c;
  if (numerical_rank(stats.v_matrix) == 0) {
    if (z3 < -1e-12) throw Infeasible("wz_rate: distortion level below the achievable minimum");
    return base;
  }
  double min_sum = 0.0;
  try {
    min_sum = s_set_min_sum(stats.v_matrix, eps, z3, 1e-7);
  } catch (const Infeasible&) {
    throw Infeasible("wz_rate: distortion level below the achievable minimum");
  }
  return base + min_sum / root_n;
}

double wz_rate(const WzInstance& inst, std::size_t n, double eps, double d, bool drop_logterm) {
  return wz_rate(dispersion_stats(inst), n, eps, d, drop_logterm);
}

// (sum of first two coordinates' least total, z3) along a z3 scan.
static std::vector<std::pair<double, double>> scan_third(const DispersionStats& s, double eps,
                                                         std::size_t count) {
  const double lo = s_set_boundary(s.v_matrix(2, 2), eps);
  const double span = scan_span(s.v_matrix);
  // The slice at the asymptote itself is empty; start just inside.
  std::vector<double> z3 = linspace(lo + 1e-3 * span, lo + span, std::max<std::size_t>(count, 2));
  if (s.v_matrix(2, 2) <= 1e-13 * std::max(s.v_matrix.trace(), 1e-300)) z3 = {0.0};
  std::vector<std::pair<double, double>> out(z3.size());
  parallel_for(z3.size(), [&](std::size_t i) {
    double m = kInf;
    try {
      m = s_set_min_sum(s.v_matrix, eps, z3[i], 1e-7);
    } catch (const Infeasible&) {
    }
    out[i] = {m, z3[i]};
  });
  return out;
}

RegionCurve wz_region(const WzInstance& inst, std::size_t n, double eps,
                      const RegionOptions& options) {
  check_eps(eps);
  if (options.points == 0) throw InvalidArgument("wz_region: empty grid");
  const DispersionStats s = dispersion_stats(inst);
  const double c = log_term(n, options.drop_logterm);
  const double root_n = std::sqrt(static_cast<double>(n));
  RegionCurve curve;
  if (numerical_rank(s.v_matrix) == 0) {
    curve.points = {{s.j_mean(0) + s.j_mean(1) + 2.0 * c, s.j_mean(2) + c}};
  } else {
    for (const auto& [m, z3] : scan_third(s, eps, options.points)) {
      curve.points.emplace_back(s.j_mean(0) + s.j_mean(1) + 2.0 * c + m / root_n,
                                s.j_mean(2) + c + z3 / root_n);
    }
  }
  curve.points = finite_sorted(std::move(curve.points));
  curve.first_name = "R";
  curve.second_name = "D";
  curve.n = n;
  curve.eps = eps;
  curve.construction = "z3_scan";
  return curve;
}

double gp_rate(const DispersionStats& stats, std::size_t n, double eps, bool drop_logterm) {
  check_eps(eps);
  if (stats.dim < 2) throw InvalidArgument("gp_rate: need at least 2-D stats");
  const DispersionStats s = restrict_stats(stats, {0, 1});
  const double c = log_term(n, drop_logterm);
  const double root_n = std::sqrt(static_cast<double>(n));
  const double base = s.j_mean(0) + s.j_mean(1) - 2.0 * c;
  if (numerical_rank(s.v_matrix) == 0) return base;
  return base - s_set_min_sum(s.v_matrix, eps) / root_n;
}

double gp_rate(const GpInstance& inst, std::size_t n, double eps, bool drop_logterm) {
  return gp_rate(dispersion_stats(inst), n, eps, drop_logterm);
}

double gp_rate_at_cost(const DispersionStats& stats, std::size_t n, double eps, double gamma,
                       bool drop_logterm) {
  check_eps(eps);
  if (stats.dim != 3) throw InvalidArgument("gp_rate_at_cost: need 3-D stats");
  if (std::isinf(gamma)) return gp_rate(stats, n, eps, drop_logterm);
  const double c = log_term(n, drop_logterm);
  const double root_n = std::sqrt(static_cast<double>(n));
  const double z3 = root_n * (gamma + stats.j_mean(2) - c);
  const double base = stats.j_mean(0) + stats.j_mean(1) - 2.0 * c;
  if (numerical_rank(stats.v_matrix) == 0) {
    if (z3 < -1e-12) throw Infeasible("gp_rate_at_cost: budget below the achievable minimum");
    return base;
  }
  try {
    return base - s_set_min_sum(stats.v_matrix, eps, z3, 1e-7) / root_n;
  } catch (const Infeasible&) {
    throw Infeasible("gp_rate_at_cost: budget below the achievable minimum");
  }
}

RegionCurve gp_region(const GpInstance& inst, std::size_t n, double eps,
                      const RegionOptions& options) {
  check_eps(eps);
  if (options.points == 0) throw InvalidArgument("gp_region: empty grid");
  const DispersionStats s = dispersion_stats(inst);
  const double c = log_term(n, options.drop_logterm);
  const double root_n = std::sqrt(static_cast<double>(n));
  const double base = s.j_mean(0) + s.j_mean(1) - 2.0 * c;
  RegionCurve curve;
  if (numerical_rank(s.v_matrix) == 0) {
    curve.points = {{base, -s.j_mean(2) + c}};
  } else {
    for (const auto& [m, z3] : scan_third(s, eps, options.points)) {
      curve.points.emplace_back(base - m / root_n, -s.j_mean(2) + c + z3 / root_n);
    }
  }
  curve.points = finite_sorted(std::move(curve.points));
  curve.first_name = "R";
  curve.second_name = "Gamma";
  curve.n = n;
  curve.eps = eps;
  curve.construction = "z3_scan";
  return curve;
}

double lossless_rate(const Pmf& p_x, std::size_t n, double eps, bool drop_logterm) {
  check_eps(eps);
  const DispersionStats s = dispersion_stats(lossless_atoms(p_x));
  const double backoff = std::sqrt(s.v_matrix(0, 0) / static_cast<double>(n));
  return s.j_mean(0) + (backoff > 0.0 ? backoff * q_inverse(eps) : 0.0) +
         log_term(n, drop_logterm);
}

double channel_rate(const Channel& w, const Pmf& p_x, std::size_t n, double eps,
                    bool drop_logterm) {
  check_eps(eps);
  const DispersionStats s = dispersion_stats(channel_atoms(w, p_x));
  const double backoff = std::sqrt(s.v_matrix(0, 0) / static_cast<double>(n));
  return s.j_mean(0) - (backoff > 0.0 ? backoff * q_inverse(eps) : 0.0) -
         log_term(n, drop_logterm);
}

}  // namespace fbl
