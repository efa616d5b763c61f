#include "fbl/normal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "fbl/error.hpp"

namespace fbl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Standard-normal mass beyond this many deviations is below 1e-32.
constexpr double kTailCut = 12.0;

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

void gk15(const std::function<double(double)>& f, double a, double b, double& kronrod,
          double& gauss) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  kronrod = kKronrodWeights[7] * fc;
  gauss = kGaussWeights[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = h * kKronrodNodes[i];
    const double s = f(c - dx) + f(c + dx);
    kronrod += kKronrodWeights[i] * s;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * s;
  }
  kronrod *= h;
  gauss *= h;
}

double adapt(const std::function<double(double)>& f, double a, double b, double tol,
             int depth) {
  double k = 0.0, g = 0.0;
  gk15(f, a, b, k, g);
  if (std::abs(k - g) <= tol || depth <= 0 || b - a < 1e-12) return k;
  const double m = 0.5 * (a + b);
  return adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1);
}

// Integral of phi(t) * g(t) over t <= upper, g bounded in [0, 1].
double gaussian_weighted(const std::function<double(double)>& g, double upper, double tol) {
  const double hi = std::min(upper, kTailCut);
  const double lo = std::min(-kTailCut, hi - 8.0);
  if (hi <= lo) return 0.0;
  const int pieces = std::max(1, static_cast<int>(std::ceil((hi - lo) / 1.5)));
  const double width = (hi - lo) / pieces;
  auto integrand = [&](double t) { return normal_pdf(t) * g(t); };
  double total = 0.0;
  for (int p = 0; p < pieces; ++p) {
    const double a = lo + p * width;
    total += integrate_adaptive(integrand, a, a + width, tol / pieces);
  }
  return total;
}

double orthant(const Eigen::MatrixXd& cov, const Eigen::VectorXd& z, double scale,
               double tol) {
  const Eigen::Index k = z.size();
  if (k == 0) return 1.0;
  const double zero_var = 1e-13 * scale;

  // Degenerate coordinates are identically zero.
  for (Eigen::Index i = 0; i < k; ++i) {
    if (cov(i, i) <= zero_var) {
      if (z(i) < 0.0) return 0.0;
      Eigen::MatrixXd c(k - 1, k - 1);
      Eigen::VectorXd w(k - 1);
      for (Eigen::Index r = 0, rr = 0; r < k; ++r) {
        if (r == i) continue;
        w(rr) = z(r);
        for (Eigen::Index s = 0, ss = 0; s < k; ++s) {
          if (s == i) continue;
          c(rr, ss++) = cov(r, s);
        }
        ++rr;
      }
      return orthant(c, w, scale, tol);
    }
  }
  if (k == 1) return normal_cdf(z(0) / std::sqrt(cov(0, 0)));

  Eigen::Index pivot = 0;
  for (Eigen::Index i = 1; i < k; ++i) {
    if (cov(i, i) > cov(pivot, pivot)) pivot = i;
  }
  const double sigma = std::sqrt(cov(pivot, pivot));
  Eigen::VectorXd slope(k - 1);
  Eigen::VectorXd rest_z(k - 1);
  std::array<Eigen::Index, 3> rest{};
  for (Eigen::Index i = 0, r = 0; i < k; ++i) {
    if (i == pivot) continue;
    rest[r] = i;
    slope(r) = cov(i, pivot) / sigma;
    rest_z(r) = z(i);
    ++r;
  }
  Eigen::MatrixXd cond(k - 1, k - 1);
  for (Eigen::Index r = 0; r < k - 1; ++r)
    for (Eigen::Index s = 0; s < k - 1; ++s)
      cond(r, s) = cov(rest[r], rest[s]) - slope(r) * slope(s);
  const double upper = z(pivot) / sigma;

  if (k == 2) {
    const double b = slope(0);
    const double w = rest_z(0);
    const double cv = cond(0, 0);
    // Residual deterministic given the pivot.
    if (cv <= zero_var) {
      if (std::abs(b) <= std::sqrt(zero_var)) return w >= 0.0 ? normal_cdf(upper) : 0.0;
      const double cut = w / b;
      if (b > 0.0) return normal_cdf(std::min(upper, cut));
      return std::max(0.0, normal_cdf(upper) - normal_cdf(cut));
    }
    const double sd = std::sqrt(cv);
    return gaussian_weighted([&](double t) { return normal_cdf((w - b * t) / sd); }, upper,
                             tol);
  }

  const double inner_tol = tol * 1e-2;
  return gaussian_weighted(
      [&](double t) {
        Eigen::VectorXd shifted = rest_z - slope * t;
        return orthant(cond, shifted, scale, inner_tol);
      },
      upper, tol);
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double q_inverse(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidArgument("q_inverse: argument outside [0,1]");
  if (eps == 0.0) return kInf;
  if (eps == 1.0) return -kInf;
  if (eps == 0.5) return 0.0;
  double lo = -40.0, hi = 40.0;
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    (q_function(mid) > eps ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double step = (q_function(x) - eps) / normal_pdf(x);
    double next = x + step;
    const bool newton = next > lo && next < hi;
    if (!newton) next = 0.5 * (lo + hi);
    (q_function(next) > eps ? lo : hi) = next;
    const double tol = 1e-14 * std::max(1.0, std::abs(next));
    if ((newton && std::abs(next - x) < tol) || hi - lo < tol) return next;
    x = next;
  }
  return x;
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_depth) {
  if (!(b > a)) return 0.0;
  return adapt(f, a, b, abs_tol, max_depth);
}

double mvn_lower_orthant(const Eigen::MatrixXd& cov, const Eigen::VectorXd& z) {
  const Eigen::Index k = z.size();
  if (k < 1 || k > 3) throw InvalidArgument("mvn_lower_orthant: dimension must be 1..3");
  if (cov.rows() != k || cov.cols() != k) {
    throw InvalidArgument("mvn_lower_orthant: covariance size mismatch");
  }
  if (z.array().isNaN().any() || !cov.allFinite()) {
    throw InvalidArgument("mvn_lower_orthant: non-finite input");
  }
  const Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  if (sym.diagonal().minCoeff() < -1e-12 * std::max(1.0, sym.trace())) {
    throw InvalidArgument("mvn_lower_orthant: covariance is not PSD");
  }
  // Coordinates at +inf are unconstrained; any at -inf empties the event.
  std::array<Eigen::Index, 3> keep{};
  Eigen::Index m = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (z(i) == -kInf) return 0.0;
    if (z(i) != kInf) keep[m++] = i;
  }
  Eigen::MatrixXd c(m, m);
  Eigen::VectorXd w(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    w(r) = z(keep[r]);
    for (Eigen::Index s = 0; s < m; ++s) c(r, s) = sym(keep[r], keep[s]);
  }
  const double scale = std::max(c.trace(), std::numeric_limits<double>::min());
  const double tol = m <= 2 ? 1e-12 : 1e-9;
  return std::clamp(orthant(c, w, scale, tol), 0.0, 1.0);
}

}  // namespace fbl
