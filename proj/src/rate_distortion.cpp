#include "fbl/rate_distortion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fbl/error.hpp"
#include "fbl/normal.hpp"

namespace fbl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_inputs(const Pmf& p_x, const Eigen::MatrixXd& d) {
  if (static_cast<std::size_t>(d.rows()) != p_x.size() || d.cols() < 1) {
    throw InvalidArgument("rate_distortion: distortion matrix must be |X| x |X-hat|");
  }
  if (!d.allFinite() || d.minCoeff() < 0.0) {
    throw InvalidArgument("rate_distortion: distortion must be finite and nonnegative");
  }
}

// Weight 2^{-lambda d}; at lambda = inf only zero-distortion pairs survive.
double kernel(double lambda, double dist) {
  if (std::isinf(lambda)) return dist == 0.0 ? 1.0 : 0.0;
  return std::exp2(-lambda * dist);
}

}  // namespace

SlopePoint blahut_arimoto(const Pmf& p_x, const Eigen::MatrixXd& d, double lambda,
                          std::vector<double> q_start, double tol, std::size_t max_iterations) {
  check_inputs(p_x, d);
  if (!(lambda >= 0.0)) throw InvalidArgument("blahut_arimoto: slope must be >= 0");
  const auto nx = static_cast<std::size_t>(d.rows());
  const auto nz = static_cast<std::size_t>(d.cols());
  std::vector<double> q = q_start.size() == nz ? std::move(q_start)
                                               : std::vector<double>(nz, 1.0 / nz);
  std::vector<double> w(nx * nz);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t z = 0; z < nz; ++z)
      w[x * nz + z] = kernel(lambda, d(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(z)));

  std::vector<double> next(nz), norm(nx);
  double rate = kInf, dist = 0.0;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    double new_rate = 0.0, new_dist = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      double s = 0.0;
      for (std::size_t z = 0; z < nz; ++z) s += q[z] * w[x * nz + z];
      if (!(s > 0.0)) throw NumericFailure("blahut_arimoto: empty reproduction support");
      norm[x] = s;
    }
    for (std::size_t x = 0; x < nx; ++x) {
      if (p_x[x] <= 0.0) continue;
      for (std::size_t z = 0; z < nz; ++z) {
        const double cond = q[z] * w[x * nz + z] / norm[x];
        if (cond <= 0.0) continue;
        next[z] += p_x[x] * cond;
        new_dist += p_x[x] * cond * d(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(z));
      }
    }
    // Rate of the channel built from q, measured against its own output law.
    for (std::size_t x = 0; x < nx; ++x) {
      if (p_x[x] <= 0.0) continue;
      for (std::size_t z = 0; z < nz; ++z) {
        const double cond = q[z] * w[x * nz + z] / norm[x];
        if (cond > 0.0) new_rate += p_x[x] * cond * std::log2(cond / next[z]);
      }
    }
    double change = 0.0;
    for (std::size_t z = 0; z < nz; ++z) change = std::max(change, std::abs(next[z] - q[z]));
    const bool done = std::abs(new_rate - rate) < tol && change < tol;
    q.swap(next);
    rate = new_rate;
    dist = new_dist;
    if (done) return {std::max(rate, 0.0), dist, q, it};
  }
  throw NumericFailure("blahut_arimoto: no convergence within the iteration cap");
}

RateDistortionResult rate_distortion(const Pmf& p_x, const Eigen::MatrixXd& d, double level) {
  check_inputs(p_x, d);
  if (!(level >= 0.0) || std::isinf(level)) {
    throw InvalidArgument("rate_distortion: distortion level must be finite and >= 0");
  }
  const auto nz = static_cast<std::size_t>(d.cols());
  const Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(
      p_x.probs().data(), static_cast<Eigen::Index>(p_x.size()));
  // Least distortion reachable with a constant reproduction.
  Eigen::Index best = 0;
  const double d_zero_rate = (p.transpose() * d).minCoeff(&best);
  if (level >= d_zero_rate) {
    return {0.0, 0.0, Pmf::point_mass(nz, static_cast<std::size_t>(best)), d_zero_rate, 0};
  }
  if (level == 0.0) {
    const SlopePoint sp = blahut_arimoto(p_x, d, kInf, {}, 1e-13);
    if (sp.distortion > 0.0) throw Infeasible("rate_distortion: zero distortion unreachable");
    return {sp.rate, kInf, Pmf(sp.q_xhat, true), 0.0, sp.iterations};
  }
  std::size_t iterations = 0;
  double lo = 0.0, hi = 1.0;
  SlopePoint at_hi = blahut_arimoto(p_x, d, hi, {}, 1e-13);
  iterations += at_hi.iterations;
  while (at_hi.distortion > level) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e4) throw Infeasible("rate_distortion: distortion level unreachable");
    at_hi = blahut_arimoto(p_x, d, hi, at_hi.q_xhat, 1e-13);
    iterations += at_hi.iterations;
  }
  SlopePoint cur = at_hi;
  double lambda = hi;
  for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
    lambda = 0.5 * (lo + hi);
    cur = blahut_arimoto(p_x, d, lambda, cur.q_xhat, 1e-13);
    iterations += cur.iterations;
    if (std::abs(cur.distortion - level) < 1e-14) break;
    (cur.distortion > level ? lo : hi) = lambda;
  }
  return {cur.rate, lambda, Pmf(cur.q_xhat, true), cur.distortion, iterations};
}

double d_tilted_information(std::size_t x, double level, double lambda_star, const Pmf& q_xhat,
                            const Eigen::MatrixXd& d) {
  if (x >= static_cast<std::size_t>(d.rows()) || q_xhat.size() != static_cast<std::size_t>(d.cols())) {
    throw InvalidArgument("d_tilted_information: size mismatch");
  }
  double s = 0.0;
  for (std::size_t z = 0; z < q_xhat.size(); ++z) {
    s += q_xhat[z] * kernel(lambda_star, d(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(z)));
  }
  if (!(s > 0.0)) throw InvalidArgument("d_tilted_information: zero tilted mass");
  const double shift = std::isinf(lambda_star) ? 0.0 : lambda_star * level;
  return -shift - std::log2(s);
}

LossyDispersion lossy_dispersion(const Pmf& p_x, const Eigen::MatrixXd& d, double level) {
  const RateDistortionResult rd = rate_distortion(p_x, d, level);
  double mean = 0.0, second = 0.0;
  for (std::size_t x = 0; x < p_x.size(); ++x) {
    if (p_x[x] <= 0.0) continue;
    const double j = d_tilted_information(x, level, rd.lambda_star, rd.q_xhat_star, d);
    mean += p_x[x] * j;
    second += p_x[x] * j * j;
  }
  return {rd.rate, std::max(0.0, second - mean * mean)};
}

double lossy_second_order(const Pmf& p_x, const Eigen::MatrixXd& d, double level, std::size_t n,
                          double eps) {
  if (n == 0) throw InvalidArgument("lossy_second_order: blocklength must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("lossy_second_order: eps outside (0,1)");
  const LossyDispersion ld = lossy_dispersion(p_x, d, level);
  const double backoff = std::sqrt(ld.dispersion / static_cast<double>(n));
  return ld.rate + (backoff > 0.0 ? backoff * q_inverse(eps) : 0.0);
}

}  // namespace fbl
