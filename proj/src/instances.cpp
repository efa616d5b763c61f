#include "fbl/instances.hpp"

#include <cmath>
#include <string>

#include "fbl/error.hpp"

namespace fbl {
namespace {

void check_range(double v, double lo, double hi, const char* what) {
  if (!(v >= lo && v <= hi)) {
    throw InvalidArgument(std::string(what) + " outside [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
  }
}

void check_per_t(std::size_t count, const Pmf& time_share, const char* what) {
  if (count != time_share.size()) {
    throw InvalidArgument(std::string(what) + ": need one channel per time-sharing symbol");
  }
}

}  // namespace

WakInstance::WakInstance(JointPmf p_xy, Pmf time_share, std::vector<Channel> test_channels)
    : p_xy_(std::move(p_xy)),
      time_share_(std::move(time_share)),
      test_channels_(std::move(test_channels)) {
  if (p_xy_.rank() != 2) throw InvalidArgument("WakInstance: p_xy must be rank 2");
  check_per_t(test_channels_.size(), time_share_, "WakInstance");
  for (const Channel& c : test_channels_) {
    if (c.input_size() != y_size() || c.output_size() != u_size()) {
      throw InvalidArgument("WakInstance: test channel must map Y to a common U alphabet");
    }
  }
}

JointPmf WakInstance::joint() const {
  const std::size_t nt = time_share_.size(), nu = u_size(), nx = x_size(), ny = y_size();
  std::vector<double> p(nt * nu * nx * ny);
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t u = 0; u < nu; ++u)
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y)
          p[((t * nu + u) * nx + x) * ny + y] =
              time_share_[t] * p_xy_[x * ny + y] * test_channels_[t](y, u);
  return JointPmf({nt, nu, nx, ny}, std::move(p), true);
}

WzInstance::WzInstance(JointPmf p_xy, Pmf time_share, std::vector<Channel> test_channels,
                       std::vector<Channel> reproduction, Eigen::MatrixXd distortion,
                       double level_d)
    : p_xy_(std::move(p_xy)),
      time_share_(std::move(time_share)),
      test_channels_(std::move(test_channels)),
      reproduction_(std::move(reproduction)),
      distortion_(std::move(distortion)),
      level_d_(level_d) {
  if (p_xy_.rank() != 2) throw InvalidArgument("WzInstance: p_xy must be rank 2");
  check_per_t(test_channels_.size(), time_share_, "WzInstance");
  check_per_t(reproduction_.size(), time_share_, "WzInstance");
  for (const Channel& c : test_channels_) {
    if (c.input_size() != x_size() || c.output_size() != u_size()) {
      throw InvalidArgument("WzInstance: test channel must map X to a common U alphabet");
    }
  }
  for (const Channel& c : reproduction_) {
    if (c.input_size() != u_size() * y_size() || c.output_size() != xhat_size()) {
      throw InvalidArgument("WzInstance: reproduction must map (U,Y) to a common X-hat");
    }
  }
  if (static_cast<std::size_t>(distortion_.rows()) != x_size() ||
      static_cast<std::size_t>(distortion_.cols()) != xhat_size()) {
    throw InvalidArgument("WzInstance: distortion matrix must be |X| x |X-hat|");
  }
  if (!distortion_.allFinite() || distortion_.minCoeff() < 0.0) {
    throw InvalidArgument("WzInstance: distortion must be finite and nonnegative");
  }
  for (Eigen::Index x = 0; x < distortion_.rows(); ++x) {
    if (distortion_.row(x).minCoeff() != 0.0) {
      throw InvalidArgument("WzInstance: every source symbol needs a zero-distortion reproduction");
    }
  }
  if (!std::isfinite(level_d_) || level_d_ < 0.0) {
    throw InvalidArgument("WzInstance: distortion level must be finite and nonnegative");
  }
}

JointPmf WzInstance::joint() const {
  const std::size_t nt = time_share_.size(), nu = u_size(), nx = x_size(), ny = y_size(),
                    nz = xhat_size();
  std::vector<double> p(nt * nu * nx * ny * nz);
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t u = 0; u < nu; ++u)
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y)
          for (std::size_t z = 0; z < nz; ++z)
            p[(((t * nu + u) * nx + x) * ny + y) * nz + z] =
                time_share_[t] * p_xy_[x * ny + y] * test_channels_[t](x, u) *
                reproduction_[t](u * ny + y, z);
  return JointPmf({nt, nu, nx, ny, nz}, std::move(p), true);
}

GpInstance::GpInstance(Pmf p_s, Channel channel_w, Pmf time_share,
                       std::vector<Channel> encoder_channels, std::vector<double> cost,
                       double budget_gamma)
    : p_s_(std::move(p_s)),
      channel_w_(std::move(channel_w)),
      time_share_(std::move(time_share)),
      encoder_channels_(std::move(encoder_channels)),
      cost_(std::move(cost)),
      budget_gamma_(budget_gamma) {
  if (cost_.empty()) throw InvalidArgument("GpInstance: empty input alphabet");
  for (double g : cost_) {
    if (!std::isfinite(g) || g < 0.0) throw InvalidArgument("GpInstance: cost must be >= 0");
  }
  if (channel_w_.input_size() != x_size() * s_size()) {
    throw InvalidArgument("GpInstance: channel input must be the flattened (x, s)");
  }
  check_per_t(encoder_channels_.size(), time_share_, "GpInstance");
  const std::size_t out = encoder_channels_.front().output_size();
  if (out % x_size() != 0) {
    throw InvalidArgument("GpInstance: encoder output must be the flattened (u, x)");
  }
  for (const Channel& c : encoder_channels_) {
    if (c.input_size() != s_size() || c.output_size() != out) {
      throw InvalidArgument("GpInstance: encoder channel must map S to a common (U,X)");
    }
  }
  if (std::isnan(budget_gamma_) || budget_gamma_ < 0.0) {
    throw InvalidArgument("GpInstance: cost budget must be >= 0");
  }
}

JointPmf GpInstance::joint() const {
  const std::size_t nt = time_share_.size(), ns = s_size(), nu = u_size(), nx = x_size(),
                    ny = y_size();
  std::vector<double> p(nt * ns * nu * nx * ny);
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t x = 0; x < nx; ++x)
          for (std::size_t y = 0; y < ny; ++y)
            p[(((t * ns + s) * nu + u) * nx + x) * ny + y] =
                time_share_[t] * p_s_[s] * encoder_channels_[t](s, u * nx + x) *
                channel_w_(x * ns + s, y);
  return JointPmf({nt, ns, nu, nx, ny}, std::move(p), true);
}

ChannelInstance::ChannelInstance(Channel w, Pmf input)
    : channel(std::move(w)), p_x(std::move(input)) {
  if (channel.input_size() != p_x.size()) {
    throw InvalidArgument("ChannelInstance: input law does not match channel input");
  }
}

JointPmf ChannelInstance::joint() const {
  const Factor parts[] = {Factor::root(p_x), Factor::conditional({0}, channel)};
  return compose(parts);
}

JointPmf dsbs(double alpha) {
  check_range(alpha, 0.0, 1.0, "dsbs: alpha");
  const Factor parts[] = {Factor::root(Pmf::uniform(2)),
                          Factor::conditional({0}, Channel::bsc(alpha))};
  // compose yields axes (Y, X); the source is stored as (X, Y). Symmetric.
  return compose(parts);
}

WakInstance dsbs_wak(double alpha, double beta) {
  check_range(alpha, 0.0, 0.5, "dsbs_wak: alpha");
  check_range(beta, 0.0, 0.5, "dsbs_wak: beta");
  return WakInstance(dsbs(alpha), Pmf({1.0}), {Channel::bsc(beta)});
}

WakInstance dsbs_wak_timeshared(double alpha, double beta0, double beta1, double lambda) {
  check_range(alpha, 0.0, 0.5, "dsbs_wak_timeshared: alpha");
  check_range(beta0, 0.0, 0.5, "dsbs_wak_timeshared: beta0");
  check_range(beta1, 0.0, 0.5, "dsbs_wak_timeshared: beta1");
  check_range(lambda, 0.0, 1.0, "dsbs_wak_timeshared: lambda");
  const double w = snap_to_grid(lambda);
  return WakInstance(dsbs(alpha), Pmf({w, 1.0 - w}),
                     {Channel::bsc(beta0), Channel::bsc(beta1)});
}

WakInstance biased_binary_wak(double p, double alpha, double beta) {
  if (!(p > 0.0 && p <= 0.5)) throw InvalidArgument("biased_binary_wak: p outside (0, 1/2]");
  check_range(alpha, 0.0, 0.5, "biased_binary_wak: alpha");
  check_range(beta, 0.0, 0.5, "biased_binary_wak: beta");
  if (beta > p) throw InvalidArgument("biased_binary_wak: beta exceeds p");
  const Pmf p_y = Pmf::binary(p);
  const Channel x_given_y = Channel::bsc(alpha);
  std::vector<double> pxy(4);
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y) pxy[x * 2 + y] = p_y[y] * x_given_y(y, x);
  // P_U solves P_U * BSC(beta) = P_Y; any law works when beta = 1/2.
  const double pu0 = beta < 0.5 ? (p - beta) / (1.0 - 2.0 * beta) : 0.5;
  const double pu[2] = {pu0, 1.0 - pu0};
  const Channel y_given_u = Channel::bsc(beta);
  std::vector<double> fwd(4);
  for (std::size_t y = 0; y < 2; ++y)
    for (std::size_t u = 0; u < 2; ++u) fwd[y * 2 + u] = pu[u] * y_given_u(u, y) / p_y[y];
  return WakInstance(JointPmf({2, 2}, std::move(pxy), true), Pmf({1.0}),
                     {Channel(2, 2, std::move(fwd), true)});
}

WzInstance dsbs_wz(double alpha, double beta, double level_d) {
  check_range(alpha, 0.0, 0.5, "dsbs_wz: alpha");
  check_range(beta, 0.0, 0.5, "dsbs_wz: beta");
  Eigen::MatrixXd hamming(2, 2);
  hamming << 0.0, 1.0, 1.0, 0.0;
  // X-hat = U regardless of Y; reproduction input is u * 2 + y.
  Channel reproduce(4, 2, {1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0});
  return WzInstance(dsbs(alpha), Pmf({1.0}), {Channel::bsc(beta)}, {reproduce}, hamming,
                    level_d);
}

WzInstance lossy_as_wz(const Pmf& p_x, const Eigen::MatrixXd& distortion,
                       const Channel& test_channel, double level_d) {
  const std::size_t nx = p_x.size();
  JointPmf p_xy({nx, 1}, std::vector<double>(p_x.probs().begin(), p_x.probs().end()), true);
  const std::size_t nu = test_channel.output_size();
  return WzInstance(std::move(p_xy), Pmf({1.0}), {test_channel}, {Channel::identity(nu)},
                    distortion, level_d);
}

GpInstance stuck_at_gp(double p, double alpha) {
  check_range(p, 0.0, 1.0, "stuck_at_gp: p");
  check_range(alpha, 0.0, 0.5, "stuck_at_gp: alpha");
  const Pmf p_s({p / 2.0, p / 2.0, 1.0 - p}, true);
  // Input index x * 3 + s.
  std::vector<double> w(6 * 2);
  for (std::size_t x = 0; x < 2; ++x) {
    for (std::size_t s = 0; s < 3; ++s) {
      double* row = w.data() + (x * 3 + s) * 2;
      if (s < 2) {
        row[s] = 1.0;
        row[1 - s] = 0.0;
      } else {
        row[x] = 1.0 - alpha;
        row[1 - x] = alpha;
      }
    }
  }
  // Output index u * 2 + x with X = U.
  Channel encoder(3, 4,
                  {1.0 - alpha, 0.0, 0.0, alpha,
                   alpha, 0.0, 0.0, 1.0 - alpha,
                   0.5, 0.0, 0.0, 0.5});
  return GpInstance(p_s, Channel(6, 2, std::move(w)), Pmf({1.0}), {encoder}, {0.0, 0.0});
}

ChannelInstance stuck_at_decoder_si(double p, double alpha) {
  const GpInstance gp = stuck_at_gp(p, alpha);
  std::vector<double> w(2 * 6);
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t y = 0; y < 2; ++y)
        w[x * 6 + s * 2 + y] = gp.p_s()[s] * gp.channel_w()(x * 3 + s, y);
  return ChannelInstance(Channel(2, 6, std::move(w), true), Pmf::uniform(2));
}

double snap_to_grid(double lambda, int steps) {
  if (steps <= 0) throw InvalidArgument("snap_to_grid: steps must be positive");
  return std::round(lambda * steps) / static_cast<double>(steps);
}

}  // namespace fbl
