#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "fbl/prob.hpp"

namespace fbl {

// Helper-assisted lossless source coding. Test channels map Y to U, one per
// time-sharing symbol; U-(Y,T)-X holds by construction.
class WakInstance {
 public:
  WakInstance(JointPmf p_xy, Pmf time_share, std::vector<Channel> test_channels);

  const JointPmf& p_xy() const { return p_xy_; }
  const Pmf& time_share() const { return time_share_; }
  const std::vector<Channel>& test_channels() const { return test_channels_; }
  std::size_t x_size() const { return p_xy_.dims()[0]; }
  std::size_t y_size() const { return p_xy_.dims()[1]; }
  std::size_t u_size() const { return test_channels_.front().output_size(); }

  // Axes (T, U, X, Y).
  JointPmf joint() const;

 private:
  JointPmf p_xy_;
  Pmf time_share_;
  std::vector<Channel> test_channels_;
};

// Lossy source coding with decoder side information. Test channels map X to
// U; reproduction maps the flattened (u, y) to X-hat.
class WzInstance {
 public:
  WzInstance(JointPmf p_xy, Pmf time_share, std::vector<Channel> test_channels,
             std::vector<Channel> reproduction, Eigen::MatrixXd distortion, double level_d);

  const JointPmf& p_xy() const { return p_xy_; }
  const Pmf& time_share() const { return time_share_; }
  const std::vector<Channel>& test_channels() const { return test_channels_; }
  const std::vector<Channel>& reproduction() const { return reproduction_; }
  const Eigen::MatrixXd& distortion() const { return distortion_; }
  double level_d() const { return level_d_; }
  double d_max() const { return distortion_.maxCoeff(); }
  std::size_t x_size() const { return p_xy_.dims()[0]; }
  std::size_t y_size() const { return p_xy_.dims()[1]; }
  std::size_t u_size() const { return test_channels_.front().output_size(); }
  std::size_t xhat_size() const { return reproduction_.front().output_size(); }

  // Axes (T, U, X, Y, X-hat).
  JointPmf joint() const;

 private:
  JointPmf p_xy_;
  Pmf time_share_;
  std::vector<Channel> test_channels_;
  std::vector<Channel> reproduction_;
  Eigen::MatrixXd distortion_;
  double level_d_;
};

// Channel coding with noncausal encoder state. channel_w takes the flattened
// input x * |S| + s; encoder channels map S to the flattened u * |X| + x.
class GpInstance {
 public:
  GpInstance(Pmf p_s, Channel channel_w, Pmf time_share, std::vector<Channel> encoder_channels,
             std::vector<double> cost,
             double budget_gamma = std::numeric_limits<double>::infinity());

  const Pmf& p_s() const { return p_s_; }
  const Channel& channel_w() const { return channel_w_; }
  const Pmf& time_share() const { return time_share_; }
  const std::vector<Channel>& encoder_channels() const { return encoder_channels_; }
  const std::vector<double>& cost() const { return cost_; }
  double budget_gamma() const { return budget_gamma_; }
  std::size_t s_size() const { return p_s_.size(); }
  std::size_t x_size() const { return cost_.size(); }
  std::size_t y_size() const { return channel_w_.output_size(); }
  std::size_t u_size() const { return encoder_channels_.front().output_size() / x_size(); }

  // Axes (T, S, U, X, Y).
  JointPmf joint() const;

 private:
  Pmf p_s_;
  Channel channel_w_;
  Pmf time_share_;
  std::vector<Channel> encoder_channels_;
  std::vector<double> cost_;
  double budget_gamma_;
};

// Point-to-point channel with a fixed input law.
struct ChannelInstance {
  Channel channel;
  Pmf p_x;

  ChannelInstance(Channel w, Pmf input);
  // Axes (X, Y).
  JointPmf joint() const;
};

JointPmf dsbs(double alpha);

WakInstance dsbs_wak(double alpha, double beta);
WakInstance dsbs_wak_timeshared(double alpha, double beta0, double beta1, double lambda);
WakInstance biased_binary_wak(double p, double alpha, double beta);

// DSBS source, U = X through BSC(beta), X-hat = U, Hamming distortion.
WzInstance dsbs_wz(double alpha, double beta, double level_d);
// Side information absent: |Y| = 1, U = X-hat drawn through `test_channel`.
WzInstance lossy_as_wz(const Pmf& p_x, const Eigen::MatrixXd& distortion,
                       const Channel& test_channel, double level_d);

GpInstance stuck_at_gp(double p, double alpha);
// Input X, output the flattened (s, y) as s * 2 + y; uniform input.
ChannelInstance stuck_at_decoder_si(double p, double alpha);

// Snaps a weight onto the grid {0, 1/steps, ..., 1}.
double snap_to_grid(double lambda, int steps = 1000);

}  // namespace fbl
