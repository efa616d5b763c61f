#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fbl/prob.hpp"

namespace fbl {

struct RateDistortionResult {
  double rate;
  // -dR/dD in bits per distortion unit; 0 on the R = 0 branch, +inf at D = 0.
  double lambda_star;
  Pmf q_xhat_star;
  double distortion;
  std::size_t iterations;
};

// Blahut-Arimoto fixed point at slope lambda (bits per distortion unit).
struct SlopePoint {
  double rate;
  double distortion;
  std::vector<double> q_xhat;
  std::size_t iterations;
};
SlopePoint blahut_arimoto(const Pmf& p_x, const Eigen::MatrixXd& distortion, double lambda,
                          std::vector<double> q_start = {}, double tol = 1e-10,
                          std::size_t max_iterations = 100000);

RateDistortionResult rate_distortion(const Pmf& p_x, const Eigen::MatrixXd& distortion,
                                     double level);

double d_tilted_information(std::size_t x, double level, double lambda_star, const Pmf& q_xhat,
                            const Eigen::MatrixXd& distortion);

struct LossyDispersion {
  double rate;
  double dispersion;
};
LossyDispersion lossy_dispersion(const Pmf& p_x, const Eigen::MatrixXd& distortion, double level);

double lossy_second_order(const Pmf& p_x, const Eigen::MatrixXd& distortion, double level,
                          std::size_t n, double eps);

}  // namespace fbl
