#pragma once

#include <Eigen/Dense>
#include <functional>

namespace fbl {

double normal_cdf(double x);
// Complementary CDF, accurate in the upper tail.
double q_function(double x);
// Inverse of q_function on (0,1); +inf at 0 and -inf at 1. Accurate to 1e-12.
double q_inverse(double eps);

// Adaptive Gauss-Kronrod (7/15) on [a, b] with absolute tolerance.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_depth = 40);

// Pr(Z <= z componentwise), Z ~ N(0, cov), k = 1..3. cov may be singular.
// Accuracy about 1e-10 for k <= 2 and 1e-8 for k = 3. Infinite entries of z
// are allowed.
double mvn_lower_orthant(const Eigen::MatrixXd& cov, const Eigen::VectorXd& z);

}  // namespace fbl
