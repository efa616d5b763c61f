#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fbl/dispersion.hpp"
#include "fbl/instances.hpp"

namespace fbl {

// Slack on the orthant comparison in membership probes.
inline constexpr double kMembershipSlack = 1e-9;

// Orthant probability of z is at least 1 - eps (k = 1..3).
bool s_set_membership(const Eigen::MatrixXd& v, double eps, const Eigen::VectorXd& z);

// k = 1: the boundary point of S(variance, eps), found by bisection.
double s_set_boundary(double variance, double eps);

// k = 2: least z2 with (z1, z2) in S for each z1; +inf where none exists.
std::vector<double> s_set_boundary(const Eigen::MatrixXd& v, double eps,
                                   std::span<const double> z1_grid, double tol = 1e-12);

// Least z2 with (z1, z2, fixed...) in S where `v` is 2x2 or 3x3 and, for 3x3,
// the third coordinate is held at z3. Returns +inf when none exists.
double s_set_min_second(const Eigen::MatrixXd& v, double eps, double z1, double z3 = 0.0,
                        double tol = 1e-12);

// Least z1 + z2 over S for a 2x2 v, or over the z3 slice for a 3x3 v.
// Throws Infeasible when the slice is empty.
double s_set_min_sum(const Eigen::MatrixXd& v, double eps, double z3 = 0.0, double tol = 1e-10);

// 2 log2(n) / n, or zero when dropped.
double log_term(std::size_t n, bool drop);

struct RegionCurve {
  std::vector<std::pair<double, double>> points;
  std::string first_name;
  std::string second_name;
  std::size_t n = 0;
  double eps = 0.0;
  std::string instance_id;
  std::string construction;
};

struct RegionOptions {
  bool drop_logterm = false;
  std::size_t points = 201;
  double tol = 1e-10;
};

enum class WakVariant { kCs, kModified, kVerduSplit, kCorner };

// Least R2 at rate R1 for J + (S + [rho, -rho]) / sqrt(n) + c. +inf when none.
double wak_min_r2(const DispersionStats& stats, std::size_t n, double eps, double r1,
                  double rho, bool drop_logterm, double tol = 1e-10);

// Least R2 at R1 for the corner construction with stats over
// [-log P(x|y), -log P(x,y)].
double wak_corner_min_r2(const DispersionStats& stats, std::size_t n, double eps, double r1,
                         bool drop_logterm, double tol = 1e-10);

// Least R2 over the union of the family's regions at each R1. rho_grid
// applies to every member; {0} gives the plain construction.
std::vector<double> wak_union_envelope(const std::vector<DispersionStats>& family,
                                       std::size_t n, double eps,
                                       std::span<const double> r1_grid,
                                       std::span<const double> rho_grid, bool drop_logterm,
                                       double tol = 1e-10);

// Corner points of the split construction; the region is the union of their
// upper-right quadrants.
std::vector<std::pair<double, double>> wak_verdu_split_points(const DispersionStats& stats,
                                                              std::size_t n, double eps,
                                                              std::span<const double> lambdas,
                                                              bool drop_logterm);

// Region for one instance. `grid` is the rho grid for kModified and the
// lambda grid for kVerduSplit; ignored otherwise.
RegionCurve wak_region(const WakInstance& inst, std::size_t n, double eps, WakVariant variant,
                       std::span<const double> grid, const RegionOptions& options);

// Boundary of a family union on an automatic R1 grid.
RegionCurve wak_region_union(const std::vector<DispersionStats>& family, std::size_t n,
                             double eps, std::span<const double> rho_grid,
                             const RegionOptions& options);

// Least rate at distortion level d; 3-D stats over [-i(U;Y), i(U;X), d].
double wz_rate(const DispersionStats& stats, std::size_t n, double eps, double d,
               bool drop_logterm = false);
double wz_rate(const WzInstance& inst, std::size_t n, double eps, double d,
               bool drop_logterm = false);
// (R, D) pairs from a scan over the distortion slack.
RegionCurve wz_region(const WzInstance& inst, std::size_t n, double eps,
                      const RegionOptions& options);

// No-cost rate from the first two coordinates of the GP stats.
double gp_rate(const DispersionStats& stats, std::size_t n, double eps, bool drop_logterm = false);
double gp_rate(const GpInstance& inst, std::size_t n, double eps, bool drop_logterm = false);
// Largest rate at cost budget gamma (3-D stats).
double gp_rate_at_cost(const DispersionStats& stats, std::size_t n, double eps, double gamma,
                       bool drop_logterm = false);
// (R, Gamma) pairs from a scan over the cost slack.
RegionCurve gp_region(const GpInstance& inst, std::size_t n, double eps,
                      const RegionOptions& options);

double lossless_rate(const Pmf& p_x, std::size_t n, double eps, bool drop_logterm = false);
double channel_rate(const Channel& w, const Pmf& p_x, std::size_t n, double eps,
                    bool drop_logterm = false);

}  // namespace fbl
