#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fbl/density.hpp"
#include "fbl/instances.hpp"

namespace fbl {

struct DispersionStats {
  std::size_t dim = 0;
  Eigen::VectorXd j_mean;
  // Time-share average of conditional covariances.
  Eigen::MatrixXd v_matrix;
  // E |atom - j_mean|^3 under the marginal atom law.
  double xi = 0.0;
};

// Eigenvalues above 1e-10 * trace count toward the rank.
std::size_t numerical_rank(const Eigen::MatrixXd& v);

DispersionStats dispersion_stats(const AtomDistribution& atoms);
DispersionStats dispersion_stats(const std::vector<ConditionalAtoms>& parts);

DispersionStats dispersion_stats(const WakInstance& inst, DensityKind kind = DensityKind::kWak);
DispersionStats dispersion_stats(const WzInstance& inst);
DispersionStats dispersion_stats(const GpInstance& inst);
DispersionStats dispersion_stats(const ChannelInstance& inst);

// Keeps the listed coordinates; xi is carried over unchanged.
DispersionStats restrict_stats(const DispersionStats& stats, const std::vector<int>& coords);

}  // namespace fbl
