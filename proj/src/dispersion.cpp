#include "fbl/dispersion.hpp"

#include "fbl/error.hpp"

namespace fbl {
namespace {

Eigen::MatrixXd to_matrix(const std::vector<double>& flat, std::size_t k) {
  const auto n = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd m = Eigen::Map<const Eigen::MatrixXd>(flat.data(), n, n);
  return 0.5 * (m + m.transpose());
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::size_t numerical_rank(const Eigen::MatrixXd& v) {
  const double trace = v.trace();
  if (!(trace > 0.0)) return 0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (v + v.transpose()),
                                                     Eigen::EigenvaluesOnly);
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    if (eig.eigenvalues()(i) > 1e-10 * trace) ++r;
  }
  return r;
}

DispersionStats dispersion_stats(const AtomDistribution& atoms) {
  return {atoms.dim(), to_vector(atoms.mean()), to_matrix(atoms.covariance(), atoms.dim()),
          atoms.third_abs_moment()};
}

DispersionStats dispersion_stats(const std::vector<ConditionalAtoms>& parts) {
  if (parts.empty()) throw InvalidArgument("dispersion_stats: no time-sharing components");
  const std::size_t k = parts.front().atoms.dim();
  const auto ki = static_cast<Eigen::Index>(k);
  DispersionStats s{k, Eigen::VectorXd::Zero(ki), Eigen::MatrixXd::Zero(ki, ki), 0.0};
  double total = 0.0;
  for (const ConditionalAtoms& p : parts) {
    if (p.atoms.dim() != k) throw InvalidArgument("dispersion_stats: dimension mismatch");
    s.j_mean += p.weight * to_vector(p.atoms.mean());
    s.v_matrix += p.weight * to_matrix(p.atoms.covariance(), k);
    total += p.weight;
  }
  s.j_mean /= total;
  s.v_matrix /= total;
  for (const ConditionalAtoms& p : parts) {
    for (std::size_t a = 0; a < p.atoms.size(); ++a) {
      auto v = p.atoms.value(a);
      double sq = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double d = v[i] - s.j_mean(static_cast<Eigen::Index>(i));
        sq += d * d;
      }
      s.xi += p.weight / total * p.atoms.prob(a) * sq * std::sqrt(sq);
    }
  }
  return s;
}

DispersionStats dispersion_stats(const WakInstance& inst, DensityKind kind) {
  return dispersion_stats(atoms_by_time_share(inst, kind));
}

DispersionStats dispersion_stats(const WzInstance& inst) {
  return dispersion_stats(atoms_by_time_share(inst));
}

DispersionStats dispersion_stats(const GpInstance& inst) {
  return dispersion_stats(atoms_by_time_share(inst));
}

DispersionStats dispersion_stats(const ChannelInstance& inst) {
  return dispersion_stats(per_letter_atoms(inst));
}

DispersionStats restrict_stats(const DispersionStats& stats, const std::vector<int>& coords) {
  const auto k = static_cast<Eigen::Index>(coords.size());
  DispersionStats out{coords.size(), Eigen::VectorXd(k), Eigen::MatrixXd(k, k), stats.xi};
  for (Eigen::Index i = 0; i < k; ++i) {
    if (coords[i] < 0 || coords[i] >= stats.j_mean.size()) {
      throw InvalidArgument("restrict_stats: coordinate out of range");
    }
    out.j_mean(i) = stats.j_mean(coords[i]);
    for (Eigen::Index j = 0; j < k; ++j) out.v_matrix(i, j) = stats.v_matrix(coords[i], coords[j]);
  }
  return out;
}

}  // namespace fbl
