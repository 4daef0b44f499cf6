#include "play/frechet.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "play/error.hpp"

namespace play {

namespace {

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

Moments moments(const FeatureSet& s) {
  const int n = s.size();
  const int d = s.dim();
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(s.vectors[i].size()) != d) throw InvalidArgument("ragged feature set '" + s.source + "'");
    for (int j = 0; j < d; ++j) {
      const double v = s.vectors[i][j];
      if (!std::isfinite(v)) throw NumericalError("non-finite feature in '" + s.source + "'");
      x(i, j) = v;
    }
  }
  Moments m;
  m.mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - m.mean.transpose();
  m.cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  return m;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

FrechetResult frechet_distance_checked(const FeatureSet& a, const FeatureSet& b) {
  if (a.size() < 2 || b.size() < 2) throw InvalidArgument("Frechet distance needs at least two vectors per set");
  if (a.dim() != b.dim() || a.dim() == 0) throw InvalidArgument("Frechet distance: dimension mismatch");
  const Moments ma = moments(a);
  const Moments mb = moments(b);
  const Eigen::MatrixXd root_a = psd_sqrt(ma.cov);
  const Eigen::MatrixXd inner = root_a * mb.cov * root_a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  const double tr_sqrt = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double d = (ma.mean - mb.mean).squaredNorm() + ma.cov.trace() + mb.cov.trace() - 2.0 * tr_sqrt;
  if (!std::isfinite(d)) throw NumericalError("Frechet distance is not finite");
  return {std::max(0.0, d), a.size() < a.dim() || b.size() < b.dim()};
}

double frechet_distance(const FeatureSet& a, const FeatureSet& b) { return frechet_distance_checked(a, b).distance; }

}  // namespace play
