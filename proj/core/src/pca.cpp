#include "d2h/pca.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace d2h {
namespace {

void fix_sign(Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  if (v[best] < 0.0) v = -v;
}

}  // namespace

Projection2D pca_2d(const Matrix& tokens) {
  const auto T = static_cast<Eigen::Index>(tokens.rows());
  const auto d = static_cast<Eigen::Index>(tokens.cols());
  if (T < 1 || d < 1) throw std::invalid_argument("pca_2d: empty matrix");

  Eigen::MatrixXd X(T, d);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index k = 0; k < d; ++k) X(t, k) = tokens(t, k);
  }
  X.rowwise() -= X.colwise().mean();
  const double denom = T > 1 ? static_cast<double>(T - 1) : 1.0;

  Projection2D out;
  out.points.assign(static_cast<std::size_t>(T), {0.0, 0.0});
  const Eigen::Index n_comp = std::min<Eigen::Index>(2, d);

  // Eigen returns ascending eigenvalues.
  std::array<Eigen::VectorXd, 2> dirs;
  std::array<bool, 2> degenerate{false, false};
  if (T >= d) {
    const Eigen::MatrixXd cov = (X.transpose() * X) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw std::runtime_error("pca_2d: eigendecomposition failed");
    for (Eigen::Index c = 0; c < n_comp; ++c) {
      out.eigenvalues[c] = std::max(0.0, es.eigenvalues()[d - 1 - c]);
      dirs[c] = es.eigenvectors().col(d - 1 - c);
    }
  } else {
    // Nonzero spectrum of X^T X equals that of X X^T; v = X^T u / |X^T u|.
    const Eigen::MatrixXd gram = (X * X.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success) throw std::runtime_error("pca_2d: eigendecomposition failed");
    for (Eigen::Index c = 0; c < n_comp; ++c) {
      const double lambda = std::max(0.0, es.eigenvalues()[T - 1 - c]);
      Eigen::VectorXd v = X.transpose() * es.eigenvectors().col(T - 1 - c);
      const double norm = v.norm();
      if (lambda <= 0.0 || norm == 0.0) {
        // degenerate direction: carries no variance, any unit vector works
        v = Eigen::VectorXd::Zero(d);
        v[c] = 1.0;
        out.eigenvalues[c] = 0.0;
        degenerate[c] = true;
      } else {
        v /= norm;
        out.eigenvalues[c] = lambda;
      }
      dirs[c] = v;
    }
  }

  for (Eigen::Index c = 0; c < n_comp; ++c) {
    fix_sign(dirs[c]);
    if (!degenerate[c]) {
      const Eigen::VectorXd proj = X * dirs[c];
      for (Eigen::Index t = 0; t < T; ++t) out.points[t][c] = proj[t];
    }
    out.components[c].assign(dirs[c].data(), dirs[c].data() + d);
  }
  return out;
}

}  // namespace d2h
