#pragma once

#include <array>
#include <vector>

#include "d2h/trace.hpp"

namespace d2h {

struct Projection2D {
  /// One (pc1, pc2) pair per token.
  std::vector<std::array<double, 2>> points;
  /// Top two eigenvalues of the sample covariance (1 / (T - 1) normalization),
  /// descending. Missing components (d == 1 or T == 1) are 0.
  std::array<double, 2> eigenvalues{0.0, 0.0};
  /// Unit principal directions; the largest-magnitude entry of each is positive.
  std::array<std::vector<double>, 2> components;
};

/// Projects the centered token rows onto the top two principal components.
/// Uses the d x d covariance when T >= d and the T x T Gram matrix otherwise.
Projection2D pca_2d(const Matrix& tokens);

}  // namespace d2h
