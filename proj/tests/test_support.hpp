#pragma once

#include "strategio/geometry.hpp"
#include "strategio/panel_model.hpp"
#include "strategio/rewards.hpp"
#include "strategio/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace testing {

using strategio::Matrix;
using strategio::Vector;

inline Matrix random_matrix(strategio::Rng& rng, int rows, int cols, double scale = 1.0) {
  Matrix M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = scale * rng.normal();
  return M;
}

inline Vector random_vector(strategio::Rng& rng, int n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale).col(0);
}

struct World {
  strategio::LatentFactorSpec spec;
  strategio::UnitFactors V;
};

// Random latent-factor world whose expected outcomes stay within 0.9.
inline World random_world(strategio::Rng& rng, int s, int T0, int T, int k, int m, double sigma = 0.0) {
  World w;
  w.spec.s = s;
  w.spec.T0 = T0;
  w.spec.T = T;
  w.spec.k = k;
  w.spec.sigma = sigma;
  const Matrix base = random_matrix(rng, T, s);
  for (int d = 0; d < k; ++d) {
    Matrix U = random_matrix(rng, T, s);
    U.topRows(T0) = base.topRows(T0);
    w.spec.factors.push_back(U);
  }
  w.V = random_matrix(rng, m, s);
  double peak = 0.0;
  for (const auto& U : w.spec.factors) peak = std::max(peak, (w.V * U.transpose()).cwiseAbs().maxCoeff());
  w.V *= 0.9 / peak;
  return w;
}

inline strategio::BetaSet true_betas(const strategio::LatentFactorSpec& spec, const Vector& omega) {
  std::vector<Matrix> post;
  for (int d = 0; d < spec.k; ++d) post.push_back(spec.post_factors(d));
  return strategio::reformulate_beta(spec.pre_factors(), post, omega);
}

// Orthonormal basis of the column space by modified Gram-Schmidt.
inline Matrix gram_schmidt(const Matrix& A, double tol = 1e-10) {
  std::vector<Vector> basis;
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  for (int j = 0; j < A.cols(); ++j) {
    Vector v = A.col(j);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) v -= q.dot(v) * q;
    if (v.norm() > tol * scale) basis.push_back(v / v.norm());
  }
  Matrix Q(A.rows(), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) Q.col(static_cast<Eigen::Index>(j)) = basis[j];
  return Q;
}

inline Vector project_onto_columns(const Matrix& A, const Vector& x) {
  const Matrix Q = gram_schmidt(A);
  return Q * (Q.transpose() * x);
}

// Brute-force distance from y to a closed 2-D region, scanning the lattice
// hZ^2 (which contains the origin) over the square of half-width `radius`
// centred at y.
inline double grid_distance_2d(const Vector& y, const strategio::Region& region, double radius, double h = 1e-3) {
  double best = std::numeric_limits<double>::infinity();
  const long i0 = static_cast<long>(std::floor((y(0) - radius) / h)), i1 = static_cast<long>(std::ceil((y(0) + radius) / h));
  const long j0 = static_cast<long>(std::floor((y(1) - radius) / h)), j1 = static_cast<long>(std::ceil((y(1) + radius) / h));
  Vector z(2);
  for (long i = i0; i <= i1; ++i) {
    z(0) = static_cast<double>(i) * h;
    for (long j = j0; j <= j1; ++j) {
      z(1) = static_cast<double>(j) * h;
      bool inside = true;
      for (const auto& hs : region.halfspaces)
        if (hs.a.dot(z) < hs.b) {
          inside = false;
          break;
        }
      if (inside) best = std::min(best, (z - y).norm());
    }
  }
  return best;
}

}  // namespace testing
