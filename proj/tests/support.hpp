#pragma once

// Test-only generators and oracles. Nothing here calls into the code paths
// it is used to check.

#include "behave/common.hpp"
#include "behave/lti.hpp"
#include "behave/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cstdint>

namespace behave::testing {

inline Matrix<double> random_orthogonal(Rng& rng, Eigen::Index k) {
  Eigen::HouseholderQR<Matrix<double>> qr(rng.normal_matrix<double>(k, k));
  return qr.householderQ();
}

/// Random r x r matrix with condition number exactly `cond`.
inline Matrix<double> random_conditioned(Rng& rng, Eigen::Index r, double cond) {
  const Matrix<double> left = random_orthogonal(rng, r);
  const Matrix<double> right = random_orthogonal(rng, r);
  Vector<double> sv(r);
  for (Eigen::Index i = 0; i < r; ++i)
    sv(i) = r == 1 ? 1.0
                   : std::pow(cond, -static_cast<double>(i) /
                                        static_cast<double>(r - 1));
  return left * sv.asDiagonal() * right.transpose();
}

/// Random orthonormal q x r matrix.
inline Matrix<double> random_orthonormal(Rng& rng, Eigen::Index q,
                                         Eigen::Index r) {
  Eigen::HouseholderQR<Matrix<double>> qr(rng.normal_matrix<double>(q, r));
  return qr.householderQ() * Matrix<double>::Identity(q, r);
}

/// Independent rank oracle: smallest singular value of the normalized
/// matrix must exceed `floor` (a conditioning margin, not machine precision).
inline bool well_conditioned_rank(const Matrix<double>& a, Eigen::Index rank,
                                  double floor) {
  Eigen::BDCSVD<Matrix<double>> svd(a);
  const auto& sv = svd.singularValues();
  if (sv.size() < rank || sv(0) == 0.0) return false;
  return sv(rank - 1) / sv(0) > floor;
}

struct ModelShape {
  Eigen::Index n_max = 4;
  Eigen::Index m_max = 2;
  Eigen::Index p_max = 2;
};

/// Stable random model that is controllable and observable with a
/// conditioning margin, so that noise-free data identities hold to ~1e-10.
inline StateSpaceModel<double> random_model(Rng& rng, ModelShape shape = {}) {
  for (;;) {
    const auto n = 1 + static_cast<Eigen::Index>(rng.uniform() * shape.n_max);
    const auto m = 1 + static_cast<Eigen::Index>(rng.uniform() * shape.m_max);
    const auto p = 1 + static_cast<Eigen::Index>(rng.uniform() * shape.p_max);
    Matrix<double> a = rng.normal_matrix<double>(n, n);
    const double radius = Eigen::EigenSolver<Matrix<double>>(a, false)
                              .eigenvalues()
                              .cwiseAbs()
                              .maxCoeff();
    const double target = 0.3 + 0.6 * rng.uniform();
    if (radius > 0) a *= target / radius;
    StateSpaceModel<double> model(a, rng.normal_matrix<double>(n, m),
                                  rng.normal_matrix<double>(p, n),
                                  rng.normal_matrix<double>(p, m));
    Matrix<double> ctrb(n, n * m), obs(n * p, n);
    Matrix<double> ab = model.B(), ca = model.C();
    for (Eigen::Index i = 0; i < n; ++i) {
      ctrb.middleCols(i * m, m) = ab;
      obs.middleRows(i * p, p) = ca;
      ab = a * ab;
      ca = ca * a;
    }
    if (well_conditioned_rank(ctrb, n, 1e-3) &&
        well_conditioned_rank(obs, n, 1e-3))
      return model;
  }
}

/// Model whose (A, C) pair is unobservable: the last state never reaches the
/// output and does not drive the others.
inline StateSpaceModel<double> unobservable_model(Rng& rng, Eigen::Index n,
                                                  Eigen::Index m,
                                                  Eigen::Index p) {
  Matrix<double> a = 0.3 * rng.normal_matrix<double>(n, n);
  a.row(n - 1).setZero();
  a.col(n - 1).setZero();
  a(n - 1, n - 1) = 0.5;
  Matrix<double> c = rng.normal_matrix<double>(p, n);
  c.col(n - 1).setZero();
  return {a, rng.normal_matrix<double>(n, m), c, rng.normal_matrix<double>(p, m)};
}

/// Orthonormal basis of the column space of a full-column-rank matrix via
/// Householder QR (independent of the SVD route in the library).
inline Matrix<double> qr_basis(const Matrix<double>& a) {
  Eigen::HouseholderQR<Matrix<double>> qr(a);
  return qr.householderQ() * Matrix<double>::Identity(a.rows(), a.cols());
}

/// Chordal distance from the projector formula on QR-derived bases.
inline double projector_distance(const Matrix<double>& a, const Matrix<double>& b) {
  const Matrix<double> qa = qr_basis(a);
  const Matrix<double> qb = qr_basis(b);
  return (qa * qa.transpose() - qb * qb.transpose()).norm() / std::sqrt(2.0);
}

}  // namespace behave::testing
