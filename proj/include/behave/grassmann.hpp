#pragma once

#include "behave/common.hpp"
#include "behave/hankel.hpp"
#include "behave/rng.hpp"

#include <cassert>
#include <cstdint>
#include <numbers>
#include <string>

namespace behave {

/// Tolerance on ||U^T U - I||_F accepted for an orthonormal basis.
inline constexpr double kOrthonormalityTolerance = 1e-10;

/// Orthonormal spanning matrix of a behavior: a point on Gr(q, r) together
/// with the block partition of its rows.
template <typename Scalar>
class BehaviorBasis {
 public:
  explicit BehaviorBasis(PartitionedMatrix<Scalar> basis)
      : basis_(std::move(basis)) {
    const auto r = basis_.cols();
    require(r <= basis_.rows(), "basis rank r exceeds the ambient dimension q");
    const Scalar defect =
        (basis_.data().transpose() * basis_.data() -
         Matrix<Scalar>::Identity(r, r))
            .norm();
    require(defect <= Scalar(kOrthonormalityTolerance),
            "basis columns are not orthonormal (||U^T U - I||_F = " +
                std::to_string(static_cast<double>(defect)) + ")");
  }

  BehaviorBasis(Matrix<Scalar> data, BlockDims dims)
      : BehaviorBasis(PartitionedMatrix<Scalar>(std::move(data), dims)) {}

  const PartitionedMatrix<Scalar>& partitioned() const { return basis_; }
  const Matrix<Scalar>& matrix() const { return basis_.data(); }
  const BlockDims& dims() const { return basis_.dims(); }
  Eigen::Index ambient_dim() const { return basis_.rows(); }
  Eigen::Index rank() const { return basis_.cols(); }

 private:
  PartitionedMatrix<Scalar> basis_;
};

/// Principal angles in ascending order with their cosines (descending).
template <typename Scalar>
struct PrincipalAngles {
  Vector<Scalar> cosines;
  Vector<Scalar> sines;
  Vector<Scalar> angles;
};

/// Orthonormalizes the columns of a full-column-rank matrix with a thin QR,
/// fixing signs so that R has a positive diagonal (the result stays close to
/// the input when the input is nearly orthonormal).
template <typename Scalar>
Matrix<Scalar> orthonormalize_columns(const Matrix<Scalar>& a) {
  Eigen::HouseholderQR<Matrix<Scalar>> qr(a);
  Matrix<Scalar> q =
      qr.householderQ() * Matrix<Scalar>::Identity(a.rows(), a.cols());
  const Matrix<Scalar>& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    if (r(j, j) < Scalar(0)) q.col(j) = -q.col(j);
  return q;
}

/// Top-r left singular vectors of X. Rejects r above the numerical rank.
template <typename Scalar>
BehaviorBasis<Scalar> orthonormal_basis(const PartitionedMatrix<Scalar>& x,
                                        Eigen::Index r) {
  require(r >= 1, "basis rank r must be >= 1");
  require(r <= std::min(x.rows(), x.cols()),
          "requested rank r = " + std::to_string(r) +
              " exceeds min(q, columns) = " +
              std::to_string(std::min(x.rows(), x.cols())));
  Eigen::JacobiSVD<Matrix<Scalar>> svd(x.data(), Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const Scalar cutoff = rank_tolerance<Scalar>(x.rows(), x.cols()) * sv(0);
  if (!(sv(r - 1) > cutoff))
    throw RankDeficientError(
        "requested rank r = " + std::to_string(r) +
            " exceeds the numerical rank of the data matrix (sigma_r = " +
            std::to_string(static_cast<double>(sv(r - 1))) + ")",
        static_cast<double>(sv(r - 1)));
  return BehaviorBasis<Scalar>(svd.matrixU().leftCols(r).eval(), x.dims());
}

namespace detail {

template <typename Scalar>
void require_same_grassmannian(const Matrix<Scalar>& u,
                               const Matrix<Scalar>& v) {
  require(u.rows() == v.rows(),
          "subspaces live in different ambient dimensions (" +
              std::to_string(u.rows()) + " vs " + std::to_string(v.rows()) +
              ")");
  require(u.cols() == v.cols(), "subspace ranks differ (" +
                                    std::to_string(u.cols()) + " vs " +
                                    std::to_string(v.cols()) + ")");
}

template <typename Scalar>
PrincipalAngles<Scalar> principal_angles(const Matrix<Scalar>& u,
                                         const Matrix<Scalar>& v) {
  require_same_grassmannian(u, v);
  const auto r = u.cols();
  const Matrix<Scalar> cross = u.transpose() * v;
  Vector<Scalar> cosines = singular_values(cross);
  // Residual of V after projecting onto im U; its singular values are the
  // sines, which stay accurate where arccos of cosines loses digits.
  const Matrix<Scalar> residual = v - u * cross;
  Vector<Scalar> sines = singular_values(residual);

  PrincipalAngles<Scalar> out;
  out.cosines = cosines.array().min(Scalar(1)).max(Scalar(0));
  out.sines.resize(r);
  out.angles.resize(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    // Ascending angles pair with descending sines read from the back.
    const Scalar s = std::clamp(sines(r - 1 - i), Scalar(0), Scalar(1));
    const Scalar c = out.cosines(i);
    out.sines(i) = s;
    out.angles(i) = (c > std::numbers::sqrt2_v<Scalar> / 2) ? std::asin(s)
                                                            : std::acos(c);
  }
  return out;
}

template <typename Scalar>
Scalar chordal_distance(const Matrix<Scalar>& u, const Matrix<Scalar>& v) {
  require_same_grassmannian(u, v);
  // Same representative: skip the round-off of the residual formula.
  if (u == v) return Scalar(0);
  // sqrt(sum sin^2) equals the Frobenius norm of (I - UU^T) V.
  return (v - u * (u.transpose() * v)).norm();
}

}  // namespace detail

template <typename Scalar>
PrincipalAngles<Scalar> principal_angles(const BehaviorBasis<Scalar>& u,
                                         const BehaviorBasis<Scalar>& v) {
  return detail::principal_angles(u.matrix(), v.matrix());
}

/// Chordal distance (sum of squared sines of the principal angles)^(1/2).
template <typename Scalar>
Scalar chordal_distance(const BehaviorBasis<Scalar>& u,
                        const BehaviorBasis<Scalar>& v) {
  const Scalar d = detail::chordal_distance(u.matrix(), v.matrix());
  assert(std::abs(d - (principal_angles(u, v).sines.norm())) <= Scalar(1e-10));
  return d;
}

/// Projector form ||UU^T - VV^T||_F / sqrt(2) of the chordal distance.
template <typename Scalar>
Scalar chordal_distance_projector(const BehaviorBasis<Scalar>& u,
                                  const BehaviorBasis<Scalar>& v) {
  detail::require_same_grassmannian(u.matrix(), v.matrix());
  const Matrix<Scalar> diff = u.matrix() * u.matrix().transpose() -
                              v.matrix() * v.matrix().transpose();
  return diff.norm() / std::numbers::sqrt2_v<Scalar>;
}

/// Rotation R* = Q P^T minimizing ||U - Uhat R||_F over O(r), where
/// U^T Uhat = P cos(Theta) Q^T.
template <typename Scalar>
Matrix<Scalar> procrustes_rotation(const Matrix<Scalar>& u,
                                   const Matrix<Scalar>& uhat) {
  detail::require_same_grassmannian(u, uhat);
  Eigen::JacobiSVD<Matrix<Scalar>> svd(u.transpose() * uhat,
                                       Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixV() * svd.matrixU().transpose();
}

/// Representative of im Uhat closest to U in Frobenius norm.
template <typename Scalar>
BehaviorBasis<Scalar> align_basis(const BehaviorBasis<Scalar>& u,
                                  const BehaviorBasis<Scalar>& uhat) {
  const Matrix<Scalar> rot = procrustes_rotation(u.matrix(), uhat.matrix());
  return BehaviorBasis<Scalar>((uhat.matrix() * rot).eval(), uhat.dims());
}

/// Largest chordal distance from a rank-r subspace of R^q to any other
/// rank-r subspace: at most min(r, q - r) angles can be nonzero.
inline double max_chordal_distance(Eigen::Index q, Eigen::Index r) {
  return std::sqrt(static_cast<double>(std::min(r, q - r)));
}

/// Returns a subspace at chordal distance `kappa` from im U.
///
/// A random tangent direction (columns orthogonal to im U) is drawn from the
/// seed and its thin SVD W S V^T fixes the geodesic
///   U(t) = U V cos(t Theta) V^T + W sin(t Theta) V^T,  Theta = S / S_max,
/// on which the distance grows monotonically for t in [0, pi/2]; t is found by
/// bisection. If the drawn direction cannot reach kappa, all nonzero
/// directions are given equal weight, which reaches sqrt(min(r, q - r)).
template <typename Scalar>
BehaviorBasis<Scalar> perturb_subspace(const BehaviorBasis<Scalar>& u,
                                       Scalar kappa, std::uint64_t seed) {
  const auto q = u.ambient_dim();
  const auto r = u.rank();
  const Scalar reach = Scalar(max_chordal_distance(q, r));
  require(std::isfinite(static_cast<double>(kappa)) && kappa >= Scalar(0),
          "perturbation distance kappa must be finite and nonnegative");
  require(kappa <= reach * Scalar(1 - 1e-6),
          "perturbation distance kappa = " +
              std::to_string(static_cast<double>(kappa)) +
              " exceeds the reachable maximum sqrt(min(r, q - r)) = " +
              std::to_string(static_cast<double>(reach)));
  if (kappa == Scalar(0)) return u;

  const Matrix<Scalar>& base = u.matrix();
  Rng rng(seed);
  const Matrix<Scalar> draw = rng.normal_matrix<Scalar>(q, r);
  const Matrix<Scalar> tangent = draw - base * (base.transpose() * draw);
  Eigen::JacobiSVD<Matrix<Scalar>> svd(tangent,
                                       Eigen::ComputeThinU | Eigen::ComputeFullV);
  const Matrix<Scalar>& w = svd.matrixU();
  const Matrix<Scalar>& v = svd.matrixV();
  const auto& s = svd.singularValues();
  const Scalar cutoff = rank_tolerance<Scalar>(q, r) * s(0);
  Vector<Scalar> theta(r);
  for (Eigen::Index i = 0; i < r; ++i)
    theta(i) = s(i) > cutoff ? s(i) / s(0) : Scalar(0);

  const auto distance_at = [&](Scalar t) {
    Scalar sum = 0;
    for (Eigen::Index i = 0; i < r; ++i) {
      const Scalar st = std::sin(t * theta(i));
      sum += st * st;
    }
    return std::sqrt(sum);
  };
  constexpr Scalar kHalfPi = std::numbers::pi_v<Scalar> / 2;
  if (distance_at(kHalfPi) < kappa)
    for (Eigen::Index i = 0; i < r; ++i)
      theta(i) = theta(i) > Scalar(0) ? Scalar(1) : Scalar(0);

  const Matrix<Scalar> uv = base * v;
  const auto point_at = [&](Scalar t) {
    const Vector<Scalar> angles = t * theta;
    Matrix<Scalar> moved = uv * angles.array().cos().matrix().asDiagonal();
    moved += w * angles.array().sin().matrix().asDiagonal();
    return orthonormalize_columns<Scalar>(moved * v.transpose());
  };

  const Scalar tolerance = Scalar(1e-6) * std::max(Scalar(1), kappa);
  Scalar lo = 0;
  Scalar hi = kHalfPi;
  Matrix<Scalar> best;
  Scalar best_gap = std::numeric_limits<Scalar>::infinity();
  for (int iter = 0; iter < 200; ++iter) {
    const Scalar mid = (lo + hi) / 2;
    Matrix<Scalar> candidate = point_at(mid);
    const Scalar d = detail::chordal_distance(base, candidate);
    const Scalar gap = std::abs(d - kappa);
    if (gap < best_gap) {
      best_gap = gap;
      best = std::move(candidate);
    }
    if (gap <= Scalar(1e-3) * tolerance || hi - lo <= Scalar(4) *
        std::numeric_limits<Scalar>::epsilon())
      break;
    (d < kappa ? lo : hi) = mid;
  }
  if (!(best_gap <= tolerance))
    throw NumericalError("geodesic bisection failed to reach kappa = " +
                         std::to_string(static_cast<double>(kappa)) +
                         " (closest gap " +
                         std::to_string(static_cast<double>(best_gap)) + ")");
  return BehaviorBasis<Scalar>(std::move(best), u.dims());
}

}  // namespace behave
