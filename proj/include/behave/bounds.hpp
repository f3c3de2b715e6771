#pragma once

#include "behave/common.hpp"
#include "behave/hankel.hpp"
#include "behave/predictor.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace behave {

/// Golden-ratio constant (1 + sqrt 5) / 2 of the pseudoinverse perturbation
/// bound for the spectral norm.
template <typename Scalar>
inline constexpr Scalar kPinvPerturbationConstant =
    (Scalar(1) + Scalar(2.23606797749978969640917366873127623544L)) / 2;

/// gamma = min(1, beta) / alpha, the guaranteed lower bound on sigma_min(M)
/// for an orthonormal basis of the true behavior.
template <typename Scalar>
Scalar gamma(Scalar alpha, Scalar beta) {
  require(alpha > Scalar(0) && std::isfinite(static_cast<double>(alpha)),
          "alpha must be positive and finite");
  require(beta > Scalar(0) && std::isfinite(static_cast<double>(beta)),
          "beta must be positive and finite");
  return std::min(Scalar(1), beta) / alpha;
}

template <typename Scalar>
struct BoundInputs {
  Scalar alpha = 1;
  Scalar beta = 1;
  Scalar gamma = 1;
  Scalar kappa = 0;
  Scalar b_norm = 0;

  static BoundInputs from_constants(Scalar alpha, Scalar beta, Scalar kappa,
                                    Scalar b_norm) {
    return {alpha, beta, behave::gamma(alpha, beta), kappa, b_norm};
  }
};

/// Largest kappa for which the representation-free bound is certified.
template <typename Scalar>
Scalar lipschitz_radius(Scalar gamma_value) {
  return gamma_value / (2 * std::numbers::sqrt2_v<Scalar>);
}

/// (2(1+sqrt5)/gamma^2 + 1/gamma) sqrt2 kappa ||b||, valid for
/// kappa <= gamma / (2 sqrt2).
template <typename Scalar>
Scalar lipschitz_bound(const BoundInputs<Scalar>& in) {
  require(in.gamma > Scalar(0) && std::isfinite(static_cast<double>(in.gamma)),
          "gamma must be positive and finite");
  require(in.kappa >= Scalar(0) && in.b_norm >= Scalar(0),
          "kappa and ||b|| must be nonnegative");
  const Scalar radius = lipschitz_radius(in.gamma);
  if (in.kappa > radius)
    throw HypothesisViolation(
        "bound hypothesis violated: kappa = " +
        std::to_string(static_cast<double>(in.kappa)) +
        " > gamma/(2 sqrt2) = " + std::to_string(static_cast<double>(radius)));
  const Scalar g = in.gamma;
  const Scalar coeff = 4 * kPinvPerturbationConstant<Scalar> / (g * g) + 1 / g;
  return coeff * std::numbers::sqrt2_v<Scalar> * in.kappa * in.b_norm;
}

/// One-step bound
///   (2(1+sqrt5)||Uhat_yf^(1)||/smin^2 + 1/smin) sqrt2 kappa ||b||,
/// with smin = sigma_min(Mhat), valid for kappa <= smin / (2 sqrt2).
template <typename Scalar>
Scalar one_step_bound(Scalar sigma_min_mhat, Scalar norm_uyf1, Scalar kappa,
                      Scalar b_norm) {
  require(sigma_min_mhat > Scalar(0) &&
              std::isfinite(static_cast<double>(sigma_min_mhat)),
          "sigma_min(Mhat) must be positive and finite");
  require(norm_uyf1 >= Scalar(0) && kappa >= Scalar(0) && b_norm >= Scalar(0),
          "||Uhat_yf^(1)||, kappa and ||b|| must be nonnegative");
  const Scalar radius = lipschitz_radius(sigma_min_mhat);
  if (kappa > radius)
    throw HypothesisViolation(
        "bound hypothesis violated: kappa = " +
        std::to_string(static_cast<double>(kappa)) +
        " > sigma_min(Mhat)/(2 sqrt2) = " +
        std::to_string(static_cast<double>(radius)));
  const Scalar s = sigma_min_mhat;
  const Scalar coeff =
      4 * kPinvPerturbationConstant<Scalar> * norm_uyf1 / (s * s) + 1 / s;
  return coeff * std::numbers::sqrt2_v<Scalar> * kappa * b_norm;
}

/// Computable quantities the one-step bound needs from a perturbed basis:
/// sigma_min of its regressor block and the spectral norm of the first p rows
/// of its future-output block. Both are invariant under re-basing.
template <typename Scalar>
struct OneStepFactors {
  Scalar sigma_min_regressor = 0;
  Scalar norm_first_future_output = 0;
};

template <typename Scalar>
OneStepFactors<Scalar> one_step_factors(const BehaviorBasis<Scalar>& uhat) {
  const auto& x = uhat.partitioned();
  return {sigma_min(x.regressor()), norm2(x.yf().topRows(x.dims().p))};
}

/// ||Mhat^+ - M^+||_2 <= (1+sqrt5)/2 max(||Mhat^+||^2, ||M^+||^2) ||Mhat - M||_2.
/// Returns the right-hand side.
template <typename Scalar>
Scalar pinv_perturbation_bound(const Matrix<Scalar>& mhat,
                               const Matrix<Scalar>& m) {
  require(mhat.rows() == m.rows() && mhat.cols() == m.cols(),
          "pseudoinverse perturbation bound needs equally shaped matrices");
  const Scalar smin_hat = sigma_min(mhat);
  const Scalar smin = sigma_min(m);
  if (!has_full_column_rank(mhat) || !has_full_column_rank(m))
    throw RankDeficientError(
        "pseudoinverse perturbation bound needs full column rank matrices",
        static_cast<double>(std::min(smin_hat, smin)));
  const Scalar inv_hat = 1 / smin_hat;
  const Scalar inv = 1 / smin;
  const Scalar worst = std::max(inv_hat * inv_hat, inv * inv);
  return kPinvPerturbationConstant<Scalar> * worst * norm2(mhat - m);
}

/// Weyl's inequality for the smallest singular value.
template <typename Scalar>
bool weyl_check(const Matrix<Scalar>& mhat, const Matrix<Scalar>& m) {
  require(mhat.rows() == m.rows() && mhat.cols() == m.cols(),
          "Weyl check needs equally shaped matrices");
  const Scalar gap = std::abs(sigma_min(mhat) - sigma_min(m));
  return gap <= norm2(mhat - m) + Scalar(1e-10);
}

/// Which side carries the outer factor in the split
///   Shat - S = A (Mhat^+ - M^+) b + (Hhat_yf - H_yf) B b.
enum class ErrorSplit {
  kPerturbedOuter,  // A = Hhat_yf, B = M^+
  kNominalOuter,    // A = H_yf,    B = Mhat^+
};

template <typename Scalar>
struct FirstErrorBound {
  Scalar value = 0;   // with ||Hhat - H||_F
  Scalar middle = 0;  // with ||Hhat_yf - H_yf||_F
  ErrorSplit split = ErrorSplit::kPerturbedOuter;
};

/// Matrix-norm bound on ||S(Hhat, b) - S(H, b)|| in terms of the two data
/// matrices themselves (representation dependent).
template <typename Scalar>
FirstErrorBound<Scalar> first_error_bound(
    const PartitionedMatrix<Scalar>& hhat, const PartitionedMatrix<Scalar>& h,
    Scalar b_norm, ErrorSplit split = ErrorSplit::kPerturbedOuter) {
  require(hhat.dims() == h.dims() && hhat.cols() == h.cols(),
          "first error bound needs equally shaped data matrices");
  require(b_norm >= Scalar(0), "||b|| must be nonnegative");
  const Matrix<Scalar> mhat = hhat.regressor();
  const Matrix<Scalar> m = h.regressor();
  if (!has_full_column_rank(mhat) || !has_full_column_rank(m))
    throw RankDeficientError(
        "first error bound needs full column rank regressor blocks",
        static_cast<double>(std::min(sigma_min(mhat), sigma_min(m))));
  const Matrix<Scalar> pinv_hat = pseudoinverse(mhat);
  const Matrix<Scalar> pinv = pseudoinverse(m);
  const Scalar pinv_gap = norm2(pinv_hat - pinv);

  const bool perturbed = split == ErrorSplit::kPerturbedOuter;
  const Scalar outer = perturbed ? norm2(hhat.yf()) : norm2(h.yf());
  const Scalar inner = perturbed ? norm2(pinv) : norm2(pinv_hat);
  const Scalar yf_gap = (hhat.yf() - h.yf()).norm();
  const Scalar full_gap = (hhat.data() - h.data()).norm();

  FirstErrorBound<Scalar> out;
  out.split = split;
  out.middle = (outer * pinv_gap + yf_gap * inner) * b_norm;
  out.value = (outer * pinv_gap + full_gap * inner) * b_norm;
  return out;
}

}  // namespace behave
