#pragma once

#include "behave/common.hpp"
#include "behave/grassmann.hpp"
#include "behave/hankel.hpp"
#include "behave/lti.hpp"

#include <optional>
#include <string>
#include <vector>

namespace behave {

/// Context b = (u_ini, u, y_ini) fed to the predictor.
template <typename Scalar>
class PredictionContext {
 public:
  PredictionContext(Vector<Scalar> u_ini, Vector<Scalar> u_future,
                    Vector<Scalar> y_ini, BlockDims dims)
      : u_ini_(std::move(u_ini)),
        u_future_(std::move(u_future)),
        y_ini_(std::move(y_ini)),
        dims_(dims) {
    dims_.validate();
    require(u_ini_.size() == dims_.m * dims_.t_ini,
            "u_ini has length " + std::to_string(u_ini_.size()) +
                ", expected m*Tini = " + std::to_string(dims_.m * dims_.t_ini));
    require(u_future_.size() == dims_.m * dims_.t_f,
            "future input has length " + std::to_string(u_future_.size()) +
                ", expected m*Tf = " + std::to_string(dims_.m * dims_.t_f));
    require(y_ini_.size() == dims_.p * dims_.t_ini,
            "y_ini has length " + std::to_string(y_ini_.size()) +
                ", expected p*Tini = " + std::to_string(dims_.p * dims_.t_ini));
  }

  /// Splits a stacked vector ordered (u_ini, u, y_ini).
  static PredictionContext from_stacked(const Vector<Scalar>& b,
                                        BlockDims dims) {
    dims.validate();
    require(b.size() == dims.context_rows(),
            "context vector has length " + std::to_string(b.size()) +
                ", expected m(Tini+Tf)+p*Tini = " +
                std::to_string(dims.context_rows()));
    const auto mi = dims.m * dims.t_ini;
    const auto mf = dims.m * dims.t_f;
    return {b.head(mi), b.segment(mi, mf), b.tail(dims.p * dims.t_ini), dims};
  }

  const Vector<Scalar>& u_ini() const { return u_ini_; }
  const Vector<Scalar>& u_future() const { return u_future_; }
  const Vector<Scalar>& y_ini() const { return y_ini_; }
  const BlockDims& dims() const { return dims_; }

  Vector<Scalar> stacked() const {
    Vector<Scalar> b(dims_.context_rows());
    b << u_ini_, u_future_, y_ini_;
    return b;
  }

 private:
  Vector<Scalar> u_ini_;
  Vector<Scalar> u_future_;
  Vector<Scalar> y_ini_;
  BlockDims dims_;
};

/// Predicted future outputs (length p Tf, time-major) with diagnostics about
/// the regressor block that produced them.
template <typename Scalar>
struct Prediction {
  Vector<Scalar> y_pred;
  Eigen::Index p = 1;
  Scalar sigma_min_regressor = 0;
  Eigen::Index effective_rank = 0;
};

/// Default relative cutoff for the pseudoinverse: max(rows, cols) * eps.
template <typename Scalar>
Scalar default_pinv_tolerance(Eigen::Index rows, Eigen::Index cols) {
  return rank_tolerance<Scalar>(rows, cols);
}

/// Moore-Penrose inverse via SVD; singular values at or below tol * sigma_max
/// are treated as zero.
template <typename Derived>
Matrix<typename Derived::Scalar> pseudoinverse(
    const Eigen::MatrixBase<Derived>& a,
    std::optional<typename Derived::Scalar> tol = std::nullopt) {
  using Scalar = typename Derived::Scalar;
  if (a.size() == 0) return Matrix<Scalar>::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<Matrix<Scalar>> svd(a.eval(), Eigen::ComputeThinU |
                                                     Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const Scalar rel = tol.value_or(default_pinv_tolerance<Scalar>(a.rows(), a.cols()));
  const Scalar cutoff = rel * sv(0);
  Vector<Scalar> inv = Vector<Scalar>::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) inv(i) = Scalar(1) / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// S(X, b) = X_yf [X_up; X_uf; X_yp]^+ b for an arbitrary spanning matrix X.
template <typename Scalar>
Prediction<Scalar> subspace_predict(
    const PartitionedMatrix<Scalar>& x, const PredictionContext<Scalar>& ctx,
    std::optional<Scalar> tol = std::nullopt) {
  require(x.dims() == ctx.dims(),
          "data matrix and context disagree on (m, p, Tini, Tf)");
  const Matrix<Scalar> regressor = x.regressor();
  Eigen::JacobiSVD<Matrix<Scalar>> svd(regressor, Eigen::ComputeThinU |
                                                      Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const Scalar rel = tol.value_or(
      default_pinv_tolerance<Scalar>(regressor.rows(), regressor.cols()));
  const Scalar cutoff = rel * sv(0);

  Prediction<Scalar> out;
  out.p = x.dims().p;
  // Coordinates g = M^+ b, accumulated one retained singular triplet at a time.
  Vector<Scalar> ub = svd.matrixU().transpose() * ctx.stacked();
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) {
      ub(i) /= sv(i);
      ++out.effective_rank;
    } else {
      ub(i) = Scalar(0);
    }
  }
  out.y_pred = x.yf() * (svd.matrixV() * ub);
  out.sigma_min_regressor = regressor.rows() < regressor.cols()
                                ? Scalar(0)
                                : sv(sv.size() - 1);
  return out;
}

/// Predictor on the Grassmannian: requires the regressor block of U to have
/// full column rank, which is the well-posedness condition for S being a
/// function of im U alone.
template <typename Scalar>
Prediction<Scalar> predict_from_subspace(const BehaviorBasis<Scalar>& u,
                                         const PredictionContext<Scalar>& ctx) {
  const auto reg = u.partitioned().regressor();
  const Scalar smin = sigma_min(reg);
  const Scalar cutoff = rank_tolerance<Scalar>(reg.rows(), reg.cols()) *
                        sigma_max(reg);
  if (!(smin > cutoff))
    throw RankDeficientError(
        "regressor block [U_up; U_uf; U_yp] is not of full column rank "
        "(sigma_min = " +
            std::to_string(static_cast<double>(smin)) + ")",
        static_cast<double>(smin));
  return subspace_predict(u.partitioned(), ctx);
}

/// First predicted output sample (p entries).
template <typename Scalar>
Vector<Scalar> one_step(const Prediction<Scalar>& pred) {
  return pred.y_pred.head(pred.p);
}

/// Last time index at which a Tf-step window still fits inside a record of
/// length T_sim: the future inputs u(t..t+Tf-1) must all be measured.
inline Eigen::Index rolling_last_index(Eigen::Index t_sim, Eigen::Index t_f) {
  return t_sim - t_f;
}

/// Context for the window starting at time t of a measured record.
template <typename Scalar>
PredictionContext<Scalar> window_context(const Trajectory<Scalar>& measured,
                                         Eigen::Index t, BlockDims dims) {
  // Column-major flattening of samples-as-columns gives time-major stacking.
  const Matrix<Scalar> u_ini =
      measured.inputs.middleCols(t - dims.t_ini, dims.t_ini);
  const Matrix<Scalar> u_f = measured.inputs.middleCols(t, dims.t_f);
  const Matrix<Scalar> y_ini =
      measured.outputs.middleCols(t - dims.t_ini, dims.t_ini);
  return {u_ini.reshaped(), u_f.reshaped(), y_ini.reshaped(), dims};
}

/// One-step outputs for consecutive window start times beginning at first_t,
/// with the norm of each window's context vector.
template <typename Scalar>
struct RollingPrediction {
  Eigen::Index first_t = 0;
  std::vector<Vector<Scalar>> outputs;
  std::vector<Scalar> context_norms;
};

/// One-step predictions for t = Tini, ..., T_sim - Tf over a measured record.
/// Each window reads (u, y) on [t - Tini, t - 1] and the inputs on
/// [t, t + Tf - 1] from the same measured realization.
template <typename Scalar>
RollingPrediction<Scalar> rolling_one_step(const BehaviorBasis<Scalar>& u,
                                           const Trajectory<Scalar>& measured) {
  const BlockDims& dims = u.dims();
  require(measured.m() == dims.m && measured.p() == dims.p,
          "measured record dimensions do not match the basis (m, p)");
  require(measured.outputs.cols() == measured.length(),
          "measured inputs and outputs differ in length");
  require(measured.length() >= dims.horizon(),
          "measured record of length " + std::to_string(measured.length()) +
              " is shorter than Tini + Tf = " +
              std::to_string(dims.horizon()));
  RollingPrediction<Scalar> out;
  out.first_t = dims.t_ini;
  const auto last = rolling_last_index(measured.length(), dims.t_f);
  for (Eigen::Index t = dims.t_ini; t <= last; ++t) {
    const auto ctx = window_context(measured, t, dims);
    out.outputs.push_back(one_step(predict_from_subspace(u, ctx)));
    out.context_norms.push_back(ctx.stacked().norm());
  }
  return out;
}

}  // namespace behave
