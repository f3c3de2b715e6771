#pragma once

#include "behave/common.hpp"
#include "behave/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace behave {

/// Discrete-time LTI system x(t+1) = A x(t) + B u(t), y(t) = C x(t) + D u(t).
template <typename Scalar>
class StateSpaceModel {
 public:
  StateSpaceModel(Matrix<Scalar> a, Matrix<Scalar> b, Matrix<Scalar> c,
                  Matrix<Scalar> d)
      : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)) {
    const auto n = a_.rows();
    require(n >= 1 && a_.cols() == n, "A must be square with n >= 1, got " +
                                          std::to_string(a_.rows()) + "x" +
                                          std::to_string(a_.cols()));
    require(b_.rows() == n && b_.cols() >= 1,
            "B must be n x m with n = " + std::to_string(n) + ", got " +
                std::to_string(b_.rows()) + "x" + std::to_string(b_.cols()));
    require(c_.cols() == n && c_.rows() >= 1,
            "C must be p x n with n = " + std::to_string(n) + ", got " +
                std::to_string(c_.rows()) + "x" + std::to_string(c_.cols()));
    require(d_.rows() == c_.rows() && d_.cols() == b_.cols(),
            "D must be p x m (" + std::to_string(c_.rows()) + "x" +
                std::to_string(b_.cols()) + "), got " +
                std::to_string(d_.rows()) + "x" + std::to_string(d_.cols()));
  }

  const Matrix<Scalar>& A() const { return a_; }
  const Matrix<Scalar>& B() const { return b_; }
  const Matrix<Scalar>& C() const { return c_; }
  const Matrix<Scalar>& D() const { return d_; }

  Eigen::Index n() const { return a_.rows(); }
  Eigen::Index m() const { return b_.cols(); }
  Eigen::Index p() const { return c_.rows(); }

 private:
  Matrix<Scalar> a_, b_, c_, d_;
};

/// Input/output record of length T. Column t of `inputs`/`outputs` is the
/// sample at time t; `states`, when present, has T + 1 columns.
template <typename Scalar>
struct Trajectory {
  Matrix<Scalar> inputs;
  Matrix<Scalar> outputs;
  std::optional<Matrix<Scalar>> states;

  Eigen::Index length() const { return inputs.cols(); }
  Eigen::Index m() const { return inputs.rows(); }
  Eigen::Index p() const { return outputs.rows(); }
};

enum class NoiseKind { kNone, kRelativeGaussian };

/// Measurement noise eta_t ~ N(0, sigma * ||y_t||^2 I_p), where y_t is the
/// noise-free output. `sigma` is the noise-to-signal ratio.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::kNone;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  static NoiseSpec none() { return {}; }
  static NoiseSpec relative_gaussian(double sigma, std::uint64_t seed) {
    require(sigma >= 0.0 && std::isfinite(sigma),
            "noise sigma must be a finite nonnegative number");
    return {NoiseKind::kRelativeGaussian, sigma, seed};
  }
};

/// The nominal system used by the reference experiment.
inline StateSpaceModel<double> reference_model() {
  Matrix<double> a(2, 2), b(2, 1), c(1, 2), d(1, 1);
  a << 0.8, 0.2, 0.1, 0.9;
  b << 0.3, 0.7;
  c << 1.0, 1.0;
  d << 0.0;
  return {a, b, c, d};
}

template <typename Scalar>
Trajectory<Scalar> simulate(const StateSpaceModel<Scalar>& model,
                            const Vector<Scalar>& x0,
                            const Matrix<Scalar>& inputs,
                            const NoiseSpec& noise = NoiseSpec::none()) {
  require(x0.size() == model.n(),
          "initial state has dimension " + std::to_string(x0.size()) +
              ", expected n = " + std::to_string(model.n()));
  require(inputs.rows() == model.m(),
          "input samples have dimension " + std::to_string(inputs.rows()) +
              ", expected m = " + std::to_string(model.m()));
  require(inputs.cols() >= 1, "input sequence must have length T >= 1");
  require(noise.sigma >= 0.0, "noise sigma must be nonnegative");

  const Eigen::Index horizon = inputs.cols();
  Trajectory<Scalar> traj;
  traj.inputs = inputs;
  traj.outputs.resize(model.p(), horizon);
  Matrix<Scalar> states(model.n(), horizon + 1);
  states.col(0) = x0;

  const bool noisy =
      noise.kind == NoiseKind::kRelativeGaussian && noise.sigma > 0.0;
  Rng rng(noise.seed);
  const Scalar noise_gain = Scalar(std::sqrt(noise.sigma));

  for (Eigen::Index t = 0; t < horizon; ++t) {
    const Vector<Scalar> y =
        model.C() * states.col(t) + model.D() * inputs.col(t);
    traj.outputs.col(t) = y;
    if (noisy) {
      // Standard deviation sqrt(sigma) * ||y_t||, i.e. variance sigma*||y_t||^2.
      const Scalar scale = noise_gain * y.norm();
      for (Eigen::Index i = 0; i < model.p(); ++i)
        traj.outputs(i, t) += scale * Scalar(rng.normal());
    }
    states.col(t + 1) = model.A() * states.col(t) + model.B() * inputs.col(t);
  }
  traj.states = std::move(states);
  return traj;
}

template <typename Scalar>
Trajectory<Scalar> simulate(const StateSpaceModel<Scalar>& model,
                            const Matrix<Scalar>& inputs,
                            const NoiseSpec& noise = NoiseSpec::none()) {
  return simulate(model, Vector<Scalar>::Zero(model.n()).eval(), inputs, noise);
}

/// Extended observability matrix [C; CA; ...; CA^{k-1}] (pk x n).
template <typename Scalar>
Matrix<Scalar> observability_matrix(const StateSpaceModel<Scalar>& model,
                                    Eigen::Index k) {
  require(k >= 1, "observability depth must be >= 1");
  const auto p = model.p();
  Matrix<Scalar> obs(p * k, model.n());
  Matrix<Scalar> block = model.C();
  for (Eigen::Index i = 0; i < k; ++i) {
    obs.middleRows(i * p, p) = block;
    block = block * model.A();
  }
  return obs;
}

/// Lower block-triangular Toeplitz matrix of Markov parameters (pk x mk):
/// block (i, j) is D on the diagonal and C A^{i-j-1} B below it.
template <typename Scalar>
Matrix<Scalar> toeplitz_matrix(const StateSpaceModel<Scalar>& model,
                               Eigen::Index k) {
  require(k >= 1, "Toeplitz depth must be >= 1");
  const auto p = model.p();
  const auto m = model.m();
  // markov[j] is the block j steps below the diagonal.
  std::vector<Matrix<Scalar>> markov;
  markov.reserve(static_cast<std::size_t>(k));
  markov.push_back(model.D());
  Matrix<Scalar> ab = model.B();
  for (Eigen::Index j = 1; j < k; ++j) {
    markov.push_back(model.C() * ab);
    ab = model.A() * ab;
  }
  Matrix<Scalar> toe = Matrix<Scalar>::Zero(p * k, m * k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      toe.block(i * p, j * m, p, m) = markov[static_cast<std::size_t>(i - j)];
  return toe;
}

/// Trajectory generation matrix [[0, I_{mL}], [O_L, T_L]], of size
/// (m+p)L x (n+mL). Its image is the restricted behavior of length L; rows are
/// ordered inputs first, then outputs, each time-major.
template <typename Scalar>
Matrix<Scalar> trajectory_generation_matrix(
    const StateSpaceModel<Scalar>& model, Eigen::Index horizon) {
  require(horizon >= 1, "trajectory horizon L must be >= 1");
  const auto n = model.n();
  const auto mh = model.m() * horizon;
  const auto ph = model.p() * horizon;
  Matrix<Scalar> phi = Matrix<Scalar>::Zero(mh + ph, n + mh);
  phi.block(0, n, mh, mh).setIdentity();
  phi.block(mh, 0, ph, n) = observability_matrix(model, horizon);
  phi.block(mh, n, ph, mh) = toeplitz_matrix(model, horizon);
  return phi;
}

/// sigma_min(Phi_Tini): the tightest beta for the observability hypothesis.
/// Exactly zero when Phi_Tini is numerically column-rank deficient, which
/// happens iff rank(O_Tini) < n.
template <typename Scalar>
Scalar observability_degree(const StateSpaceModel<Scalar>& model,
                            Eigen::Index t_ini) {
  const Matrix<Scalar> phi = trajectory_generation_matrix(model, t_ini);
  if (!has_full_column_rank(phi)) return Scalar(0);
  return sigma_min(phi);
}

/// sigma_max(Phi_L) (alpha). At least 1 because of the identity block.
template <typename Scalar>
Scalar gain_bound(const StateSpaceModel<Scalar>& model, Eigen::Index horizon) {
  return sigma_max(trajectory_generation_matrix(model, horizon));
}

template <typename Scalar>
Matrix<Scalar> controllability_matrix(const StateSpaceModel<Scalar>& model) {
  const auto n = model.n();
  const auto m = model.m();
  Matrix<Scalar> ctrb(n, n * m);
  Matrix<Scalar> block = model.B();
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrb.middleCols(i * m, m) = block;
    block = model.A() * block;
  }
  return ctrb;
}

template <typename Scalar>
bool is_controllable(const StateSpaceModel<Scalar>& model) {
  return numerical_rank(controllability_matrix(model)) == model.n();
}

template <typename Scalar>
bool is_observable(const StateSpaceModel<Scalar>& model) {
  return numerical_rank(observability_matrix(model, model.n())) == model.n();
}

}  // namespace behave
