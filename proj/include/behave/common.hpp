#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace behave {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Error taxonomy. The CLI maps each family onto a distinct exit code.

/// Malformed input: wrong dimensions, out-of-range parameters, parse errors.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A conditional bound was requested outside the region where it holds.
class HypothesisViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Rank deficiency or non-convergence detected during a computation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rank deficiency with the offending smallest singular value attached.
class RankDeficientError : public NumericalError {
 public:
  RankDeficientError(const std::string& what, double sigma_min)
      : NumericalError(what), sigma_min_(sigma_min) {}
  double sigma_min() const noexcept { return sigma_min_; }

 private:
  double sigma_min_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InputError(message);
}

/// Relative threshold max(rows, cols) * eps used for every numerical rank
/// decision. Multiply by sigma_max to get the absolute cutoff.
template <typename Scalar>
Scalar rank_tolerance(Eigen::Index rows, Eigen::Index cols) {
  return static_cast<Scalar>(std::max(rows, cols)) *
         std::numeric_limits<Scalar>::epsilon();
}

/// Singular values in descending order (length min(rows, cols)).
template <typename Derived>
Vector<typename Derived::Scalar> singular_values(
    const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.size() == 0) return Vector<Scalar>();
  Eigen::JacobiSVD<Matrix<Scalar>> svd(a.eval());
  return svd.singularValues();
}

/// Number of singular values above max(rows, cols) * eps * sigma_max.
template <typename Derived>
Eigen::Index numerical_rank(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  const auto sv = singular_values(a);
  if (sv.size() == 0 || sv(0) == Scalar(0)) return 0;
  const Scalar cutoff = rank_tolerance<Scalar>(a.rows(), a.cols()) * sv(0);
  return (sv.array() > cutoff).count();
}

template <typename Derived>
typename Derived::Scalar sigma_max(const Eigen::MatrixBase<Derived>& a) {
  const auto sv = singular_values(a);
  return sv.size() == 0 ? typename Derived::Scalar(0) : sv(0);
}

/// Smallest of the min(rows, cols) singular values; zero when the matrix has
/// more columns than rows, since it then cannot have full column rank.
template <typename Derived>
typename Derived::Scalar sigma_min(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() < a.cols()) return Scalar(0);
  const auto sv = singular_values(a);
  return sv.size() == 0 ? Scalar(0) : sv(sv.size() - 1);
}

/// Spectral norm.
template <typename Derived>
typename Derived::Scalar norm2(const Eigen::MatrixBase<Derived>& a) {
  return sigma_max(a);
}

/// True when `a` has numerically full column rank and a positive smallest
/// singular value above the shared rank cutoff.
template <typename Derived>
bool has_full_column_rank(const Eigen::MatrixBase<Derived>& a) {
  return a.rows() >= a.cols() && numerical_rank(a) == a.cols();
}

}  // namespace behave
