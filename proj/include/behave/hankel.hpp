#pragma once

#include "behave/common.hpp"
#include "behave/rng.hpp"

#include <cstdint>
#include <string>

namespace behave {

/// Horizon split shared by every matrix with (m+p)(Tini+Tf) rows.
struct BlockDims {
  Eigen::Index m = 1;
  Eigen::Index p = 1;
  Eigen::Index t_ini = 1;
  Eigen::Index t_f = 1;

  Eigen::Index horizon() const { return t_ini + t_f; }
  Eigen::Index rows() const { return (m + p) * horizon(); }
  /// Rows of the regressor block [X_up; X_uf; X_yp].
  Eigen::Index context_rows() const { return m * horizon() + p * t_ini; }
  Eigen::Index future_rows() const { return p * t_f; }

  void validate() const {
    require(m >= 1 && p >= 1, "block dims need m >= 1 and p >= 1");
    require(t_ini >= 1 && t_f >= 1, "block dims need Tini >= 1 and Tf >= 1");
  }

  friend bool operator==(const BlockDims&, const BlockDims&) = default;
};

/// A q x r matrix with q = (m+p)(Tini+Tf), partitioned by rows into
/// (X_up, X_uf, X_yp, X_yf) of heights (m Tini, m Tf, p Tini, p Tf).
///
/// The row layout is [H_L(u); H_L(y)] with each Hankel block time-major, so
/// the first m Tini rows are past inputs, the next m Tf future inputs, then
/// p Tini past outputs and p Tf future outputs. This makes the partition a
/// contiguous split with the identity as row permutation, and the regressor
/// block M = [X_up; X_uf; X_yp] is simply the top q - p Tf rows.
template <typename Scalar>
class PartitionedMatrix {
 public:
  PartitionedMatrix(Matrix<Scalar> data, BlockDims dims)
      : data_(std::move(data)), dims_(dims) {
    dims_.validate();
    require(data_.rows() == dims_.rows(),
            "partitioned matrix has " + std::to_string(data_.rows()) +
                " rows, expected (m+p)(Tini+Tf) = " +
                std::to_string(dims_.rows()));
    require(data_.cols() >= 1, "partitioned matrix needs at least one column");
  }

  const Matrix<Scalar>& data() const { return data_; }
  const BlockDims& dims() const { return dims_; }
  Eigen::Index rows() const { return data_.rows(); }
  Eigen::Index cols() const { return data_.cols(); }

  auto up() const { return data_.topRows(dims_.m * dims_.t_ini); }
  auto uf() const {
    return data_.middleRows(dims_.m * dims_.t_ini, dims_.m * dims_.t_f);
  }
  auto yp() const {
    return data_.middleRows(dims_.m * dims_.horizon(), dims_.p * dims_.t_ini);
  }
  auto yf() const { return data_.bottomRows(dims_.future_rows()); }
  /// [X_up; X_uf; X_yp].
  auto regressor() const { return data_.topRows(dims_.context_rows()); }

 private:
  Matrix<Scalar> data_;
  BlockDims dims_;
};

/// Depth-k block Hankel matrix of the sequence whose samples are the columns
/// of `z` (d x T). Column j stacks z(j), ..., z(j+k-1); size dk x (T-k+1).
template <typename Derived>
Matrix<typename Derived::Scalar> hankel(const Eigen::MatrixBase<Derived>& z,
                                        Eigen::Index depth) {
  const auto d = z.rows();
  const auto length = z.cols();
  require(depth >= 1 && depth <= length,
          "Hankel depth " + std::to_string(depth) +
              " must lie in [1, T] with T = " + std::to_string(length));
  const auto cols = length - depth + 1;
  Matrix<typename Derived::Scalar> h(d * depth, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < depth; ++i)
      h.block(i * d, j, d, 1) = z.col(j + i);
  return h;
}

template <typename Derived>
bool is_persistently_exciting(const Eigen::MatrixBase<Derived>& u,
                              Eigen::Index order) {
  const auto h = hankel(u, order);
  if (h.rows() > h.cols()) return false;
  return numerical_rank(h) == h.rows();
}

/// Builds [H_L(u); H_L(y)] with L = Tini + Tf from samples-as-columns data.
template <typename Scalar>
PartitionedMatrix<Scalar> stacked_data_matrix(const Matrix<Scalar>& u_data,
                                              const Matrix<Scalar>& y_data,
                                              Eigen::Index t_ini,
                                              Eigen::Index t_f) {
  require(u_data.cols() == y_data.cols(),
          "input and output records differ in length (" +
              std::to_string(u_data.cols()) + " vs " +
              std::to_string(y_data.cols()) + ")");
  require(t_ini >= 1 && t_f >= 1, "Tini and Tf must be >= 1");
  const auto horizon = t_ini + t_f;
  require(u_data.cols() >= horizon,
          "record length T = " + std::to_string(u_data.cols()) +
              " is shorter than Tini + Tf = " + std::to_string(horizon));
  const BlockDims dims{u_data.rows(), y_data.rows(), t_ini, t_f};
  Matrix<Scalar> data(dims.rows(), u_data.cols() - horizon + 1);
  data << hankel(u_data, horizon), hankel(y_data, horizon);
  return {std::move(data), dims};
}

/// The regressor block M = [X_up; X_uf; X_yp] as an owning matrix.
template <typename Scalar>
Matrix<Scalar> select_M(const PartitionedMatrix<Scalar>& x) {
  return x.regressor();
}

/// Draws i.i.d. standard normal inputs (m x T) that are persistently exciting
/// of the given order. Attempt k uses seed + k; gives up after `max_attempts`.
inline Matrix<double> generate_pe_input(Eigen::Index m, Eigen::Index length,
                                        Eigen::Index order, std::uint64_t seed,
                                        int max_attempts = 16) {
  require(m >= 1 && length >= 1 && order >= 1,
          "PE input generation needs positive m, T and order");
  require(order <= length, "PE order exceeds the record length");
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Rng rng(seed + static_cast<std::uint64_t>(attempt));
    Matrix<double> u = rng.normal_matrix<double>(m, length);
    if (is_persistently_exciting(u, order)) return u;
  }
  throw NumericalError("could not generate an input persistently exciting of order " +
                       std::to_string(order) + " with T = " +
                       std::to_string(length) + " after " +
                       std::to_string(max_attempts) + " attempts");
}

}  // namespace behave
