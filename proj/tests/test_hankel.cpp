#include "behave/hankel.hpp"
#include "behave/lti.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace behave;

TEST_SUITE("hankel") {

TEST_CASE("hankel of a scalar sequence") {
  Matrix<double> z(1, 4);
  z << 1, 2, 3, 4;
  Matrix<double> expected(2, 3);
  expected << 1, 2, 3, 2, 3, 4;
  CHECK(hankel(z, 2) == expected);

  const auto full = hankel(z, 4);
  CHECK(full.cols() == 1);
  CHECK(full.col(0) == z.transpose());
}

TEST_CASE("hankel of a vector sequence follows the stacking definition") {
  Matrix<double> z(2, 3);
  z << 1, 2, 3, 4, 5, 6;
  const auto h = hankel(z, 2);
  REQUIRE(h.rows() == 4);
  REQUIRE(h.cols() == 2);
  // Oracle: H(i*d + k, j) = z(k, i + j).
  for (Eigen::Index j = 0; j < 2; ++j)
    for (Eigen::Index i = 0; i < 2; ++i)
      for (Eigen::Index k = 0; k < 2; ++k) CHECK(h(i * 2 + k, j) == z(k, i + j));
  Matrix<double> expected(4, 2);
  expected << 1, 2, 4, 5, 2, 3, 5, 6;
  CHECK(h == expected);
}

TEST_CASE("hankel rejects depth beyond the sequence") {
  CHECK_THROWS_AS(hankel(Matrix<double>(Matrix<double>::Zero(1, 3)), 4), InputError);
  CHECK_THROWS_AS(hankel(Matrix<double>(Matrix<double>::Zero(1, 3)), 0), InputError);
}

TEST_CASE("hankel is linear in the sequence") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix<double> z1 = rng.normal_matrix<double>(3, 12);
    const Matrix<double> z2 = rng.normal_matrix<double>(3, 12);
    const double a = rng.normal();
    const double b = rng.normal();
    const Matrix<double> lhs = hankel((a * z1 + b * z2).eval(), 5);
    const Matrix<double> rhs = a * hankel(z1, 5) + b * hankel(z2, 5);
    CHECK((lhs - rhs).norm() < 1e-13);
  }
}

TEST_CASE("persistency of excitation") {
  CHECK_FALSE(is_persistently_exciting(Matrix<double>(Matrix<double>::Constant(1, 10, 2.5)), 2));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    CHECK(is_persistently_exciting(rng.normal_matrix<double>(1, 30), 10));
  }
  // k m > T - k + 1: more rows than columns.
  Rng rng(1);
  CHECK_FALSE(is_persistently_exciting(rng.normal_matrix<double>(2, 10), 4));
}

TEST_CASE("generated PE inputs are persistently exciting and reproducible") {
  const auto u = generate_pe_input(2, 40, 8, 17);
  CHECK(is_persistently_exciting(u, 8));
  CHECK(u == generate_pe_input(2, 40, 8, 17));
  CHECK_THROWS_AS(generate_pe_input(2, 10, 5, 1), NumericalError);
}

TEST_CASE("stacked data matrix: smallest case") {
  Matrix<double> u(1, 2), y(1, 2);
  u << 1, 2;
  y << 3, 4;
  const auto x = stacked_data_matrix(u, y, 1, 1);
  REQUIRE(x.cols() == 1);
  CHECK(x.up()(0, 0) == 1);
  CHECK(x.uf()(0, 0) == 2);
  CHECK(x.yp()(0, 0) == 3);
  CHECK(x.yf()(0, 0) == 4);
}

TEST_CASE("stacked data matrix: shape, blocks and rank on reference data") {
  const auto model = reference_model();
  const auto u = generate_pe_input(1, 30, 2 + 8, 1);
  const auto traj = simulate(model, u);
  const auto x = stacked_data_matrix(traj.inputs, traj.outputs, 4, 4);
  CHECK(x.rows() == 16);
  CHECK(x.cols() == 23);
  CHECK(numerical_rank(x.data()) == 10);

  // Blocks agree with Hankel matrices of the split data.
  const auto hu = hankel(traj.inputs, 8);
  const auto hy = hankel(traj.outputs, 8);
  CHECK(x.up() == hu.topRows(4));
  CHECK(x.uf() == hu.bottomRows(4));
  CHECK(x.yp() == hy.topRows(4));
  CHECK(x.yf() == hy.bottomRows(4));

  const auto m = select_M(x);
  CHECK(m.rows() == x.rows() - 4);
  Matrix<double> reassembled(x.rows(), x.cols());
  reassembled << m, x.yf();
  CHECK(reassembled == x.data());
  // y_f is determined by the rest on noise-free data.
  CHECK(numerical_rank(m) == 10);
}

TEST_CASE("stacked data matrix column count and errors") {
  Rng rng(3);
  for (Eigen::Index len = 4; len < 20; ++len) {
    const auto x = stacked_data_matrix(rng.normal_matrix<double>(2, len),
                                       rng.normal_matrix<double>(1, len), 2, 2);
    CHECK(x.cols() == len - 4 + 1);
    CHECK(x.rows() == 12);
  }
  CHECK_THROWS_AS(stacked_data_matrix(Matrix<double>(Matrix<double>::Zero(1, 5)),
                                      Matrix<double>(Matrix<double>::Zero(1, 5)), 3, 3),
                  InputError);
  CHECK_THROWS_AS(stacked_data_matrix(Matrix<double>(Matrix<double>::Zero(1, 5)),
                                      Matrix<double>(Matrix<double>::Zero(1, 6)), 2, 2),
                  InputError);
}

TEST_CASE("partitioned matrix validates its row count") {
  CHECK_THROWS_AS(PartitionedMatrix<double>(Matrix<double>::Zero(5, 2),
                                            BlockDims{1, 1, 2, 1}),
                  InputError);
  const PartitionedMatrix<double> ok(Matrix<double>::Zero(6, 2),
                                     BlockDims{1, 1, 2, 1});
  CHECK(ok.regressor().rows() == 5);
}

TEST_CASE("noise-free data spans the restricted behavior") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto model = testing::random_model(rng);
    const Eigen::Index t_ini = model.n();
    const Eigen::Index t_f = 2;
    const Eigen::Index horizon = t_ini + t_f;
    const Eigen::Index order = model.n() + horizon;
    const Eigen::Index len = 3 * (model.m() + 1) * order;
    const auto u = generate_pe_input(model.m(), len, order, 100 + trial);
    const Vector<double> x0 = rng.normal_matrix<double>(model.n(), 1);
    const auto traj = simulate(model, x0, u);
    const auto x = stacked_data_matrix(traj.inputs, traj.outputs, t_ini, t_f);
    const Eigen::Index dim = model.m() * horizon + model.n();
    CHECK(numerical_rank(x.data()) == dim);
  }
}

}  // TEST_SUITE
