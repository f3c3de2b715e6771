#include "behave/bounds.hpp"
#include "behave/grassmann.hpp"
#include "behave/lti.hpp"

#include "support.hpp"

#include <doctest.h>

#include <numbers>

using namespace behave;

TEST_SUITE("bounds") {

TEST_CASE("gamma") {
  CHECK(gamma(2.0, 3.0) == 0.5);
  CHECK(gamma(2.0, 0.5) == 0.25);
  CHECK_THROWS_AS(gamma(0.0, 1.0), InputError);
  CHECK_THROWS_AS(gamma(1.0, -1.0), InputError);
}

TEST_CASE("golden-ratio constant") {
  CHECK(kPinvPerturbationConstant<double> ==
        doctest::Approx((1.0 + std::sqrt(5.0)) / 2).epsilon(1e-16));
}

TEST_CASE("lipschitz bound examples") {
  auto in = BoundInputs<double>{1, 1, 1, 0.0, 1};
  CHECK(lipschitz_bound(in) == 0.0);
  in.kappa = 0.1;
  // Oracle: (2(1 + sqrt5) + 1) sqrt2 0.1 by hand arithmetic.
  CHECK(lipschitz_bound(in) == doctest::Approx(1.0567196007456046).epsilon(1e-14));
  const double base = lipschitz_bound(in);
  in.kappa = 0.2;
  CHECK(lipschitz_bound(in) == doctest::Approx(2 * base).epsilon(1e-14));
  in.kappa = 0.1;
  in.b_norm = 2;
  CHECK(lipschitz_bound(in) == doctest::Approx(2 * base).epsilon(1e-14));

  in.kappa = 1.0 / (2 * std::numbers::sqrt2) + 1e-12;
  CHECK_THROWS_AS(lipschitz_bound(in), HypothesisViolation);
  in.kappa = 1.0 / (2 * std::numbers::sqrt2);
  CHECK_NOTHROW(lipschitz_bound(in));
}

TEST_CASE("lipschitz bound monotone in alpha and beta") {
  double prev = 0;
  for (double beta : {0.05, 0.1, 0.3, 0.6, 1.0}) {
    const auto in = BoundInputs<double>::from_constants(2.0, beta, 0.001, 1.0);
    const double b = lipschitz_bound(in);
    if (prev > 0) CHECK(b <= prev);
    prev = b;
  }
  prev = 0;
  for (double alpha : {1.0, 1.5, 2.0, 4.0}) {
    const auto in = BoundInputs<double>::from_constants(alpha, 0.5, 0.01, 1.0);
    const double b = lipschitz_bound(in);
    CHECK(b >= prev);
    prev = b;
  }
}

TEST_CASE("one-step bound") {
  CHECK(one_step_bound(0.5, 0.3, 0.0, 1.0) == 0.0);
  // Oracle: closed form evaluated independently.
  const double s = 0.5, w = 0.3, k = 0.1, b = 2.0;
  const double expected =
      (2 * (1 + std::sqrt(5.0)) * w / (s * s) + 1 / s) * std::sqrt(2.0) * k * b;
  CHECK(one_step_bound(s, w, k, b) == doctest::Approx(expected).epsilon(1e-14));
  // With ||Uyf1|| <= 1 it never exceeds the gamma-form with gamma = smin.
  CHECK(one_step_bound(s, 1.0, k, b) ==
        doctest::Approx(lipschitz_bound(BoundInputs<double>{1, 1, s, k, b}))
            .epsilon(1e-14));
  CHECK(one_step_bound(s, w, k, b) <=
        lipschitz_bound(BoundInputs<double>{1, 1, s, k, b}));
  CHECK_THROWS_AS(one_step_bound(0.5, 0.3, 0.2, 1.0), HypothesisViolation);
  CHECK_THROWS_AS(one_step_bound(0.0, 0.3, 0.0, 1.0), InputError);
}

TEST_CASE("one-step factors") {
  Rng rng(1);
  const BlockDims d{1, 1, 4, 2};
  const BehaviorBasis<double> u(testing::random_orthonormal(rng, 12, 10), d);
  const auto f = one_step_factors(u);
  CHECK(f.norm_first_future_output <= 1.0 + 1e-12);
  CHECK(f.sigma_min_regressor <= 1.0 + 1e-12);
  // Invariant under re-basing.
  const BehaviorBasis<double> uq(
      (u.matrix() * testing::random_orthogonal(rng, 10)).eval(), d);
  const auto g = one_step_factors(uq);
  CHECK(std::abs(f.sigma_min_regressor - g.sigma_min_regressor) < 1e-12);
  CHECK(std::abs(f.norm_first_future_output - g.norm_first_future_output) < 1e-12);
}

TEST_CASE("pseudoinverse perturbation bound") {
  Matrix<double> m = Matrix<double>::Identity(2, 2);
  Matrix<double> mhat = m;
  CHECK(pinv_perturbation_bound(mhat, m) == 0.0);
  mhat(0, 0) = 1.1;
  const double lhs = norm2(pseudoinverse(mhat) - pseudoinverse(m));
  CHECK(lhs == doctest::Approx(0.09090909090909094).epsilon(1e-12));
  CHECK(pinv_perturbation_bound(mhat, m) ==
        doctest::Approx(0.16180339887498962).epsilon(1e-12));

  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto rows = 2 + static_cast<Eigen::Index>(rng.uniform() * 8);
    const auto cols = 1 + static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(rows));
    const Matrix<double> a = rng.normal_matrix<double>(rows, cols);
    const Matrix<double> b =
        a + std::pow(10.0, -3.0 * rng.uniform()) * rng.normal_matrix<double>(rows, cols);
    const double direct = norm2(pseudoinverse(b) - pseudoinverse(a));
    CHECK(direct <= pinv_perturbation_bound(b, a) * (1 + 1e-10) + 1e-12);
  }

  Matrix<double> deficient = Matrix<double>::Zero(3, 2);
  deficient(0, 0) = 1;
  CHECK_THROWS_AS(pinv_perturbation_bound(deficient, Matrix<double>(Matrix<double>::Identity(3, 2))),
                  RankDeficientError);
}

TEST_CASE("weyl check") {
  Rng rng(3);
  const Matrix<double> a = rng.normal_matrix<double>(5, 3);
  CHECK(weyl_check(a, a));
  const Vector<double> x = rng.normal_matrix<double>(5, 1);
  const Vector<double> y = rng.normal_matrix<double>(3, 1);
  const Matrix<double> rank_one = a + 1e-4 * x.normalized() * y.normalized().transpose();
  CHECK(weyl_check(rank_one, a));
  CHECK(std::abs(sigma_min(rank_one) - sigma_min(a)) <= 1e-4 + 1e-12);
  for (int trial = 0; trial < 1000; ++trial) {
    const Matrix<double> p = rng.normal_matrix<double>(6, 4);
    const Matrix<double> q = p + rng.uniform() * rng.normal_matrix<double>(6, 4);
    CHECK(weyl_check(q, p));
  }
}

TEST_CASE("first error bound") {
  Rng rng(4);
  const BlockDims d{1, 1, 3, 2};
  const PartitionedMatrix<double> h(rng.normal_matrix<double>(10, 6), d);
  CHECK(first_error_bound(h, h, 1.0).value == 0.0);

  for (int trial = 0; trial < 200; ++trial) {
    const Matrix<double> base = rng.normal_matrix<double>(10, 6);
    const double scale = std::pow(10.0, -3.0 * rng.uniform());
    const PartitionedMatrix<double> x(base, d);
    const PartitionedMatrix<double> xhat(
        (base + scale * rng.normal_matrix<double>(10, 6)).eval(), d);
    const Vector<double> b = rng.normal_matrix<double>(d.context_rows(), 1);
    const auto ctx = PredictionContext<double>::from_stacked(b, d);
    const double actual =
        (subspace_predict(xhat, ctx).y_pred - subspace_predict(x, ctx).y_pred).norm();
    for (auto split : {ErrorSplit::kPerturbedOuter, ErrorSplit::kNominalOuter}) {
      const auto bound = first_error_bound(xhat, x, b.norm(), split);
      CHECK(bound.split == split);
      CHECK(bound.middle <= bound.value);
      CHECK(actual <= bound.middle * (1 + 1e-10) + 1e-12);
    }
  }
}

TEST_CASE("sigma_min(M) >= gamma for orthonormal bases of im Phi") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto model = testing::random_model(rng);
    const Eigen::Index t_ini = model.n() + static_cast<Eigen::Index>(rng.uniform() * 2);
    const Eigen::Index t_f = 1 + static_cast<Eigen::Index>(rng.uniform() * 3);
    const double alpha = gain_bound(model, t_ini + t_f);
    const double beta = observability_degree(model, t_ini);
    REQUIRE(beta > 0.0);
    const double g = gamma(alpha, beta);
    const BlockDims d{model.m(), model.p(), t_ini, t_f};
    const Matrix<double> basis =
        testing::qr_basis(trajectory_generation_matrix(model, t_ini + t_f));
    const BehaviorBasis<double> u(basis, d);
    CHECK(sigma_min(u.partitioned().regressor()) >= g - 1e-9);
    const Matrix<double> rot = testing::random_orthogonal(rng, basis.cols());
    const BehaviorBasis<double> ur((basis * rot).eval(), d);
    CHECK(sigma_min(ur.partitioned().regressor()) >= g - 1e-9);
  }
}

TEST_CASE("gamma lower bound on the reference model with Tini = Tf = 4") {
  const auto model = reference_model();
  const double g = gamma(gain_bound(model, 8), observability_degree(model, 4));
  CHECK(g == doctest::Approx(0.13927398547404252 / 6.395855197196562).epsilon(1e-9));
  const BehaviorBasis<double> u(
      testing::qr_basis(trajectory_generation_matrix(model, 8)), BlockDims{1, 1, 4, 4});
  CHECK(sigma_min(u.partitioned().regressor()) >= g);
}

TEST_CASE("aligned blocks obey the norm chain") {
  Rng rng(6);
  const BlockDims d{1, 1, 4, 2};
  for (int trial = 0; trial < 100; ++trial) {
    const BehaviorBasis<double> u(testing::random_orthonormal(rng, 12, 6), d);
    const auto uhat = perturb_subspace(u, 0.5 * rng.uniform(), 100 + trial);
    const auto aligned = align_basis(u, uhat);
    const double kappa = chordal_distance(u, uhat);
    const double full = (aligned.matrix() - u.matrix()).norm();
    const double yf = (aligned.partitioned().yf() - u.partitioned().yf()).norm();
    CHECK(yf <= full + 1e-14);
    CHECK(full <= std::numbers::sqrt2 * kappa + 1e-9);
  }
}

}  // TEST_SUITE
