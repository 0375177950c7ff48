#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "aptfloquet/floquet.hpp"
#include "aptfloquet/numerics.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace apt;

TEST_CASE("mat_exp of zero is identity") { CHECK(mat_exp(Matrix2::zero()) == Matrix2::identity()); }

TEST_CASE("mat_exp spin rotation") {
  const Matrix2 r = mat_exp(pauli::Y * Complex(0.0, -std::numbers::pi / 4));
  const double h = std::sqrt(0.5);
  CHECK(distance(r, Matrix2{h, -h, h, h}) < 1e-15);
}

TEST_CASE("mat_exp rejects non-finite input") {
  const Matrix2 bad{std::nan(""), 0.0, 0.0, 1.0};
  CHECK_THROWS_AS(mat_exp(bad), DomainError);
}

TEST_CASE("mat_exp at the exceptional point matches the Taylor oracle") {
  const APTParams p{1.0, 1.0, 0.5, 0.0};
  const Matrix2 a = apt_hamiltonian(p) * Complex(0.0, -default_period(p));
  const Matrix2 b = a - Matrix2::identity() * (a.trace() / 2.0);
  CHECK(std::abs(b.det()) < 1e-15);
  const Matrix2 closed = std::exp(a.trace() / 2.0) * (Matrix2::identity() + b);
  CHECK(distance(mat_exp(a), closed) < 1e-15);
  CHECK(distance(mat_exp(a), test::taylor_exp(a)) < 1e-12);
}

TEST_CASE("mat_exp agrees with the Taylor oracle on random inputs") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Matrix2 a = test::random_matrix(rng, 1.5);
    const Matrix2 e = mat_exp(a);
    CHECK(distance(e, test::taylor_exp(a)) < 1e-12 * std::max(1.0, e.frobenius_norm()));
  }
}

TEST_CASE("mat_exp small-mu series branch is continuous") {
  for (double eps : {1e-3, 1e-4 * 1.01, 1e-4 * 0.99, 1e-6, 1e-9}) {
    const Matrix2 a{0.3, eps, eps, -0.3 + Complex(0.0, 0.2)};
    CHECK(distance(mat_exp(a), test::taylor_exp(a)) < 1e-14);
  }
  const Matrix2 nil{0.0, 1.0, 0.0, 0.0};
  CHECK(distance(mat_exp(nil), Matrix2{1.0, 1.0, 0.0, 1.0}) == 0.0);
}

TEST_CASE("property: exp(A) exp(-A) = I and the Jacobi identity") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    Matrix2 a = test::random_matrix(rng);
    a = a * (10.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng) / a.frobenius_norm());
    const Matrix2 e = mat_exp(a);
    const Matrix2 prod = e * mat_exp(-a);
    CHECK(distance(prod, Matrix2::identity()) < 1e-12 * std::max(1.0, e.frobenius_norm() * mat_exp(-a).frobenius_norm()));
    const Complex lhs = e.det();
    const Complex rhs = std::exp(a.trace());
    // Cancellation in det() is bounded by the squared entry scale.
    CHECK(std::abs(lhs - rhs) < 1e-12 * std::max({1.0, std::abs(rhs), e.frobenius_norm() * e.frobenius_norm()}));
  }
}

TEST_CASE("property: exp(-iH) is unitary for Hermitian H") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 300; ++i) {
    const Matrix2 m = test::random_matrix(rng, 3.0);
    const Matrix2 h = (m + m.adjoint()) * 0.5;
    const Matrix2 u = mat_exp(h * Complex(0.0, -1.0));
    CHECK(distance(u * u.adjoint(), Matrix2::identity()) < 1e-12);
  }
}

TEST_CASE("mat_log_principal basics") {
  const LogResult id = mat_log_principal(Matrix2::identity());
  CHECK(id.value.frobenius_norm() == 0.0);
  CHECK_FALSE(id.on_branch_cut);
  CHECK_THROWS_AS(mat_log_principal(Matrix2{1.0, 0.0, 0.0, 1e-15}), DomainError);
  CHECK_THROWS_AS(mat_log_principal(Matrix2{1.0, 1.0, 1.0, 1.0}), DomainError);
}

TEST_CASE("mat_log_principal on the branch cut takes +pi") {
  const LogResult r = mat_log_principal(-Matrix2::identity());
  CHECK(r.on_branch_cut);
  CHECK(distance(r.value, Matrix2::identity() * Complex(0.0, std::numbers::pi)) < 1e-15);
  const LogResult rot = mat_log_principal(Matrix2{-1.0, 0.0, 0.0, 2.0});
  CHECK(rot.on_branch_cut);
  CHECK(std::abs(rot.value(0, 0) - Complex(0.0, std::numbers::pi)) < 1e-15);
}

TEST_CASE("mat_log_principal of a defective matrix") {
  const Complex lam{0.6, 0.3};
  const Matrix2 u{lam, 1.0, 0.0, lam};
  const LogResult r = mat_log_principal(u);
  const Matrix2 expected{std::log(lam), 1.0 / lam, 0.0, std::log(lam)};
  CHECK(distance(r.value, expected) < 1e-14);
  CHECK(distance(mat_exp(r.value), u) < 1e-14);
}

TEST_CASE("property: log(exp(A)) = A inside the principal strip") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> im(-std::numbers::pi + 0.1, std::numbers::pi - 0.1);
  std::uniform_real_distribution<double> re(-2.0, 2.0);
  int tested = 0;
  while (tested < 400) {
    // A = S diag(l1, l2) S^-1 with a well-conditioned S.
    const Matrix2 s = Matrix2::identity() + test::random_matrix(rng, 0.3);
    if (std::abs(s.det()) < 0.3) continue;
    const Matrix2 d{Complex(re(rng), im(rng)), 0.0, 0.0, Complex(re(rng), im(rng))};
    const Matrix2 a = s * d * s.inverse();
    const LogResult r = mat_log_principal(mat_exp(a));
    CHECK(distance(r.value, a) < 1e-10);
    CHECK_FALSE(r.on_branch_cut);
    ++tested;
  }
}

TEST_CASE("eig2 on sigma_z") {
  const Eigen2 e = eig2(pauli::Z);
  CHECK(e.values[0] == Complex(1.0));
  CHECK(e.values[1] == Complex(-1.0));
  CHECK(std::abs(std::abs(e.vectors[0].up) - 1.0) < 1e-15);
  CHECK(std::abs(std::abs(e.vectors[1].down) - 1.0) < 1e-15);
  CHECK_FALSE(e.defective);
  CHECK(e.condition == doctest::Approx(1.0));
}

TEST_CASE("eig2 of J sz + i Gamma sx") {
  const double J = 1.3;
  const Eigen2 e = eig2(pauli::Z * J + pauli::X * Complex(0.0, 2.0 * J));
  CHECK(std::abs(e.values[0] - Complex(0.0, std::sqrt(3.0) * J)) < 1e-12);
  CHECK(std::abs(e.values[1] - Complex(0.0, -std::sqrt(3.0) * J)) < 1e-12);

  const Eigen2 ep = eig2(pauli::Z * J + pauli::X * Complex(0.0, J));
  CHECK(ep.defective);
  CHECK(distance(Matrix2::projector(ep.vectors[0]), Matrix2::projector(ep.vectors[1])) < 1e-12);
  CHECK(ep.condition < 1e-6);
}

TEST_CASE("eig2 of a scalar matrix is not defective") {
  const Eigen2 e = eig2(Matrix2::identity() * Complex(2.0, -1.0));
  CHECK_FALSE(e.defective);
  CHECK(std::abs(inner(e.vectors[0], e.vectors[1])) < 1e-15);
}

TEST_CASE("property: eig2 eigenpairs and characteristic roots") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 500; ++i) {
    const Matrix2 a = test::random_matrix(rng, 2.0);
    const double scale = a.frobenius_norm();
    const Eigen2 e = eig2(a);
    REQUIRE_FALSE(e.defective);
    for (int k = 0; k < 2; ++k) {
      CHECK(std::abs(e.vectors[k].norm() - 1.0) < 1e-12);
      const Vector2 r = a * e.vectors[k] - e.vectors[k] * e.values[k];
      CHECK(r.norm() < 1e-10 * scale);
    }
    CHECK((e.values[0].real() > e.values[1].real() ||
           (e.values[0].real() == e.values[1].real() && e.values[0].imag() >= e.values[1].imag())));
    const auto [r1, r2] = characteristic_roots(a);
    const double direct = std::abs(e.values[0] - r1) + std::abs(e.values[1] - r2);
    const double swapped = std::abs(e.values[0] - r2) + std::abs(e.values[1] - r1);
    CHECK(std::min(direct, swapped) < 1e-12 * scale);
  }
}

TEST_CASE("sinhc is analytic at zero") {
  CHECK(sinhc(0.0) == Complex(1.0));
  const Complex z{1e-5, 2e-5};
  CHECK(std::abs(sinhc(z) - (1.0 + z * z / 6.0)) < 1e-16);
  const Complex w{0.7, -0.4};
  CHECK(std::abs(sinhc(w) - std::sinh(w) / w) < 1e-15);
}
