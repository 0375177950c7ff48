#include <cmath>
#include <numbers>

#include "aptfloquet/floquet.hpp"
#include "aptfloquet/numerics.hpp"
#include "doctest.h"

using namespace apt;

namespace {

const double kGammas[] = {0.1, 0.22, 0.52, 0.57, 1.0, 2.0, 5.0, 9.29, 10.0};
const double kAlphas[] = {0.25, 0.5, 0.75};

Matrix2 evolution(const APTParams& p, double t) { return mat_exp(apt_hamiltonian(p) * Complex(0.0, -t)); }

}  // namespace

TEST_CASE("instantaneous Hamiltonian examples") {
  CHECK(distance(instantaneous_hamiltonian({1.0, 0.0, 0.0, 0.0, 1.0}), pauli::X) == 0.0);
  CHECK(distance(instantaneous_hamiltonian({0.0, 1.0, 0.0, 0.0, 1.0}),
                 (pauli::I + pauli::Z) * Complex(0.0, -1.0)) == 0.0);
  CHECK(distance(instantaneous_hamiltonian({1.0, 0.0, std::numbers::pi / 2, 0.0, 1.0}), pauli::Y) < 1e-15);
}

TEST_CASE("instantaneous Hamiltonian matches its Pauli expansion") {
  for (double phi : {-2.0, -0.4, 0.0, 0.9, 3.0}) {
    const SegmentParams s{0.8, 0.3, phi, -0.6, 1.0};
    const Matrix2 expected = pauli::X * (s.J * std::cos(phi)) + pauli::Y * (s.J * std::sin(phi)) +
                             pauli::Z * s.delta + (pauli::I + pauli::Z) * Complex(0.0, -s.Gamma);
    CHECK(distance(instantaneous_hamiltonian(s), expected) < 1e-15);
  }
}

TEST_CASE("period propagator of simple protocols") {
  const DrivingProtocol one({{1.0, 0.0, 0.4, 0.2, 0.7}}, 0);
  const Matrix2 u = period_propagator(one);
  CHECK(distance(u * u.adjoint(), Matrix2::identity()) < 1e-12);

  const DrivingProtocol tiny({{1.0, 0.5, 0.0, 0.0, 1e-300}, {2.0, 0.0, 1.0, 0.0, 1e-300}, {1.0, 0.0, 0.0, 0.0, 1e-300}}, 1);
  CHECK(distance(period_propagator(tiny), Matrix2::identity()) < 1e-15);
}

TEST_CASE("protocol validation") {
  CHECK_THROWS_AS(DrivingProtocol({}, 0), ContractError);
  CHECK_THROWS_AS(DrivingProtocol({{1.0, 0.0, 0.0, 0.0, 1.0}}, 1), ContractError);
  CHECK_THROWS_AS(DrivingProtocol({{1.0, 0.0, 0.0, 0.0, -1.0}}, 0), ContractError);
  CHECK_THROWS_AS(DrivingProtocol({{1.0, -0.1, 0.0, 0.0, 1.0}}, 0), ContractError);
  CHECK_THROWS_AS(canonical_protocol({APTParams{1.0, 0.5, 1.5, 0.0}}), ContractError);
  CHECK_THROWS_AS(canonical_protocol({APTParams{0.0, 0.5, 0.5, 0.0}}), ContractError);
  CHECK_THROWS_AS(canonical_protocol({APTParams{1.0, 0.5, 0.5, 0.0}, false, -1.0}), ContractError);
}

TEST_CASE("apt_hamiltonian examples") {
  CHECK(distance(apt_hamiltonian({1.0, 0.0, 1.0, 0.0}), -pauli::Z) == 0.0);
  const Matrix2 ep = apt_hamiltonian({1.0, 1.0, 0.5, 0.0});
  CHECK(distance(ep, (pauli::Z + pauli::X * kI + pauli::I * kI) * -0.5) < 1e-16);
  CHECK(eig2(ep).defective);
  const Eigen2 pres = eig2(apt_hamiltonian({1.0, 2.0, 0.5, 0.0}));
  CHECK(std::abs(pres.values[0].real()) < 1e-15);
  CHECK(std::abs(pres.values[1].real()) < 1e-15);
}

TEST_CASE("undetuned and detuned forms agree at zero detuning") {
  for (double g : kGammas) {
    for (double a : kAlphas) {
      const APTParams p{1.0, g, a, 0.0};
      const Matrix2 eq2 = apt_hamiltonian(p);
      const Matrix2 eq5 = detuned_hamiltonian(p);
      CHECK(distance(eq2, eq5) < 1e-14);
      const Eigen2 e2 = eig2(eq2);
      const Eigen2 e5 = eig2(eq5);
      CHECK(std::abs(e2.values[0] - e5.values[0]) + std::abs(e2.values[1] - e5.values[1]) < 1e-14);
    }
  }
}

TEST_CASE("property: canonical protocol reproduces the effective evolution") {
  for (double g : kGammas) {
    for (double a : kAlphas) {
      for (double d : {0.0, -1.3, 0.7}) {
        for (bool rev : {false, true}) {
          const APTParams p{1.0, g, a, d};
          const DrivingProtocol proto = canonical_protocol({p, rev});
          CHECK(proto.segments().size() == 3);
          CHECK(proto.alpha() == doctest::Approx(a).epsilon(1e-14));
          const Matrix2 expected = mat_exp(canonical_generator(p, rev) * Complex(0.0, -proto.period()));
          CHECK(distance(period_propagator(proto), expected) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("reversed generator is backward evolution up to a scalar decay") {
  const APTParams p{1.0, 2.0, 0.5, 0.4};
  const Matrix2 fwd = canonical_generator(p, false);
  const Matrix2 rev = canonical_generator(p, true);
  CHECK(distance(rev, -fwd - pauli::I * Complex(0.0, 2.0 * p.alpha * p.Gamma)) < 1e-15);
}

TEST_CASE("property: unitary limit") {
  for (double a : kAlphas) {
    const DrivingProtocol proto = canonical_protocol({APTParams{1.0, 0.0, a, 0.3}});
    const Matrix2 u = period_propagator(proto);
    CHECK(distance(u * u.adjoint(), Matrix2::identity()) < 1e-12);
    const Matrix2 hf = floquet_hamiltonian(proto);
    CHECK(hf.is_hermitian(1e-12));
  }
}

TEST_CASE("floquet_hamiltonian recovers the effective generator") {
  for (double g : kGammas) {
    const APTParams p{1.0, g, 0.5, 0.0};
    const DrivingProtocol proto = canonical_protocol({p});
    CHECK(distance(floquet_hamiltonian(proto), apt_hamiltonian(p)) < 1e-10 / proto.period());
  }
}

TEST_CASE("property: stroboscopic identity") {
  for (double g : {0.22, 0.57, 1.0, 9.29}) {
    const APTParams p{1.0, g, 0.5, 0.0};
    const DrivingProtocol proto = canonical_protocol({p});
    const Matrix2 u = period_propagator(proto);
    Matrix2 power = Matrix2::identity();
    for (int n = 1; n <= 50; ++n) {
      power = u * power;
      const Matrix2 ref = evolution(p, n * proto.period());
      CHECK(distance(power, ref) < 1e-8 * std::max(1.0, ref.frobenius_norm()));
    }
  }
}

TEST_CASE("default period keeps the Floquet log off its branch cut") {
  for (double g : kGammas) {
    for (double a : kAlphas) {
      const APTParams p{1.0, g, a, 2.0};
      CHECK(a * default_period(p) * std::max({p.J, p.Gamma, std::abs(p.delta)}) == doctest::Approx(0.5));
      CHECK_FALSE(mat_log_principal(period_propagator(canonical_protocol({p}))).on_branch_cut);
    }
  }
}
