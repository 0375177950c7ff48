#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "aptfloquet/dynamics.hpp"
#include "aptfloquet/floquet.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace apt;

namespace {

const Vector2 kPlusX{std::sqrt(0.5), std::sqrt(0.5)};
const Vector2 kMinusX{-std::sqrt(0.5), std::sqrt(0.5)};

Trajectory canonical_run(double gamma, const Matrix2& rho0, double alpha_t, double alpha = 0.5) {
  const DrivingProtocol p = canonical_protocol({APTParams{1.0, gamma, alpha, 0.0}});
  const auto n = static_cast<std::size_t>(std::ceil(alpha_t / (alpha * p.period())));
  const auto times = stroboscopic_times(p, n);
  return evolve_raw(p, rho0, times);
}

int count_extrema(const std::vector<double>& v) {
  int count = 0;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    const double a = v[i] - v[i - 1];
    const double b = v[i + 1] - v[i];
    if ((a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0)) ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("mixed state validation") {
  CHECK_THROWS_AS(MixedState(basis::up, basis::down, 1.2), ContractError);
  CHECK_THROWS_AS(MixedState(Vector2{1.0, 1.0}, basis::down, 0.5), ContractError);
  const MixedState fig3a(kPlusX, kMinusX, 0.5);
  CHECK(distance(fig3a.rho0(), pauli::I * 0.5) < 1e-15);
  const MixedState fig3b(basis::down, basis::up * -1.0, 0.5);
  CHECK(distance(fig3b.rho0(), pauli::I * 0.5) == 0.0);
}

TEST_CASE("normalize_rho") {
  const Matrix2 rho = Matrix2::projector(kPlusX);
  CHECK(distance(normalize_rho(rho), rho) < 1e-15);
  CHECK_THROWS_AS(normalize_rho(rho * 1e-15), StateDecayedError);
  try {
    normalize_rho(rho * 1e-20);
  } catch (const StateDecayedError& e) {
    CHECK(e.trace() == doctest::Approx(1e-20));
  }
}

TEST_CASE("property: normalize scale invariance") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> logc(-10.0, 10.0);
  for (int i = 0; i < 300; ++i) {
    const Matrix2 rho = test::random_density(rng);
    const double c = std::pow(10.0, logc(rng));
    CHECK(distance(normalize_rho(rho * c), normalize_rho(rho)) < 1e-15);
  }
}

TEST_CASE("von Neumann entropy examples") {
  CHECK(von_neumann_entropy(Matrix2::projector(basis::down)) == 0.0);
  CHECK(von_neumann_entropy(pauli::I * 0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(von_neumann_entropy(MixedState(kPlusX, kMinusX, 0.5).rho0()) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(von_neumann_entropy(Matrix2{0.75, 0.0, 0.0, 0.25}) ==
        doctest::Approx(-(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25))));
  CHECK_THROWS_AS(von_neumann_entropy(Matrix2{1.1, 0.0, 0.0, -0.1}), DomainError);
  CHECK_THROWS_AS(von_neumann_entropy(Matrix2{0.5, 1.0, 0.0, 0.5}), DomainError);
  CHECK(von_neumann_entropy(Matrix2{1.0 + 1e-9, 0.0, 0.0, -1e-9}) == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("property: entropy bounds") {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 500; ++i) {
    const double s = von_neumann_entropy(test::random_density(rng));
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("evolve_raw rejects off-grid times and bad states") {
  const DrivingProtocol p = canonical_protocol({APTParams{1.0, 0.5, 0.5, 0.0}});
  const Matrix2 rho0 = Matrix2::projector(basis::down);
  const std::vector<double> off{0.0, 0.5 * p.period()};
  CHECK_THROWS_AS(evolve_raw(p, rho0, off), ContractError);
  const std::vector<double> desc{p.period(), 0.0};
  CHECK_THROWS_AS(evolve_raw(p, rho0, desc), ContractError);
  const std::vector<double> ok{0.0};
  CHECK_THROWS_AS(evolve_raw(p, rho0 * 2.0, ok), ContractError);
  CHECK_THROWS_AS(evolve_raw(p, Matrix2{0.5, 0.5, 0.0, 0.5}, ok), ContractError);
}

TEST_CASE("static generators with gain skip the trace check") {
  const Matrix2 gain = pauli::Z * Complex(0.0, 1.0);
  const std::vector<double> t{0.0, 1.0};
  const Trajectory tr = evolve_raw(gain, Matrix2::projector(basis::up), t);
  CHECK(tr[1].rho_raw.trace().real() == doctest::Approx(std::exp(2.0)));
}

TEST_CASE("property: unitary limit preserves trace and entropy") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 10; ++k) {
    const Matrix2 rho0 = test::random_density(rng);
    const DrivingProtocol p = canonical_protocol({APTParams{1.0, 0.0, 0.5, 0.3 * k}});
    const Trajectory tr = evolve_raw(p, rho0, stroboscopic_times(p, 200, 5));
    for (const auto& pt : tr.points()) {
      CHECK(std::abs(pt.rho_raw.trace().real() - rho0.trace().real()) < 1e-12);
      CHECK(std::abs(pt.entropy - tr[0].entropy) < 1e-10);
    }
  }
}

TEST_CASE("property: trace monotonicity and trajectory invariants") {
  std::mt19937_64 rng(8);
  for (double g : {0.1, 0.57, 1.0, 2.0, 9.29}) {
    for (double d : {0.0, 0.8}) {
      const Matrix2 rho0 = test::random_density(rng);
      const DrivingProtocol p = canonical_protocol({APTParams{1.0, g, 0.5, d}});
      const Trajectory tr = evolve_raw(p, rho0, stroboscopic_times(p, 30));
      double prev = 2.0;
      for (const auto& pt : tr.points()) {
        const double t = pt.rho_raw.trace().real();
        CHECK(t <= prev * (1.0 + 1e-12));
        prev = t;
        CHECK(pt.rho_raw.is_hermitian(1e-10 * std::max(1e-300, t)));
        CHECK(std::abs(pt.rho_bar.trace() - 1.0) < 1e-12);
        CHECK(std::abs(pt.nbar_up + pt.nbar_down - 1.0) < 1e-12);
        CHECK(pt.entropy >= 0.0);
        CHECK(pt.entropy <= 1.0);
      }
    }
  }
}

TEST_CASE("protocol and static-generator trajectories coincide stroboscopically") {
  const APTParams params{1.0, 0.57, 0.5, 0.0};
  const DrivingProtocol p = canonical_protocol({params});
  const Matrix2 rho0 = Matrix2::projector(basis::down);
  const auto times = stroboscopic_times(p, 40);
  const Trajectory a = evolve_raw(p, rho0, times);
  const Trajectory b = evolve_raw(apt_hamiltonian(params), rho0, times, 0.5);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(distance(a[i].rho_bar, b[i].rho_bar) < 1e-9);
}

TEST_CASE("preserving phase: populations approach one half monotonically") {
  const Trajectory tr = canonical_run(9.29, Matrix2::projector(basis::down), 18.2);
  const double frozen[] = {0.0, 0.1759, 0.3667, 0.4500, 0.4815, 0.4931};
  for (int i = 0; i < 6; ++i) CHECK(tr[static_cast<std::size_t>(i)].nbar_up == doctest::Approx(frozen[i]).epsilon(1e-3));
  for (std::size_t i = 2; i < tr.size(); ++i) CHECK(tr[i].nbar_up >= tr[i - 1].nbar_up - 1e-15);
  CHECK(std::abs(tr.points().back().nbar_up - 0.5) < 1e-12);
}

TEST_CASE("preserving phase: deviation decays at twice alpha kappa") {
  const double g = 1.5;
  const double alpha = 0.5;
  const Trajectory tr = canonical_run(g, Matrix2::projector(basis::down), 20.0, alpha);
  std::vector<double> t, y;
  for (const auto& pt : tr.points()) {
    const double dev = std::abs(pt.nbar_up - 0.5);
    if (dev < 1e-5 && dev > 1e-9) {
      t.push_back(pt.t);
      y.push_back(std::log(dev));
    }
  }
  REQUIRE(t.size() > 10);
  const double n = static_cast<double>(t.size());
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    st += t[i];
    sy += y[i];
    stt += t[i] * t[i];
    sty += t[i] * y[i];
  }
  const double slope = (n * sty - st * sy) / (n * stt - st * st);
  const double expected = -2.0 * alpha * std::sqrt(g * g - 1.0);
  CHECK(std::abs(slope / expected - 1.0) < 0.05);
}

TEST_CASE("broken phase: bounded oscillation") {
  const double g = 0.57;
  const double alpha = 0.5;
  const double window = 4.0 * std::numbers::pi / (alpha * std::sqrt(1.0 - g * g));
  const Trajectory tr = canonical_run(g, Matrix2::projector(basis::down), alpha * window, alpha);
  std::vector<double> nb;
  for (const auto& pt : tr.points()) nb.push_back(pt.nbar_up);
  CHECK(count_extrema(nb) == 7);
  CHECK(*std::min_element(nb.begin(), nb.end()) >= 0.0);
  CHECK(*std::max_element(nb.begin(), nb.end()) == doctest::Approx(0.245).epsilon(0.01));
}

TEST_CASE("entropy series: broken phase information backflow") {
  const DrivingProtocol p = canonical_protocol({APTParams{1.0, 0.22, 0.5, 0.0}});
  const auto n = static_cast<std::size_t>(std::ceil(20.0 / (0.5 * p.period())));
  const auto s = entropy_series(p, MixedState(kPlusX, kMinusX, 0.5), n);
  CHECK(s.front().second == doctest::Approx(1.0).epsilon(1e-12));
  std::size_t imin = 0;
  for (std::size_t i = 0; i < s.size() && 0.5 * s[i].first <= 12.0; ++i) {
    if (s[i].second < s[imin].second) imin = i;
  }
  CHECK(s[imin].second == doctest::Approx(0.869215).epsilon(1e-5));
  CHECK(0.5 * s[imin].first == doctest::Approx(8.0).epsilon(1e-3));
  double recovery = 0.0;
  for (std::size_t i = imin; i < s.size(); ++i) recovery = std::max(recovery, s[i].second);
  CHECK(recovery > 0.99);
}

TEST_CASE("entropy series: preserving phase decays monotonically") {
  const DrivingProtocol p = canonical_protocol({APTParams{1.0, 9.29, 0.5, 0.0}});
  const auto n = static_cast<std::size_t>(std::ceil(18.2 / (0.5 * p.period())));
  const auto s = entropy_series(p, MixedState(basis::down, basis::up * -1.0, 0.5), n);
  CHECK(s.front().second == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i].second <= s[i - 1].second + 1e-12);
  CHECK(s.back().second < 0.01);
}

TEST_CASE("entropy is constant without dissipation") {
  const DrivingProtocol p = canonical_protocol({APTParams{1.0, 0.0, 0.5, 0.2}});
  const auto s = entropy_series(p, MixedState(kPlusX, basis::down, 0.3), 100);
  for (const auto& [t, v] : s) CHECK(std::abs(v - s.front().second) < 1e-10);
}

TEST_CASE("property: the normalized limit is pure and equals the slow eigenvector") {
  std::mt19937_64 rng(9);
  for (double g : {2.0, 3.0, 9.29}) {
    const APTParams params{1.0, g, 0.5, 0.0};
    const DrivingProtocol p = canonical_protocol({params});
    const Matrix2 target = Matrix2::projector(analytic_eigenstates(params).first);
    for (int k = 0; k < 5; ++k) {
      const Trajectory tr = evolve_raw(p, test::random_density(rng), stroboscopic_times(p, 200, 200));
      const Matrix2 limit = tr.points().back().rho_bar;
      CHECK(std::abs((limit * limit).trace() - 1.0) < 1e-10);
      CHECK(distance(limit, target) < 1e-6);
    }
  }
}

TEST_CASE("gauge, phase and overlap helpers") {
  const Vector2 v{Complex(0.0, 0.6), Complex(-0.8, 0.0)};
  const Vector2 f = fix_gauge(v);
  CHECK(f.up.imag() == 0.0);
  CHECK(f.up.real() == doctest::Approx(0.6));
  CHECK(relative_phase(f) == doctest::Approx(std::numbers::pi / 2));
  CHECK(relative_phase(Vector2{1.0, -1.0}) == doctest::Approx(std::numbers::pi));
  const Vector2 d = fix_gauge(Vector2{0.0, Complex(0.0, -1.0)});
  CHECK(d.down == Complex(1.0));
  CHECK(eigenstate_overlap(kPlusX, kPlusX) == doctest::Approx(1.0));
  CHECK(eigenstate_overlap(basis::up, basis::down) == 0.0);
  CHECK_THROWS_AS(eigenstate_overlap(Vector2{1.0, 1.0}, basis::up), ContractError);
}

TEST_CASE("analytic eigenstates: equal weights and overlap J/Gamma") {
  for (double g : {1.05, std::sqrt(2.0), 2.0, 9.29}) {
    const auto [slow, fast] = analytic_eigenstates({1.0, g, 0.5, 0.0});
    CHECK(std::norm(slow.up) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::norm(fast.up) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(eigenstate_overlap(slow, fast) == doctest::Approx(1.0 / g).epsilon(1e-12));
  }
}

TEST_CASE("asymptotic eigenstates match the analytic ones") {
  CHECK_THROWS_AS(asymptotic_eigenstates(1.0, 1.0, 0.5, 100), PhaseDomainError);
  CHECK_THROWS_AS(asymptotic_eigenstates(1.0, 0.57, 0.5, 100), PhaseDomainError);
  for (double g : {1.2, 2.0, 9.29}) {
    const EigenstateReport r = asymptotic_eigenstates(1.0, g, 0.5, 5000);
    CHECK(r.converged);
    CHECK(r.pop_up_plus == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(r.pop_up_minus == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(r.overlap == doctest::Approx(1.0 / g).epsilon(1e-6));
    const auto [slow, fast] = analytic_eigenstates({1.0, g, 0.5, 0.0});
    CHECK(distance(Matrix2::projector(r.phi_plus), Matrix2::projector(slow)) < 1e-6);
    CHECK(distance(Matrix2::projector(r.phi_minus), Matrix2::projector(fast)) < 1e-6);
    CHECK(r.theta_plus > -std::numbers::pi);
    CHECK(r.theta_plus <= std::numbers::pi);
  }
}

TEST_CASE("asymptotic eigenstates report non-convergence near the exceptional point") {
  const EigenstateReport r = asymptotic_eigenstates(1.0, 1.0001, 0.5, 20);
  CHECK_FALSE(r.converged);
  CHECK(r.residual > 1e-8);
  CHECK(r.periods_used == 20);
}
