#include "aptfloquet/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

namespace apt {

namespace {

// Eigenvalues of the Hermitian part of rho, ascending.
std::pair<double, double> hermitian_eigenvalues(const Matrix2& rho) {
  const double a = rho(0, 0).real();
  const double d = rho(1, 1).real();
  const Complex b = 0.5 * (rho(0, 1) + std::conj(rho(1, 0)));
  const double mean = 0.5 * (a + d);
  const double r = std::hypot(0.5 * (a - d), std::abs(b));
  return {mean - r, mean + r};
}

void validate_rho0(const Matrix2& rho0) {
  if (!rho0.is_finite()) throw DomainError("initial density matrix has non-finite entries");
  if (!rho0.is_hermitian(1e-10)) throw ContractError("initial density matrix must be Hermitian");
  const auto [lo, hi] = hermitian_eigenvalues(rho0);
  if (lo < -1e-10) throw ContractError("initial density matrix must be positive semidefinite");
  if (rho0.trace().real() > 1.0 + 1e-12) throw ContractError("initial density matrix trace exceeds 1");
  (void)hi;
}

void validate_times(std::span<const double> times) {
  double prev = 0.0;
  for (double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ContractError("times must be finite and non-negative");
    if (t < prev) throw ContractError("times must be ascending");
    prev = t;
  }
}

// Anti-Hermitian part (H - H^dagger)/(2i) negative semidefinite: the norm
// can only shrink.
bool is_dissipative(const Matrix2& h) {
  const Matrix2 k = (h - h.adjoint()) * Complex(0.0, -0.5);
  return hermitian_eigenvalues(k).second <= 1e-12 * std::max(1.0, h.frobenius_norm());
}

void check_trace(double tr0, double tr, double t) {
  if (tr > tr0 * (1.0 + 1e-8) + 1e-15) {
    std::ostringstream os;
    os << "trace grew from " << tr0 << " to " << tr << " at t=" << t << " under a dissipative generator";
    throw InternalError(os.str());
  }
}

Matrix2 sandwich(const Matrix2& u, const Matrix2& rho) { return u * rho * u.adjoint(); }

double wrap_phase(double x) {
  double y = std::remainder(x, 2.0 * std::numbers::pi);
  if (y <= -std::numbers::pi) y += 2.0 * std::numbers::pi;
  return y;
}

// Dominant eigenvector of a Hermitian matrix.
Vector2 dominant_vector(const Matrix2& rho) {
  const Eigen2 e = eig2(rho);
  return e.vectors[0];
}

struct Limit {
  Vector2 state;
  bool converged = false;
  double residual = 0.0;
  std::size_t periods = 0;
};

// Power iteration on rho -> U rho U^dagger / tr, which converges to the
// projector on the slowest-decaying right eigenvector of U.
Limit normalized_limit(const DrivingProtocol& protocol, std::size_t horizon) {
  const Matrix2 u = period_propagator(protocol);
  const Matrix2 ud = u.adjoint();
  Matrix2 rho = Matrix2::projector(basis::down);
  Limit out;
  out.residual = std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n <= horizon; ++n) {
    Matrix2 next = normalize_rho(u * rho * ud);
    next = (next + next.adjoint()) * 0.5;
    out.residual = distance(next, rho);
    out.periods = n;
    rho = next;
    if (out.residual < 1e-8) {
      out.converged = true;
      break;
    }
  }
  out.state = fix_gauge(dominant_vector(rho));
  return out;
}

}  // namespace

StateDecayedError::StateDecayedError(double trace)
    : DomainError("state fully decayed: trace " + std::to_string(trace) + " below 1e-14"), trace_(trace) {}

MixedState::MixedState(Vector2 psi1, Vector2 psi2, double beta) : psi1_(psi1), psi2_(psi2), beta_(beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ContractError("mixture weight beta must lie in [0, 1]");
  if (std::abs(psi1.norm() - 1.0) > 1e-12 || std::abs(psi2.norm() - 1.0) > 1e-12)
    throw ContractError("mixture components must be normalized");
}

Matrix2 MixedState::rho0() const {
  return Matrix2::projector(psi1_) * beta_ + Matrix2::projector(psi2_) * (1.0 - beta_);
}

Trajectory::Trajectory(std::vector<TrajectoryPoint> points, double alpha)
    : points_(std::move(points)), alpha_(alpha) {}

TrajectoryPoint Trajectory::make_point(double t, const Matrix2& rho_raw) {
  TrajectoryPoint p;
  p.t = t;
  p.rho_raw = rho_raw;
  p.rho_bar = normalize_rho(rho_raw);
  p.n_up = rho_raw(0, 0).real();
  p.n_down = rho_raw(1, 1).real();
  p.nbar_up = p.rho_bar(0, 0).real();
  p.nbar_down = p.rho_bar(1, 1).real();
  p.entropy = von_neumann_entropy(p.rho_bar);
  return p;
}

std::vector<double> stroboscopic_times(const DrivingProtocol& p, std::size_t n_periods, std::size_t every) {
  if (every == 0) throw ContractError("sampling stride must be >= 1");
  std::vector<double> out;
  for (std::size_t n = 0; n <= n_periods; n += every) out.push_back(static_cast<double>(n) * p.period());
  return out;
}

Trajectory evolve_raw(const DrivingProtocol& protocol, const Matrix2& rho0, std::span<const double> times) {
  validate_rho0(rho0);
  validate_times(times);
  const double period = protocol.period();
  const Matrix2 u = period_propagator(protocol);
  const double tr0 = rho0.trace().real();

  std::vector<TrajectoryPoint> points;
  points.reserve(times.size());
  Matrix2 power = Matrix2::identity();
  long long reached = 0;
  for (double t : times) {
    const double k = std::round(t / period);
    if (std::abs(t - k * period) > 1e-9 * std::max(1.0, t)) {
      std::ostringstream os;
      os << "time " << t << " is not a multiple of the drive period " << period;
      throw ContractError(os.str());
    }
    for (const auto n = static_cast<long long>(k); reached < n; ++reached) power = u * power;
    const Matrix2 rho = sandwich(power, rho0);
    check_trace(tr0, rho.trace().real(), t);
    points.push_back(Trajectory::make_point(t, rho));
  }
  return Trajectory(std::move(points), protocol.alpha());
}

Trajectory evolve_raw(const Matrix2& generator, const Matrix2& rho0, std::span<const double> times, double alpha) {
  if (!generator.is_finite()) throw DomainError("generator has non-finite entries");
  validate_rho0(rho0);
  validate_times(times);
  const bool dissipative = is_dissipative(generator);
  const double tr0 = rho0.trace().real();

  std::vector<TrajectoryPoint> points;
  points.reserve(times.size());
  for (double t : times) {
    const Matrix2 rho = sandwich(mat_exp(generator * Complex(0.0, -t)), rho0);
    if (dissipative) check_trace(tr0, rho.trace().real(), t);
    points.push_back(Trajectory::make_point(t, rho));
  }
  return Trajectory(std::move(points), alpha);
}

Matrix2 normalize_rho(const Matrix2& rho) {
  const double tr = rho.trace().real();
  if (!(tr > 1e-14)) throw StateDecayedError(tr);
  return rho / tr;
}

double von_neumann_entropy(const Matrix2& rho_bar) {
  if (!rho_bar.is_finite()) throw DomainError("von_neumann_entropy: non-finite entries");
  if (!rho_bar.is_hermitian(1e-10)) throw DomainError("von_neumann_entropy: matrix is not Hermitian");
  if (std::abs(rho_bar.trace() - 1.0) > 1e-10) throw DomainError("von_neumann_entropy: trace is not 1");
  auto [lo, hi] = hermitian_eigenvalues(rho_bar);
  if (lo < -1e-8) throw DomainError("von_neumann_entropy: negative eigenvalue " + std::to_string(lo));
  double s = 0.0;
  for (double lam : {lo, hi}) {
    lam = std::clamp(lam, 0.0, 1.0);
    if (lam > 0.0) s -= lam * std::log2(lam);
  }
  return std::clamp(s, 0.0, 1.0);
}

std::vector<std::pair<double, double>> entropy_series(const DrivingProtocol& protocol, const MixedState& mixed,
                                                      std::size_t n_periods) {
  const auto times = stroboscopic_times(protocol, n_periods);
  const Trajectory traj = evolve_raw(protocol, mixed.rho0(), times);
  std::vector<std::pair<double, double>> out;
  out.reserve(traj.size());
  for (const auto& p : traj.points()) out.emplace_back(p.t, p.entropy);
  return out;
}

Vector2 fix_gauge(const Vector2& v) {
  const Complex pivot = std::abs(v.up) >= 1e-12 ? v.up : v.down;
  const double mag = std::abs(pivot);
  if (mag == 0.0) return v;
  return v * (std::conj(pivot) / mag);
}

double relative_phase(const Vector2& v) {
  const double up = std::abs(v.up) > 0.0 ? std::arg(v.up) : 0.0;
  const double down = std::abs(v.down) > 0.0 ? std::arg(v.down) : 0.0;
  return wrap_phase(down - up);
}

double eigenstate_overlap(const Vector2& phi_plus, const Vector2& phi_minus) {
  if (std::abs(phi_plus.norm() - 1.0) > 1e-10 || std::abs(phi_minus.norm() - 1.0) > 1e-10)
    throw ContractError("eigenstate_overlap: inputs must be unit norm");
  return std::min(1.0, std::abs(inner(phi_minus, phi_plus)));
}

std::pair<Vector2, Vector2> analytic_eigenstates(const APTParams& p) {
  const Eigen2 e = eig2(apt_hamiltonian(p));
  const bool first_slower = e.values[0].imag() >= e.values[1].imag();
  const Vector2& slow = first_slower ? e.vectors[0] : e.vectors[1];
  const Vector2& fast = first_slower ? e.vectors[1] : e.vectors[0];
  return {fix_gauge(slow), fix_gauge(fast)};
}

EigenstateReport asymptotic_eigenstates(double J, double Gamma, double alpha, std::size_t horizon_periods,
                                        std::optional<double> period) {
  if (!(Gamma > J)) {
    std::ostringstream os;
    os << "asymptotic eigenstates need the symmetry-preserving phase Gamma > J (got Gamma/J = " << Gamma / J << ")";
    throw PhaseDomainError(os.str());
  }
  if (horizon_periods == 0) throw ContractError("horizon must be at least one period");

  CanonicalSpec spec{APTParams{J, Gamma, alpha, 0.0}, false, period, "1/J"};
  const Limit plus = normalized_limit(canonical_protocol(spec), horizon_periods);
  spec.reversed = true;
  const Limit minus = normalized_limit(canonical_protocol(spec), horizon_periods);

  EigenstateReport r;
  r.phi_plus = plus.state;
  r.phi_minus = minus.state;
  r.pop_up_plus = std::norm(r.phi_plus.up);
  r.pop_up_minus = std::norm(r.phi_minus.up);
  r.theta_plus = relative_phase(r.phi_plus);
  r.theta_minus = relative_phase(r.phi_minus);
  r.overlap = eigenstate_overlap(r.phi_plus, r.phi_minus);
  r.converged = plus.converged && minus.converged;
  r.residual = std::max(plus.residual, minus.residual);
  r.periods_used = std::max(plus.periods, minus.periods);
  return r;
}

}  // namespace apt
