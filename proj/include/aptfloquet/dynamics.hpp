#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "aptfloquet/floquet.hpp"
#include "aptfloquet/numerics.hpp"

namespace apt {

/// The unnormalized state has decayed below the normalization threshold.
class StateDecayedError : public DomainError {
 public:
  explicit StateDecayedError(double trace);
  double trace() const { return trace_; }

 private:
  double trace_;
};

/// Asymptotic eigenstate extraction requested outside the
/// symmetry-preserving phase (Gamma <= J).
class PhaseDomainError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// beta |psi1><psi1| + (1 - beta) |psi2><psi2| with unit-norm psi1, psi2.
class MixedState {
 public:
  MixedState(Vector2 psi1, Vector2 psi2, double beta);
  static MixedState pure(Vector2 psi) { return {psi, psi, 1.0}; }

  const Vector2& psi1() const { return psi1_; }
  const Vector2& psi2() const { return psi2_; }
  double beta() const { return beta_; }
  Matrix2 rho0() const;

 private:
  Vector2 psi1_;
  Vector2 psi2_;
  double beta_;
};

struct TrajectoryPoint {
  double t = 0.0;
  Matrix2 rho_raw;
  Matrix2 rho_bar;
  double n_up = 0.0;
  double n_down = 0.0;
  double nbar_up = 0.0;
  double nbar_down = 0.0;
  double entropy = 0.0;
};

/// Time-stamped raw density matrices with their normalized observables.
/// `alpha` scales the time axis (alpha t) for reporting.
class Trajectory {
 public:
  Trajectory(std::vector<TrajectoryPoint> points, double alpha);

  const std::vector<TrajectoryPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  const TrajectoryPoint& operator[](std::size_t i) const { return points_[i]; }
  double alpha() const { return alpha_; }

  /// Builds a point (derived observables included) from a raw matrix.
  static TrajectoryPoint make_point(double t, const Matrix2& rho_raw);

 private:
  std::vector<TrajectoryPoint> points_;
  double alpha_;
};

/// Observation times k * every * T for k = 0 .. floor(n_periods / every).
std::vector<double> stroboscopic_times(const DrivingProtocol& p, std::size_t n_periods,
                                       std::size_t every = 1);

/// rho(t) = U(t) rho0 U(t)^dagger, U(t) = (U_T)^n at t = n T. Throws
/// ContractError for times off the stroboscopic grid.
Trajectory evolve_raw(const DrivingProtocol& protocol, const Matrix2& rho0, std::span<const double> times);

/// Same with U(t) = exp(-i H t) for a static generator.
Trajectory evolve_raw(const Matrix2& generator, const Matrix2& rho0, std::span<const double> times,
                      double alpha = 1.0);

/// rho / tr(rho). Throws StateDecayedError when tr(rho) <= 1e-14.
Matrix2 normalize_rho(const Matrix2& rho);

/// -Tr(rho log2 rho) in bits.
double von_neumann_entropy(const Matrix2& rho_bar);

/// (t, S(t)) at every stroboscopic time up to n_periods.
std::vector<std::pair<double, double>> entropy_series(const DrivingProtocol& protocol, const MixedState& mixed,
                                                      std::size_t n_periods);

struct EigenstateReport {
  Vector2 phi_plus;
  Vector2 phi_minus;
  double pop_up_plus = 0.0;
  double pop_up_minus = 0.0;
  double theta_plus = 0.0;
  double theta_minus = 0.0;
  double overlap = 0.0;
  bool converged = false;
  double residual = 0.0;
  std::size_t periods_used = 0;
};

/// Multiplies by a phase so that c_up is real and non-negative (or c_down
/// when |c_up| < 1e-12).
Vector2 fix_gauge(const Vector2& v);

/// arg(c_down) - arg(c_up), wrapped to (-pi, pi].
double relative_phase(const Vector2& v);

/// |<minus|plus>|, clamped to [0, 1]. Both inputs must be unit norm.
double eigenstate_overlap(const Vector2& phi_plus, const Vector2& phi_minus);

/// Slow (larger Im E) and fast eigenvectors of the effective Hamiltonian,
/// gauge fixed. Closed-form reference for the asymptotic extraction.
std::pair<Vector2, Vector2> analytic_eigenstates(const APTParams& p);

/// Evolves |down> under the canonical protocol and under its reversed
/// counterpart until the normalized state stops changing, and reads the two
/// eigenstates off the dominant eigenvectors of the limits.
EigenstateReport asymptotic_eigenstates(double J, double Gamma, double alpha, std::size_t horizon_periods,
                                        std::optional<double> period = std::nullopt);

}  // namespace apt
