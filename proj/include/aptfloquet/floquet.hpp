#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aptfloquet/numerics.hpp"

namespace apt {

/// Raised when caller-supplied parameters violate an operation's
/// preconditions (negative durations, alpha outside (0,1), ...).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One square-wave segment of the drive. Rates share the unit of J; the
/// duration is in the reciprocal unit.
struct SegmentParams {
  double J = 0.0;
  double Gamma = 0.0;
  double phi = 0.0;
  double delta = 0.0;
  double duration = 0.0;
};

/// Ordered sequence of segments making up one drive period. Segment 0 is
/// applied first. `middle` names the segment whose share of the period
/// defines alpha.
class DrivingProtocol {
 public:
  DrivingProtocol(std::vector<SegmentParams> segments, std::size_t middle);

  const std::vector<SegmentParams>& segments() const { return segments_; }
  std::size_t middle_index() const { return middle_; }
  double period() const { return period_; }
  double alpha() const { return segments_[middle_].duration / period_; }

 private:
  std::vector<SegmentParams> segments_;
  std::size_t middle_;
  double period_;
};

/// Parameters of the effective Floquet Hamiltonian.
struct APTParams {
  double J = 1.0;
  double Gamma = 0.0;
  double alpha = 0.5;
  double delta = 0.0;
};

/// Settings for the canonical three-segment construction.
struct CanonicalSpec {
  APTParams params;
  bool reversed = false;
  /// Drive period; when unset, T = 0.5 / (alpha * max(J, Gamma, |delta|)).
  std::optional<double> period;
  /// Axis label only; the core is dimensionless.
  std::string time_unit = "1/J";
};

/// H = J e^{-i phi sz} sx - 2i Gamma |up><up| + delta sz
///   = J (cos phi sx + sin phi sy) + delta sz - i Gamma (I + sz).
Matrix2 instantaneous_hamiltonian(const SegmentParams& s);

/// U_T = e^{-i H_n T_n} ... e^{-i H_1 T_1}.
Matrix2 period_propagator(const DrivingProtocol& p);

/// -alpha (J sz + i Gamma sx + i Gamma I) for delta = 0, otherwise
/// alpha [(delta - i Gamma) sx - J sz - i Gamma I]. The two coincide at
/// delta = 0.
Matrix2 apt_hamiltonian(const APTParams& p);

/// Same matrix, always built from the detuned form.
Matrix2 detuned_hamiltonian(const APTParams& p);

/// Default drive period for the canonical protocol.
double default_period(const APTParams& p);

/// Three-segment protocol: a pi/2 rotation about y (Gamma = 0), the
/// dissipative middle segment (phi = 0, duration alpha T), and the inverse
/// rotation. Its period propagator equals exp(-i H_F T) with H_F from
/// apt_hamiltonian; this is asserted at construction (InternalError on
/// failure). `reversed` flips the sign of phi in the rotation segments,
/// giving time-reversed effective dynamics up to a scalar decay.
DrivingProtocol canonical_protocol(const CanonicalSpec& spec);

/// Effective generator H_F = i log(U_T) / T of any protocol.
Matrix2 floquet_hamiltonian(const DrivingProtocol& p);

/// Generator realized by the canonical protocol: apt_hamiltonian for the
/// forward drive, alpha[(-delta + i Gamma) sx + J sz - i Gamma I] when
/// reversed.
Matrix2 canonical_generator(const APTParams& p, bool reversed);

}  // namespace apt
