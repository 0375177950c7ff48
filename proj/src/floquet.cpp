#include "aptfloquet/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace apt {

namespace {

void validate_segment(const SegmentParams& s) {
  if (!(s.duration > 0.0) || !std::isfinite(s.duration))
    throw ContractError("segment duration must be positive and finite");
  if (!(s.Gamma >= 0.0) || !std::isfinite(s.Gamma)) throw ContractError("segment Gamma must be >= 0");
  if (!std::isfinite(s.J) || !std::isfinite(s.phi) || !std::isfinite(s.delta))
    throw ContractError("segment parameters must be finite");
}

void validate_apt(const APTParams& p) {
  if (!(p.J > 0.0) || !std::isfinite(p.J)) throw ContractError("J must be > 0");
  if (!(p.Gamma >= 0.0) || !std::isfinite(p.Gamma)) throw ContractError("Gamma must be >= 0");
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) throw ContractError("alpha must lie in (0, 1)");
  if (!std::isfinite(p.delta)) throw ContractError("delta must be finite");
}

}  // namespace

DrivingProtocol::DrivingProtocol(std::vector<SegmentParams> segments, std::size_t middle)
    : segments_(std::move(segments)), middle_(middle), period_(0.0) {
  if (segments_.empty()) throw ContractError("protocol needs at least one segment");
  if (middle_ >= segments_.size()) throw ContractError("middle segment index out of range");
  for (const auto& s : segments_) {
    validate_segment(s);
    period_ += s.duration;
  }
}

Matrix2 instantaneous_hamiltonian(const SegmentParams& s) {
  using namespace pauli;
  return (X * std::cos(s.phi) + Y * std::sin(s.phi)) * s.J + Z * s.delta -
         (I + Z) * Complex(0.0, s.Gamma);
}

Matrix2 period_propagator(const DrivingProtocol& p) {
  Matrix2 u = Matrix2::identity();
  for (const auto& s : p.segments()) {
    u = mat_exp(instantaneous_hamiltonian(s) * Complex(0.0, -s.duration)) * u;
  }
  return u;
}

Matrix2 detuned_hamiltonian(const APTParams& p) {
  using namespace pauli;
  return (X * Complex(p.delta, -p.Gamma) - Z * p.J - I * Complex(0.0, p.Gamma)) * p.alpha;
}

Matrix2 apt_hamiltonian(const APTParams& p) {
  using namespace pauli;
  if (p.delta != 0.0) return detuned_hamiltonian(p);
  return (Z * p.J + X * Complex(0.0, p.Gamma) + I * Complex(0.0, p.Gamma)) * (-p.alpha);
}

Matrix2 canonical_generator(const APTParams& p, bool reversed) {
  using namespace pauli;
  if (!reversed) return apt_hamiltonian(p);
  return (X * Complex(-p.delta, p.Gamma) + Z * p.J - I * Complex(0.0, p.Gamma)) * p.alpha;
}

double default_period(const APTParams& p) {
  return 0.5 / (p.alpha * std::max({p.J, p.Gamma, std::abs(p.delta)}));
}

DrivingProtocol canonical_protocol(const CanonicalSpec& spec) {
  const APTParams& p = spec.params;
  validate_apt(p);
  const double period = spec.period.value_or(default_period(p));
  if (!(period > 0.0) || !std::isfinite(period)) throw ContractError("period must be positive");

  const double middle = p.alpha * period;
  const double edge = 0.5 * (1.0 - p.alpha) * period;
  // J_rot * edge = pi/4 makes each edge segment a quarter turn of the Bloch
  // vector about y.
  const double j_rot = std::numbers::pi / (4.0 * edge);
  const double sense = spec.reversed ? 1.0 : -1.0;
  const double half_pi = 0.5 * std::numbers::pi;

  DrivingProtocol protocol(
      {
          SegmentParams{j_rot, 0.0, sense * half_pi, 0.0, edge},
          SegmentParams{p.J, p.Gamma, 0.0, p.delta, middle},
          SegmentParams{j_rot, 0.0, -sense * half_pi, 0.0, edge},
      },
      1);

  const Matrix2 expected = mat_exp(canonical_generator(p, spec.reversed) * Complex(0.0, -period));
  const double err = distance(period_propagator(protocol), expected);
  if (!(err < 1e-10)) {
    std::ostringstream os;
    os << "canonical_protocol: propagator mismatch " << err << " (J=" << p.J << ", Gamma=" << p.Gamma
       << ", alpha=" << p.alpha << ", delta=" << p.delta << ")";
    throw InternalError(os.str());
  }
  return protocol;
}

Matrix2 floquet_hamiltonian(const DrivingProtocol& p) {
  return mat_log_principal(period_propagator(p)).value * Complex(0.0, 1.0 / p.period());
}

}  // namespace apt
