#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "aptfloquet/dynamics.hpp"
#include "aptfloquet/floquet.hpp"
#include "aptfloquet/numerics.hpp"

namespace apt {

/// Finite-shot sampling settings. shots == 0 is the infinite-shot sentinel:
/// every estimate equals its ideal value.
struct ShotConfig {
  std::uint32_t shots = 1000;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

/// Sub-stream channels of one observation point; the Philox substream is
/// point * 8 + channel.
enum class Channel : std::uint64_t {
  population = 0,
  population_flipped = 1,
  tomography_x = 2,
  tomography_y = 3,
  tomography_z = 4,
};

std::uint64_t substream_for(std::size_t point, Channel channel);

/// Fraction of `shots` Bernoulli(p) trials that succeed, drawn from the
/// given substream. Exact p when cfg.shots == 0.
double sample_population(double p, const ShotConfig& cfg, std::uint64_t substream = 0);

/// Raw-population readout. n_down is the dark fraction of a direct
/// fluorescence measurement; n_up is 1 minus the bright fraction after an
/// ideal pi flip. Population lost from the qubit reads bright.
struct PopulationReadout {
  double n_up = 0.0;
  double n_down = 0.0;
};
PopulationReadout read_populations(const Matrix2& rho_raw, const ShotConfig& cfg, std::size_t point = 0);

struct TomographyRecord {
  std::array<double, 3> expectation{};  // <sx>, <sy>, <sz>
  std::array<double, 3> standard_error{};
  double trace_estimate = 1.0;
  Matrix2 rho_hat;
  bool psd_projected = false;
};

/// Pauli-basis tomography of a density matrix. `rho` may be unnormalized;
/// the Pauli estimates refer to rho / tr(rho) while trace_estimate comes
/// from the population readout channels.
TomographyRecord simulate_tomography(const Matrix2& rho, const ShotConfig& cfg, std::size_t point = 0);

/// (I + x sx + y sy + z sz) / 2, with the Bloch vector shrunk to unit
/// length when it lies outside the ball (flagged).
Matrix2 reconstruct_from_pauli(const std::array<double, 3>& expectation, bool* projected = nullptr);

/// Propagated binomial standard error of a Pauli expectation estimate.
double pauli_standard_error(double expectation, std::uint32_t shots);

/// One sampled observation point, mirroring a trajectory point.
struct SampledPoint {
  double t = 0.0;
  PopulationReadout raw;
  double nbar_up = 0.0;
  double nbar_down = 0.0;
  TomographyRecord tomography;
  double entropy = 0.0;
};

std::vector<SampledPoint> sample_trajectory(const Trajectory& traj, const ShotConfig& cfg);

/// Time series of the raw trace N(t) = n_up + n_down with optional
/// per-point standard deviations (empty = unweighted). A non-zero `shots`
/// lets the fit replace the sampled variances by binomial variances of the
/// fitted curve.
struct TraceSeries {
  std::vector<double> t;
  std::vector<double> value;
  std::vector<double> sigma;
  std::uint32_t shots = 0;
};

TraceSeries trace_series(const Trajectory& traj);
TraceSeries trace_series(const std::vector<SampledPoint>& sampled, std::uint32_t shots);

enum class PhaseHint { broken, preserving };

enum class FitModel {
  two_mode,     // a e^{2 ip t} + b e^{2 im t} + e^{(ip+im) t}(c1 cos wt + c2 sin wt)
  equal_decay,  // e^{2 g t}(a + c1 cos wt + c2 sin wt)
  merged,       // e^{2 g t}(a + b t + c t^2), coalesced modes
};

const char* to_string(FitModel m);

struct FitStderr {
  double re_gap = 0.0;
  double im_plus = 0.0;
  double im_minus = 0.0;
};

/// Eigenvalue estimates from a trace series. im_plus >= im_minus are the
/// imaginary parts of the two eigenvalues, re_gap = |Re(E+ - E-)|.
struct FitResult {
  double re_gap = 0.0;
  double im_plus = 0.0;
  double im_minus = 0.0;
  FitStderr std_error;
  double residual_rms = 0.0;
  bool converged = false;
  bool degenerate = false;
  FitModel model = FitModel::two_mode;
  int iterations = 0;
  std::vector<double> parameters;
};

struct FitOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-10;
  int grid_points = 8;
  int restarts = 6;
};

/// Sampling design for eigenvalue fits: |down> evolved under the canonical
/// protocol with the given period, observed every period up to t_max.
struct FitDesign {
  double period = 0.025;
  double t_max = 20.0;
};

Trajectory fit_trajectory(const APTParams& params, const FitDesign& design = {});

/// Damped Gauss-Newton (Levenberg-Marquardt) fit of the two-mode trace
/// model, seeded from a coarse grid over (im_plus, re_gap). Reduced models
/// are selected when the extra parameters do not improve the fit
/// significantly; `degenerate` marks the coalesced-mode model.
FitResult fit_eigenvalues(const TraceSeries& series, PhaseHint hint, const FitOptions& options = {});

}  // namespace apt
