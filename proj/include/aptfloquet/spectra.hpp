#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "aptfloquet/floquet.hpp"
#include "aptfloquet/numerics.hpp"

namespace apt {

/// Eigenvalue pair of the effective Hamiltonian. e_plus + e_minus = -2i alpha Gamma.
struct EigenPair {
  Complex e_plus;
  Complex e_minus;
};

/// alpha(-i Gamma +- sqrt(J^2 - Gamma^2)). Broken phase (Gamma < J): e_plus
/// has the positive real part. Otherwise e_plus has the larger imaginary part.
EigenPair apt_eigenvalues(double J, double Gamma, double alpha);

/// alpha[+- sqrt((delta - i Gamma)^2 + J^2) - i Gamma], labelled on the sheet
/// whose only cut is {delta = 0, Gamma < J}: e_plus has the larger
/// imaginary part, ties (on the cut) go to the larger real part. This is
/// the labelling reached by continuation from the symmetry-preserving
/// phase, and reduces to apt_eigenvalues at delta = 0.
EigenPair detuned_eigenvalues(double J, double Gamma, double delta, double alpha);

/// Riemann-sheet sampling over (delta/J, Gamma/J). Grids are stored row
/// major with rows indexed by Gamma and columns by delta.
struct SpectrumSheet {
  std::vector<double> delta_over_J;
  std::vector<double> gamma_over_J;
  std::vector<Complex> plus;
  std::vector<Complex> minus;
  std::vector<bool> seam;
  std::vector<bool> defective;
  double alpha = 0.5;
  double J = 1.0;

  std::size_t cols() const { return delta_over_J.size(); }
  std::size_t rows() const { return gamma_over_J.size(); }
  std::size_t index(std::size_t row, std::size_t col) const { return row * cols() + col; }
};

struct AxisRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Evaluates both eigenvalues on a uniform grid and orders them by
/// continuation: the anchor is the cell with the largest Gamma and the
/// smallest |delta| (deep in the preserving phase, e_plus = larger Im).
/// The anchor row is continued outward along delta, then every column is
/// continued down in Gamma, each step picking the assignment with the
/// smaller total displacement. A cell is flagged as seam when the
/// assignment relative to its right or lower neighbour is swapped.
SpectrumSheet riemann_sheet_grid(AxisRange delta_over_J, AxisRange gamma_over_J, std::size_t delta_points,
                                 std::size_t gamma_points, double alpha, double J);

/// 8-connected groups of seam cells, each a list of flat grid indices.
std::vector<std::vector<std::size_t>> seam_components(const SpectrumSheet& sheet);

enum class Permutation { identity, swap };

/// Outcome of continuing one eigenvalue around a closed loop in the
/// (delta/J, Gamma/J) plane.
struct LoopResult {
  double center_delta = 0.0;
  double center_gamma = 0.0;
  double radius = 0.0;
  int turns = 1;
  std::size_t steps = 0;
  Permutation permutation = Permutation::identity;
  bool winding_valid = true;
  double min_gap = 0.0;
  double max_step_ratio = 0.0;  // largest displacement / local gap
};

/// Raised when a loop is sampled too coarsely to follow the eigenvalues.
class UnderResolvedLoop : public ContractError {
 public:
  using ContractError::ContractError;
};

/// Continuation around the circle without the resolution assertion;
/// winding_valid reports whether every step moved less than half the gap.
LoopResult trace_loop(std::pair<double, double> center, double radius, std::size_t steps_per_turn, double alpha,
                      double J, int turns = 1);

/// Same, throwing UnderResolvedLoop when the loop is under-resolved.
/// Requires steps_per_turn >= 64 and a clearance of at least 1e-3 from the
/// exceptional point.
LoopResult wind_around_ep(std::pair<double, double> center, double radius, std::size_t steps_per_turn, double alpha,
                          double J, int turns = 1);

/// Numeric location of the exceptional point by Newton iteration on the
/// real and imaginary parts of (delta - i Gamma)^2 + J^2, in units of J.
struct EPLocation {
  double delta_over_J = 0.0;
  double gamma_over_J = 0.0;
  bool converged = false;
  int iterations = 0;
};
EPLocation locate_ep(double J, std::pair<double, double> guess_over_J = {0.3, 0.7});

const char* to_string(Permutation p);

}  // namespace apt
