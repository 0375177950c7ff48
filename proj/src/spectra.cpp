#include "aptfloquet/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace apt {

namespace {

bool swapped_relative(Complex p_plus, Complex p_minus, Complex q_plus, Complex q_minus) {
  return std::abs(p_plus - q_minus) + std::abs(p_minus - q_plus) <
         std::abs(p_plus - q_plus) + std::abs(p_minus - q_minus);
}

std::vector<double> linspace(AxisRange r, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = i + 1 == n ? r.hi : r.lo + (r.hi - r.lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

}  // namespace

const char* to_string(Permutation p) { return p == Permutation::swap ? "swap" : "identity"; }

EigenPair apt_eigenvalues(double J, double Gamma, double alpha) {
  if (!(J > 0.0)) throw ContractError("J must be > 0");
  const double radicand = J * J - Gamma * Gamma;
  if (radicand > 0.0) {
    const double s = std::sqrt(radicand);
    return {{alpha * s, -alpha * Gamma}, {-alpha * s, -alpha * Gamma}};
  }
  const double k = std::sqrt(-radicand);
  return {{0.0, alpha * (k - Gamma)}, {0.0, alpha * (-k - Gamma)}};
}

EigenPair detuned_eigenvalues(double J, double Gamma, double delta, double alpha) {
  if (!(J > 0.0)) throw ContractError("J must be > 0");
  const Complex w{delta, -Gamma};
  const Complex s = std::sqrt(w * w + J * J);
  const Complex a{alpha * s.real(), alpha * (s.imag() - Gamma)};
  const Complex b{-alpha * s.real(), alpha * (-s.imag() - Gamma)};
  const double tie = 1e-15 * alpha * std::max({1.0, std::abs(s), Gamma});
  if (std::abs(a.imag() - b.imag()) <= tie) return a.real() >= b.real() ? EigenPair{a, b} : EigenPair{b, a};
  return a.imag() > b.imag() ? EigenPair{a, b} : EigenPair{b, a};
}

SpectrumSheet riemann_sheet_grid(AxisRange delta_over_J, AxisRange gamma_over_J, std::size_t delta_points,
                                 std::size_t gamma_points, double alpha, double J) {
  if (delta_points < 2 || gamma_points < 2) throw ContractError("sheet resolution must be >= 2 per axis");
  if (!(delta_over_J.hi > delta_over_J.lo) || !(gamma_over_J.hi > gamma_over_J.lo))
    throw ContractError("sheet axis ranges must be increasing");
  if (gamma_over_J.lo < 0.0) throw ContractError("Gamma/J range must be non-negative");
  if (!(J > 0.0)) throw ContractError("J must be > 0");

  SpectrumSheet sh;
  sh.alpha = alpha;
  sh.J = J;
  sh.delta_over_J = linspace(delta_over_J, delta_points);
  sh.gamma_over_J = linspace(gamma_over_J, gamma_points);
  const std::size_t n = delta_points * gamma_points;
  std::vector<EigenPair> raw(n);
  sh.plus.resize(n);
  sh.minus.resize(n);
  sh.seam.assign(n, false);
  sh.defective.assign(n, false);

  // Pointwise evaluation; independent per cell.
  for (std::size_t r = 0; r < sh.rows(); ++r) {
    for (std::size_t c = 0; c < sh.cols(); ++c) {
      const double d = sh.delta_over_J[c];
      const double g = sh.gamma_over_J[r];
      raw[sh.index(r, c)] = detuned_eigenvalues(J, g * J, d * J, alpha);
      sh.defective[sh.index(r, c)] = std::hypot(d, g - 1.0) < 1e-8;
    }
  }

  auto assign = [&](std::size_t idx, std::size_t ref) {
    const EigenPair& e = raw[idx];
    if (swapped_relative(e.e_plus, e.e_minus, sh.plus[ref], sh.minus[ref])) {
      sh.plus[idx] = e.e_minus;
      sh.minus[idx] = e.e_plus;
    } else {
      sh.plus[idx] = e.e_plus;
      sh.minus[idx] = e.e_minus;
    }
  };

  const std::size_t top = sh.rows() - 1;
  std::size_t anchor = 0;
  for (std::size_t c = 1; c < sh.cols(); ++c) {
    if (std::abs(sh.delta_over_J[c]) < std::abs(sh.delta_over_J[anchor])) anchor = c;
  }
  sh.plus[sh.index(top, anchor)] = raw[sh.index(top, anchor)].e_plus;
  sh.minus[sh.index(top, anchor)] = raw[sh.index(top, anchor)].e_minus;
  for (std::size_t c = anchor + 1; c < sh.cols(); ++c) assign(sh.index(top, c), sh.index(top, c - 1));
  for (std::size_t c = anchor; c-- > 0;) assign(sh.index(top, c), sh.index(top, c + 1));
  for (std::size_t c = 0; c < sh.cols(); ++c) {
    for (std::size_t r = top; r-- > 0;) assign(sh.index(r, c), sh.index(r + 1, c));
  }

  for (std::size_t r = 0; r < sh.rows(); ++r) {
    for (std::size_t c = 0; c < sh.cols(); ++c) {
      const std::size_t i = sh.index(r, c);
      bool flag = false;
      if (c + 1 < sh.cols()) {
        const std::size_t j = sh.index(r, c + 1);
        flag = flag || swapped_relative(sh.plus[i], sh.minus[i], sh.plus[j], sh.minus[j]);
      }
      if (r + 1 < sh.rows()) {
        const std::size_t j = sh.index(r + 1, c);
        flag = flag || swapped_relative(sh.plus[i], sh.minus[i], sh.plus[j], sh.minus[j]);
      }
      sh.seam[i] = flag;
    }
  }
  return sh;
}

std::vector<std::vector<std::size_t>> seam_components(const SpectrumSheet& sheet) {
  const std::size_t rows = sheet.rows();
  const std::size_t cols = sheet.cols();
  std::vector<bool> seen(sheet.seam.size(), false);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < sheet.seam.size(); ++start) {
    if (!sheet.seam[start] || seen[start]) continue;
    std::vector<std::size_t> component;
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      component.push_back(i);
      const auto r = static_cast<long>(i / cols);
      const auto c = static_cast<long>(i % cols);
      for (long dr = -1; dr <= 1; ++dr) {
        for (long dc = -1; dc <= 1; ++dc) {
          const long rr = r + dr;
          const long cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<long>(rows) || cc >= static_cast<long>(cols)) continue;
          const auto j = static_cast<std::size_t>(rr) * cols + static_cast<std::size_t>(cc);
          if (sheet.seam[j] && !seen[j]) {
            seen[j] = true;
            stack.push_back(j);
          }
        }
      }
    }
    std::sort(component.begin(), component.end());
    out.push_back(std::move(component));
  }
  return out;
}

LoopResult trace_loop(std::pair<double, double> center, double radius, std::size_t steps_per_turn, double alpha,
                      double J, int turns) {
  if (steps_per_turn == 0 || turns < 1) throw ContractError("loop needs at least one step and one turn");
  if (!(radius > 0.0)) throw ContractError("loop radius must be positive");
  if (center.second - radius < 0.0) throw ContractError("loop leaves the Gamma >= 0 half plane");

  LoopResult out;
  out.center_delta = center.first;
  out.center_gamma = center.second;
  out.radius = radius;
  out.turns = turns;
  out.steps = steps_per_turn * static_cast<std::size_t>(turns);
  out.min_gap = std::numeric_limits<double>::infinity();

  auto pair_at = [&](std::size_t k) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(steps_per_turn);
    const double d = center.first + radius * std::cos(theta);
    const double g = center.second + radius * std::sin(theta);
    return detuned_eigenvalues(J, g * J, d * J, alpha);
  };

  const EigenPair start = pair_at(0);
  Complex tracked = start.e_plus;
  for (std::size_t k = 1; k <= out.steps; ++k) {
    const EigenPair e = pair_at(k);
    const double gap = std::abs(e.e_plus - e.e_minus);
    const double da = std::abs(e.e_plus - tracked);
    const double db = std::abs(e.e_minus - tracked);
    const double step = std::min(da, db);
    tracked = da <= db ? e.e_plus : e.e_minus;
    out.min_gap = std::min(out.min_gap, gap);
    const double ratio = gap > 0.0 ? step / gap : std::numeric_limits<double>::infinity();
    out.max_step_ratio = std::max(out.max_step_ratio, ratio);
    if (ratio > 0.5) out.winding_valid = false;
  }
  out.permutation = std::abs(tracked - start.e_minus) < std::abs(tracked - start.e_plus) ? Permutation::swap
                                                                                         : Permutation::identity;
  return out;
}

LoopResult wind_around_ep(std::pair<double, double> center, double radius, std::size_t steps_per_turn, double alpha,
                          double J, int turns) {
  if (steps_per_turn < 64) throw ContractError("loop needs at least 64 steps per turn");
  const double clearance = std::abs(std::hypot(center.first, center.second - 1.0) - radius);
  if (clearance < 1e-3) throw ContractError("loop passes within 1e-3 of the exceptional point");
  LoopResult r = trace_loop(center, radius, steps_per_turn, alpha, J, turns);
  if (!r.winding_valid) {
    std::ostringstream os;
    os << "loop under-resolved: a step moved " << r.max_step_ratio
       << " of the local eigenvalue gap (limit 0.5); increase steps above " << steps_per_turn;
    throw UnderResolvedLoop(os.str());
  }
  return r;
}

EPLocation locate_ep(double J, std::pair<double, double> guess_over_J) {
  if (!(J > 0.0)) throw ContractError("J must be > 0");
  // f(x, y) = (x - i y)^2 + 1 with x = delta/J, y = Gamma/J.
  double x = guess_over_J.first;
  double y = guess_over_J.second;
  EPLocation out;
  for (int it = 1; it <= 100; ++it) {
    const double fr = x * x - y * y + 1.0;
    const double fi = -2.0 * x * y;
    out.iterations = it;
    if (std::hypot(fr, fi) < 1e-15) {
      out.converged = true;
      break;
    }
    // Jacobian [[2x, -2y], [-2y, -2x]].
    const double det = -4.0 * (x * x + y * y);
    if (det == 0.0) break;
    const double dx = (-2.0 * x * fr + 2.0 * y * fi) / det;
    const double dy = (2.0 * y * fr + 2.0 * x * fi) / det;
    x -= dx;
    y -= dy;
  }
  out.delta_over_J = x;
  out.gamma_over_J = y;
  return out;
}

}  // namespace apt
