#include "aptfloquet/measurement.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

#include "aptfloquet/rng.hpp"

namespace apt {

namespace {

constexpr double kProbabilitySlack = 1e-12;

double pauli_expectation(const Matrix2& rho_bar, const Matrix2& sigma) { return (rho_bar * sigma).trace().real(); }

double sample_pauli(double expectation, const ShotConfig& cfg, std::uint64_t substream) {
  if (cfg.shots == 0) return expectation;
  const double p_plus = std::clamp(0.5 * (1.0 + expectation), 0.0, 1.0);
  return 2.0 * sample_population(p_plus, cfg, substream) - 1.0;
}

// ---------------------------------------------------------------------------
// Trace models. Parameters are [nonlinear..., linear...]; the model is linear
// in the trailing amplitudes, which the grid seeding exploits.

struct ModelShape {
  int nonlinear;
  int linear;
};

ModelShape shape(FitModel m) {
  switch (m) {
    case FitModel::two_mode: return {3, 4};
    case FitModel::equal_decay: return {2, 3};
    case FitModel::merged: return {1, 3};
  }
  return {0, 0};
}

// Basis functions multiplying the linear amplitudes at time t.
void basis(FitModel m, const double* nl, double t, double* phi) {
  switch (m) {
    case FitModel::two_mode: {
      const double ip = nl[0], im = nl[1], w = nl[2];
      const double e3 = std::exp((ip + im) * t);
      phi[0] = std::exp(2.0 * ip * t);
      phi[1] = std::exp(2.0 * im * t);
      phi[2] = e3 * std::cos(w * t);
      phi[3] = e3 * std::sin(w * t);
      return;
    }
    case FitModel::equal_decay: {
      const double e = std::exp(2.0 * nl[0] * t);
      phi[0] = e;
      phi[1] = e * std::cos(nl[1] * t);
      phi[2] = e * std::sin(nl[1] * t);
      return;
    }
    case FitModel::merged: {
      const double e = std::exp(2.0 * nl[0] * t);
      phi[0] = e;
      phi[1] = e * t;
      phi[2] = e * t * t;
      return;
    }
  }
}

// Model value and full gradient with respect to all parameters.
double evaluate(FitModel m, const std::vector<double>& p, double t, double* grad) {
  const ModelShape s = shape(m);
  double phi[4];
  basis(m, p.data(), t, phi);
  const double* amp = p.data() + s.nonlinear;
  double f = 0.0;
  for (int k = 0; k < s.linear; ++k) {
    f += amp[k] * phi[k];
    grad[s.nonlinear + k] = phi[k];
  }
  switch (m) {
    case FitModel::two_mode: {
      const double w = p[2];
      const double osc = amp[2] * phi[2] + amp[3] * phi[3];
      grad[0] = 2.0 * t * amp[0] * phi[0] + t * osc;
      grad[1] = 2.0 * t * amp[1] * phi[1] + t * osc;
      grad[2] = t * (-amp[2] * phi[3] + amp[3] * phi[2]);
      (void)w;
      break;
    }
    case FitModel::equal_decay:
      grad[0] = 2.0 * t * f;
      grad[1] = t * (-amp[1] * phi[2] + amp[2] * phi[1]);
      break;
    case FitModel::merged:
      grad[0] = 2.0 * t * f;
      break;
  }
  return f;
}

struct Problem {
  const TraceSeries& series;
  std::vector<double> weight;  // 1/sigma or 1
};

struct Solution {
  std::vector<double> p;
  double rss = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  Eigen::MatrixXd jacobian;
};

double residuals(FitModel m, const Problem& pr, const std::vector<double>& p, Eigen::VectorXd& r,
                 Eigen::MatrixXd* jac) {
  const std::size_t n = pr.series.t.size();
  const int np = static_cast<int>(p.size());
  r.resize(static_cast<Eigen::Index>(n));
  if (jac) jac->resize(static_cast<Eigen::Index>(n), np);
  double grad[7];
  for (std::size_t i = 0; i < n; ++i) {
    const double w = pr.weight[i];
    const double f = evaluate(m, p, pr.series.t[i], grad);
    r[static_cast<Eigen::Index>(i)] = w * (f - pr.series.value[i]);
    if (jac) {
      for (int k = 0; k < np; ++k) (*jac)(static_cast<Eigen::Index>(i), k) = w * grad[k];
    }
  }
  const double rss = r.squaredNorm();
  return std::isfinite(rss) ? rss : std::numeric_limits<double>::infinity();
}

// Weighted design matrix of the linear amplitudes and the weighted data.
void design(FitModel m, const Problem& pr, const std::vector<double>& nonlinear, Eigen::MatrixXd& x,
            Eigen::VectorXd& y) {
  const ModelShape s = shape(m);
  const auto n = static_cast<Eigen::Index>(pr.series.t.size());
  x.resize(n, s.linear);
  y.resize(n);
  double phi[4];
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    basis(m, nonlinear.data(), pr.series.t[iu], phi);
    for (int k = 0; k < s.linear; ++k) x(i, k) = pr.weight[iu] * phi[k];
    y[i] = pr.weight[iu] * pr.series.value[iu];
  }
}

// Best linear amplitudes for fixed nonlinear parameters.
Solution linear_seed(FitModel m, const Problem& pr, const std::vector<double>& nonlinear) {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  design(m, pr, nonlinear, x, y);
  Solution out;
  if (!x.allFinite()) return out;
  const Eigen::VectorXd c = x.colPivHouseholderQr().solve(y);
  out.p = nonlinear;
  for (Eigen::Index k = 0; k < c.size(); ++k) out.p.push_back(c[k]);
  const double rss = (x * c - y).squaredNorm();
  if (std::isfinite(rss)) out.rss = rss;
  return out;
}

using Evaluator = std::function<double(const std::vector<double>&, Eigen::VectorXd&, Eigen::MatrixXd*)>;

// Levenberg-Marquardt with Marquardt diagonal scaling. Convergence is the
// MINPACK orthogonality test: max_j |J_j . r| / (|J_j| |r|) < tolerance,
// or a residual at roundoff level.
Solution levenberg_marquardt(const Evaluator& eval, std::vector<double> p, int max_iterations, double tolerance,
                             double data_scale) {
  Solution out;
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  double rss = eval(p, r, &jac);
  double lambda = 1e-3;
  const auto np = static_cast<Eigen::Index>(p.size());
  for (int it = 0; it < max_iterations && std::isfinite(rss); ++it) {
    out.iterations = it + 1;
    const double rnorm = std::sqrt(rss);
    if (rnorm <= 1e-13 * data_scale) {
      out.converged = true;
      break;
    }
    const Eigen::VectorXd g = jac.transpose() * r;
    double cosine = 0.0;
    for (Eigen::Index k = 0; k < np; ++k) {
      const double cn = jac.col(k).norm();
      if (cn > 0.0) cosine = std::max(cosine, std::abs(g[k]) / (cn * rnorm));
    }
    if (cosine < tolerance) {
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd diag = a.diagonal().cwiseMax(1e-30);
    bool improved = false;
    bool stalled = false;
    while (!improved) {
      Eigen::MatrixXd damped = a;
      damped.diagonal() += lambda * diag;
      const Eigen::VectorXd step = damped.ldlt().solve(-g);
      std::vector<double> trial(p);
      double step_norm = 0.0;
      double p_norm = 0.0;
      for (Eigen::Index k = 0; k < np; ++k) {
        trial[static_cast<std::size_t>(k)] += step[k];
        step_norm += step[k] * step[k];
        p_norm += p[static_cast<std::size_t>(k)] * p[static_cast<std::size_t>(k)];
      }
      Eigen::VectorXd r_trial;
      Eigen::MatrixXd jac_trial;
      const double rss_trial =
          step.allFinite() ? eval(trial, r_trial, &jac_trial) : std::numeric_limits<double>::infinity();
      if (rss_trial < rss) {
        p = std::move(trial);
        r = std::move(r_trial);
        jac = std::move(jac_trial);
        rss = rss_trial;
        lambda = std::max(lambda / 3.0, 1e-15);
        improved = true;
      } else {
        lambda *= 4.0;
        if (lambda > 1e16 || std::sqrt(step_norm) <= 1e-15 * (std::sqrt(p_norm) + 1e-15)) {
          stalled = true;
          break;
        }
      }
    }
    if (stalled) break;
  }
  out.p = std::move(p);
  out.rss = rss;
  out.jacobian = std::move(jac);
  return out;
}

Evaluator full_evaluator(FitModel m, const Problem& pr) {
  return [m, &pr](const std::vector<double>& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    return residuals(m, pr, p, r, jac);
  };
}

// Variable projection: the residual as a function of the nonlinear
// parameters alone, amplitudes eliminated by linear least squares through
// the (lightly regularized) normal equations. Kaufman's Jacobian: the
// amplitude-weighted basis derivatives projected off the column space.
Evaluator projected_evaluator(FitModel m, const Problem& pr) {
  return [m, &pr](const std::vector<double>& nl, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    const double inf = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    design(m, pr, nl, x, y);
    if (!x.allFinite()) return inf;
    Eigen::MatrixXd g = x.transpose() * x;
    g.diagonal().array() += 1e-14 * g.diagonal().maxCoeff() + 1e-300;
    const auto gram = g.ldlt();
    const Eigen::VectorXd c = gram.solve(x.transpose() * y);
    r = x * c - y;
    const double rss = r.squaredNorm();
    if (!std::isfinite(rss)) return inf;
    if (jac) {
      const int nn = shape(m).nonlinear;
      std::vector<double> p(nl);
      for (Eigen::Index k = 0; k < c.size(); ++k) p.push_back(c[k]);
      const auto n = static_cast<Eigen::Index>(pr.series.t.size());
      Eigen::MatrixXd v(n, nn);
      double grad[7];
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        evaluate(m, p, pr.series.t[iu], grad);
        for (int k = 0; k < nn; ++k) v(i, k) = pr.weight[iu] * grad[k];
      }
      *jac = v - x * gram.solve(x.transpose() * v);
    }
    return rss;
  };
}

std::vector<double> geomspace(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, i / double(std::max(1, n - 1)));
  return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / double(std::max(1, n - 1));
  return out;
}

// Projected LM from a diverse seed set (the best seeds overall plus the
// best seed for each grid value of every nonlinear coordinate), then a
// full analytic LM polish of the most promising results.
Solution multistart(FitModel m, const Problem& pr, std::vector<Solution> seeds, int keep, const FitOptions& opt,
                    double data_scale) {
  std::sort(seeds.begin(), seeds.end(), [](const Solution& a, const Solution& b) { return a.rss < b.rss; });
  const ModelShape sh = shape(m);
  const auto nl_count = static_cast<std::size_t>(sh.nonlinear);
  std::vector<const Solution*> chosen;
  std::vector<std::vector<double>> covered(nl_count);
  for (const Solution& seed : seeds) {
    if (!std::isfinite(seed.rss)) continue;
    bool fresh = chosen.size() < static_cast<std::size_t>(keep);
    for (std::size_t k = 0; k < nl_count; ++k) {
      auto& seen = covered[k];
      if (std::find(seen.begin(), seen.end(), seed.p[k]) == seen.end()) {
        seen.push_back(seed.p[k]);
        fresh = true;
      }
    }
    if (fresh) chosen.push_back(&seed);
  }

  const Evaluator projected = projected_evaluator(m, pr);
  std::vector<Solution> coarse;
  for (const Solution* seed : chosen) {
    const std::vector<double> nl(seed->p.begin(), seed->p.begin() + sh.nonlinear);
    Solution c = levenberg_marquardt(projected, nl, std::min(opt.max_iterations, 60), 1e-6, data_scale);
    coarse.push_back(std::isfinite(c.rss) ? linear_seed(m, pr, c.p) : *seed);
  }
  std::sort(coarse.begin(), coarse.end(), [](const Solution& a, const Solution& b) { return a.rss < b.rss; });

  const Evaluator full = full_evaluator(m, pr);
  Solution best;
  const std::size_t polish = std::min<std::size_t>(coarse.size(), 3);
  for (std::size_t i = 0; i < polish; ++i) {
    if (!std::isfinite(coarse[i].rss)) continue;
    Solution s = levenberg_marquardt(full, coarse[i].p, opt.max_iterations, opt.gradient_tolerance, data_scale);
    if (s.rss < best.rss) best = std::move(s);
  }
  return best;
}

// Covariance of the parameters from the curvature at the optimum.
Eigen::MatrixXd covariance(const Solution& s, std::size_t points) {
  const auto np = s.jacobian.cols();
  const double dof = std::max(1.0, static_cast<double>(points) - static_cast<double>(np));
  const Eigen::MatrixXd a = s.jacobian.transpose() * s.jacobian;
  return a.completeOrthogonalDecomposition().pseudoInverse() * (s.rss / dof);
}

}  // namespace

const char* to_string(FitModel m) {
  switch (m) {
    case FitModel::two_mode: return "two_mode";
    case FitModel::equal_decay: return "equal_decay";
    case FitModel::merged: return "merged";
  }
  return "unknown";
}

std::uint64_t substream_for(std::size_t point, Channel channel) {
  return static_cast<std::uint64_t>(point) * 8 + static_cast<std::uint64_t>(channel);
}

double sample_population(double p, const ShotConfig& cfg, std::uint64_t substream) {
  if (!(p >= -kProbabilitySlack && p <= 1.0 + kProbabilitySlack))
    throw DomainError("sample_population: probability " + std::to_string(p) + " outside [0, 1]");
  p = std::clamp(p, 0.0, 1.0);
  if (cfg.shots == 0) return p;
  PhiloxStream rng(cfg.seed, cfg.stream_id, substream);
  std::uint32_t hits = 0;
  for (std::uint32_t k = 0; k < cfg.shots; ++k) {
    if (rng.next_uniform() < p) ++hits;
  }
  return static_cast<double>(hits) / cfg.shots;
}

PopulationReadout read_populations(const Matrix2& rho_raw, const ShotConfig& cfg, std::size_t point) {
  const double n_up = rho_raw(0, 0).real();
  const double n_down = rho_raw(1, 1).real();
  PopulationReadout out;
  out.n_down = sample_population(n_down, cfg, substream_for(point, Channel::population));
  const double bright_after_flip =
      sample_population(1.0 - n_up, cfg, substream_for(point, Channel::population_flipped));
  out.n_up = 1.0 - bright_after_flip;
  return out;
}

double pauli_standard_error(double expectation, std::uint32_t shots) {
  if (shots == 0) return 0.0;
  return std::sqrt(std::max(0.0, 1.0 - expectation * expectation) / shots);
}

Matrix2 reconstruct_from_pauli(const std::array<double, 3>& e, bool* projected) {
  double x = e[0], y = e[1], z = e[2];
  const double r = std::sqrt(x * x + y * y + z * z);
  // Bloch vector outside the ball: the (1 - r)/2 eigenvalue is negative.
  // Clipping it to zero and renormalizing leaves the pure state along r.
  const bool project = r > 1.0 + 1e-12;
  if (project) {
    x /= r;
    y /= r;
    z /= r;
  }
  if (projected) *projected = project;
  using namespace pauli;
  return (I + X * x + Y * y + Z * z) * 0.5;
}

TomographyRecord simulate_tomography(const Matrix2& rho, const ShotConfig& cfg, std::size_t point) {
  const Matrix2 rho_bar = normalize_rho(rho);
  TomographyRecord rec;
  const Matrix2 sigmas[3] = {pauli::X, pauli::Y, pauli::Z};
  const Channel channels[3] = {Channel::tomography_x, Channel::tomography_y, Channel::tomography_z};
  for (int k = 0; k < 3; ++k) {
    const double ideal = pauli_expectation(rho_bar, sigmas[k]);
    const double est = sample_pauli(ideal, cfg, substream_for(point, channels[k]));
    rec.expectation[static_cast<std::size_t>(k)] = est;
    rec.standard_error[static_cast<std::size_t>(k)] = pauli_standard_error(est, cfg.shots);
  }
  const PopulationReadout pops = read_populations(rho, cfg, point);
  rec.trace_estimate = pops.n_up + pops.n_down;
  rec.rho_hat = reconstruct_from_pauli(rec.expectation, &rec.psd_projected);
  return rec;
}

std::vector<SampledPoint> sample_trajectory(const Trajectory& traj, const ShotConfig& cfg) {
  std::vector<SampledPoint> out;
  out.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const TrajectoryPoint& tp = traj[i];
    SampledPoint sp;
    sp.t = tp.t;
    sp.raw = read_populations(tp.rho_raw, cfg, i);
    const double total = sp.raw.n_up + sp.raw.n_down;
    sp.nbar_up = total > 0.0 ? sp.raw.n_up / total : 0.5;
    sp.nbar_down = total > 0.0 ? sp.raw.n_down / total : 0.5;
    sp.tomography = simulate_tomography(tp.rho_raw, cfg, i);
    sp.entropy = von_neumann_entropy(sp.tomography.rho_hat);
    out.push_back(sp);
  }
  return out;
}

TraceSeries trace_series(const Trajectory& traj) {
  TraceSeries s;
  for (const auto& p : traj.points()) {
    s.t.push_back(p.t);
    s.value.push_back(p.n_up + p.n_down);
  }
  return s;
}

TraceSeries trace_series(const std::vector<SampledPoint>& sampled, std::uint32_t shots) {
  TraceSeries s;
  for (const auto& p : sampled) {
    s.t.push_back(p.t);
    s.value.push_back(p.raw.n_up + p.raw.n_down);
    if (shots > 0) {
      // Binomial variance of both readouts, with frequencies kept one count
      // away from 0 and 1 so no point gets infinite weight.
      const double floor = 1.0 / shots;
      const double qu = std::clamp(p.raw.n_up, floor, 1.0 - floor);
      const double qd = std::clamp(p.raw.n_down, floor, 1.0 - floor);
      s.sigma.push_back(std::sqrt((qu * (1.0 - qu) + qd * (1.0 - qd)) / shots));
    }
  }
  s.shots = shots;
  return s;
}

Trajectory fit_trajectory(const APTParams& params, const FitDesign& design) {
  if (!(design.period > 0.0) || !(design.t_max > design.period)) throw ContractError("fit design needs 0 < period < t_max");
  const DrivingProtocol p = canonical_protocol({params, false, design.period});
  const auto n = static_cast<std::size_t>(std::llround(design.t_max / design.period));
  return evolve_raw(p, Matrix2::projector(basis::down), stroboscopic_times(p, n));
}

namespace {

FitResult fit_pass(const TraceSeries& series, std::vector<double> weight, PhaseHint hint, const FitOptions& options) {
  const std::size_t n = series.t.size();
  Problem pr{series, std::move(weight)};
  double data_scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) data_scale += std::pow(pr.weight[i] * series.value[i], 2);
  data_scale = std::sqrt(data_scale);

  // Coarse grid bounded by what the sampling can resolve.
  std::vector<double> spacing(n - 1);
  for (std::size_t i = 1; i < n; ++i) spacing[i - 1] = series.t[i] - series.t[i - 1];
  std::nth_element(spacing.begin(), spacing.begin() + static_cast<long>(spacing.size() / 2), spacing.end());
  const double dt = spacing[spacing.size() / 2];
  const double span = series.t.back() - series.t.front();
  const double g_lo = 0.25 / span;
  const double g_hi = std::max(2.0 * g_lo, 0.5 / dt);
  const double w_hi = std::min(std::numbers::pi / dt, 60.0 / span);
  const int gp = std::max(2, options.grid_points);
  std::vector<double> decays = geomspace(g_lo, g_hi, gp);
  for (double& d : decays) d = -d;
  const std::vector<double> gaps =
      hint == PhaseHint::broken ? linspace(0.0, w_hi, gp) : linspace(0.0, 0.25 * w_hi, gp);

  std::vector<Solution> seeds_full;
  std::vector<Solution> seeds_equal;
  std::vector<Solution> seeds_merged;
  for (double ip : decays) {
    seeds_merged.push_back(linear_seed(FitModel::merged, pr, {ip}));
    for (double w : gaps) {
      seeds_equal.push_back(linear_seed(FitModel::equal_decay, pr, {ip, w}));
      for (double im : decays) {
        if (im > ip) continue;
        seeds_full.push_back(linear_seed(FitModel::two_mode, pr, {ip, im, w}));
      }
    }
  }

  const Solution full = multistart(FitModel::two_mode, pr, std::move(seeds_full), options.restarts, options, data_scale);
  if (full.p.size() == 7) {
    const double g = 0.5 * (full.p[0] + full.p[1]);
    seeds_equal.push_back(linear_seed(FitModel::equal_decay, pr, {g, full.p[2]}));
    seeds_merged.push_back(linear_seed(FitModel::merged, pr, {g}));
  }
  const Solution equal =
      multistart(FitModel::equal_decay, pr, std::move(seeds_equal), std::max(1, options.restarts / 2), options, data_scale);
  const Solution merged =
      multistart(FitModel::merged, pr, std::move(seeds_merged), std::max(1, options.restarts / 2), options, data_scale);

  // A reduced model is kept unless the extra parameters lower the residual
  // by more than an F-like margin over the noise level (or roundoff, for
  // noiseless data).
  const double full_dof = std::max(1.0, static_cast<double>(n) - 7.0);
  auto acceptable = [&](const Solution& reduced, int params) {
    if (!std::isfinite(reduced.rss)) return false;
    const double margin = std::max(4.0 * (7 - params) * full.rss / full_dof, 1e-24 * data_scale * data_scale);
    return reduced.rss - full.rss <= margin;
  };

  FitResult out;
  const Solution* chosen = &full;
  out.model = FitModel::two_mode;
  if (acceptable(merged, 4)) {
    chosen = &merged;
    out.model = FitModel::merged;
  } else if (acceptable(equal, 5)) {
    chosen = &equal;
    out.model = FitModel::equal_decay;
  }
  if (!std::isfinite(chosen->rss)) {
    out.converged = false;
    out.residual_rms = std::numeric_limits<double>::infinity();
    return out;
  }

  const Eigen::MatrixXd cov = covariance(*chosen, n);
  auto sd = [&](int k) { return std::sqrt(std::max(0.0, cov(k, k))); };
  const std::vector<double>& p = chosen->p;
  switch (out.model) {
    case FitModel::two_mode: {
      const bool first_slower = p[0] >= p[1];
      out.im_plus = first_slower ? p[0] : p[1];
      out.im_minus = first_slower ? p[1] : p[0];
      out.re_gap = std::abs(p[2]);
      out.std_error = {sd(2), first_slower ? sd(0) : sd(1), first_slower ? sd(1) : sd(0)};
      break;
    }
    case FitModel::equal_decay:
      out.im_plus = out.im_minus = p[0];
      out.re_gap = std::abs(p[1]);
      out.std_error = {sd(1), sd(0), sd(0)};
      break;
    case FitModel::merged:
      out.im_plus = out.im_minus = p[0];
      out.re_gap = 0.0;
      out.std_error = {0.0, sd(0), sd(0)};
      out.degenerate = true;
      break;
  }

  // Unweighted residual in data units.
  Problem plain{series, std::vector<double>(n, 1.0)};
  Eigen::VectorXd r;
  out.residual_rms = std::sqrt(residuals(out.model, plain, p, r, nullptr) / static_cast<double>(n));
  out.converged = chosen->converged;
  out.iterations = chosen->iterations;
  out.parameters = p;
  return out;
}

}  // namespace

FitResult fit_eigenvalues(const TraceSeries& series, PhaseHint hint, const FitOptions& options) {
  const std::size_t n = series.t.size();
  if (n < 12) throw ContractError("fit_eigenvalues needs at least 12 time points");
  if (series.value.size() != n || (!series.sigma.empty() && series.sigma.size() != n))
    throw ContractError("fit_eigenvalues: series columns differ in length");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(series.t[i] > series.t[i - 1])) throw ContractError("fit_eigenvalues: times must be strictly ascending");
  }

  std::vector<double> weight(n, 1.0);
  for (std::size_t i = 0; i < series.sigma.size(); ++i) {
    if (!(series.sigma[i] > 0.0)) throw ContractError("fit_eigenvalues: sigma must be positive");
    weight[i] = 1.0 / series.sigma[i];
  }
  FitResult first = fit_pass(series, weight, hint, options);
  if (series.shots == 0 || series.sigma.empty() || !std::isfinite(first.residual_rms)) return first;

  // Refit with variances taken from the fitted curve instead of the noisy
  // frequencies, which would favour points that happened to read low.
  const double shots = series.shots;
  double grad[7];
  for (std::size_t i = 0; i < n; ++i) {
    const double m = std::clamp(evaluate(first.model, first.parameters, series.t[i], grad), 1.0 / shots, 2.0 - 1.0 / shots);
    weight[i] = 1.0 / std::sqrt((m - 0.5 * m * m) / shots);
  }
  return fit_pass(series, weight, hint, options);
}

}  // namespace apt
