// Monte Carlo spread of the noisy eigenvalue fit over the slice points.
// Usage: fit_calibration [seeds] [shots] [period] [t_max]
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>
#include <vector>

#include "aptfloquet/measurement.hpp"
#include "aptfloquet/spectra.hpp"

using namespace apt;

namespace {

struct Row {
  double gamma = 0.0;
  double delta = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  double worst = 0.0;
  double seed0 = 0.0;
};

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  return v[static_cast<std::size_t>(q * static_cast<double>(v.size() - 1) + 0.5)];
}

}  // namespace

int main(int argc, char** argv) {
  const int seeds = argc > 1 ? std::atoi(argv[1]) : 100;
  const auto shots = static_cast<std::uint32_t>(argc > 2 ? std::atoi(argv[2]) : 1000);
  FitDesign design;
  if (argc > 3) design.period = std::atof(argv[3]);
  if (argc > 4) design.t_max = std::atof(argv[4]);
  std::vector<Row> rows;
  for (double g : {0.52, 1.0, 2.0}) {
    for (int k = 0; k < 9; ++k) {
      const double d = -2.0 + 0.5 * k;
      if (std::hypot(d, g - 1.0) < 0.05) continue;
      rows.push_back({g, d});
    }
  }
  std::vector<std::thread> pool;
  for (Row& row : rows) {
    pool.emplace_back([&row, seeds, shots, design] {
      const double truth = detuned_eigenvalues(1.0, row.gamma, row.delta, 0.5).e_plus.imag();
      const Trajectory traj = fit_trajectory({1.0, row.gamma, 0.5, row.delta}, design);
      const PhaseHint hint = row.gamma > 1.0 ? PhaseHint::preserving : PhaseHint::broken;
      std::vector<double> err;
      for (int s = 0; s < seeds; ++s) {
        const ShotConfig cfg{shots, static_cast<std::uint64_t>(s), 0};
        const FitResult f = fit_eigenvalues(trace_series(sample_trajectory(traj, cfg), shots), hint);
        err.push_back(std::abs(f.im_plus - truth) / std::abs(truth));
      }
      row.seed0 = err.front();
      row.median = quantile(err, 0.5);
      row.p95 = quantile(err, 0.95);
      row.worst = *std::max_element(err.begin(), err.end());
    });
  }
  for (auto& t : pool) t.join();
  std::printf("gamma_over_J,delta_over_J,median_rel_err,p95_rel_err,max_rel_err,seed0_rel_err\n");
  for (const Row& r : rows)
    std::printf("%.2f,%.2f,%.4f,%.4f,%.4f,%.4f\n", r.gamma, r.delta, r.median, r.p95, r.worst, r.seed0);
  return 0;
}
