// Serial vs OpenMP timings for the Monte Carlo kernels and the trial runner.
// Also confirms the two policies agree bit for bit.

#include "covshift/bounds.hpp"
#include "covshift/fisher.hpp"
#include "covshift/harness.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>
#include <string>

using namespace covshift;

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class F>
void compare(const char* name, F&& run) {
  decltype(run(ExecPolicy::Serial)) serial, parallel;
  const double ts = seconds([&] { serial = run(ExecPolicy::Serial); });
  const double tp = seconds([&] { parallel = run(ExecPolicy::Parallel); });
  std::printf("%-28s serial %8.3fs  parallel %8.3fs  speedup %5.2fx  %s\n", name, ts, tp, ts / tp,
              serial == parallel ? "identical" : "MISMATCH");
}

std::string csv_of(const std::vector<TrialResult>& rows) {
  std::ostringstream out;
  write_csv(out, rows);
  return out.str();
}

}  // namespace

int main() {
  std::printf("workers: %d\n", worker_count());
  const int d = 6;
  Vector beta = Vector::Zero(d);
  beta(0) = 1.0;

  compare("fisher_monte_carlo phase", [&](ExecPolicy p) {
    return fisher_monte_carlo(ModelKind::PhaseRetrieval, make_sphere(d), beta, 1'000'000, 1, p).mean;
  });

  const ShiftPair ball = make_shift_pair(make_ball(3, 2.0), make_ball(3, 1.0));
  const Vector b3 = Vector::Ones(3);
  compare("weighted_information ball", [&](ExecPolicy p) {
    return weighted_information(ModelKind::Linear, ball, b3, 1'000'000, 2, p).trace;
  });

  compare("concentration_check sphere", [&](ExecPolicy p) {
    return concentration_check(sphere_generator(10), 2000, 0.1, 2000, 4.0, 3, p).exceedance;
  });

  ExperimentConfig cfg;
  cfg.model = ModelKind::Logistic;
  cfg.source = make_sphere(3);
  Vector shift = Vector::Zero(3);
  shift(1) = 2.0;
  cfg.target = make_sphere(shift);
  cfg.beta_star = Vector::Unit(3, 0);
  cfg.n_grid = {1000, 2000};
  cfg.trials = 100;
  cfg.master_seed = 4;
  compare("run_experiment logistic", [&](ExecPolicy p) { return csv_of(run_experiment(cfg, p)); });
  return 0;
}
