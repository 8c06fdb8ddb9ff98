#include "doctest.h"

#include "covshift/config.hpp"
#include "covshift/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

using namespace covshift;

namespace {

ExperimentConfig linear_config(int d, std::vector<long long> grid, int trials) {
  ExperimentConfig cfg;
  cfg.model = ModelKind::Linear;
  cfg.source = make_gaussian(Vector::Zero(d), 1.0);
  cfg.target = make_gaussian(Vector::Zero(d), 1.0);
  cfg.beta_star = Vector::LinSpaced(d, 0.5, -0.5);
  cfg.n_grid = std::move(grid);
  cfg.trials = trials;
  cfg.master_seed = 42;
  return cfg;
}

std::string to_csv(const std::vector<TrialResult>& rows) {
  std::ostringstream out;
  write_csv(out, rows);
  return out.str();
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("trial seeds are distinct and stable") {
  CHECK(trial_seed(1, 100, 0) == trial_seed(1, 100, 0));
  CHECK(trial_seed(1, 100, 0) != trial_seed(1, 100, 1));
  CHECK(trial_seed(1, 100, 0) != trial_seed(1, 200, 0));
  CHECK(trial_seed(1, 100, 0) != trial_seed(2, 100, 0));
}

TEST_CASE("linear risk sits below 10 d / n") {
  const auto rows = run_experiment(linear_config(3, {10000}, 100));
  REQUIRE(rows.size() == 100);
  int inside = 0;
  for (const auto& r : rows) inside += r.excess_risk > 0.0 && r.excess_risk < 10.0 * 3 / 1e4;
  CHECK(inside >= 99);
}

TEST_CASE("noiseless linear data interpolates") {
  ExperimentConfig cfg = linear_config(3, {50}, 5);
  cfg.noise_sd = 0.0;
  for (const auto& r : run_experiment(cfg)) CHECK(r.excess_risk <= 1e-24);
}

TEST_CASE("piecewise ball truth biases the MLE but not the MWLE") {
  ExperimentConfig cfg;
  cfg.model = ModelKind::Linear;
  cfg.source = make_ball(3, 2.0);
  cfg.target = make_ball(3, 1.0);
  cfg.beta_star = Vector::Zero(3);
  cfg.truth = TruthKind::PiecewiseBall;
  cfg.beta_star_outer = Vector::Ones(3);
  cfg.n_grid = {1000, 4000};
  cfg.trials = 40;
  cfg.master_seed = 7;

  // Population MLE limit: inner share of E|x|^2 is 1/32, so beta = (31/32) beta_outer.
  const Vector gap = (31.0 / 32.0) * cfg.beta_star_outer;
  const double biased = 0.5 * gap.squaredNorm() / 5.0;

  cfg.estimator = EstimatorKind::MLE;
  const auto mle = run_experiment(cfg);
  cfg.estimator = EstimatorKind::MWLE;
  const auto mwle = run_experiment(cfg);
  double mle_big = 0.0, mwle_big = 0.0;
  for (std::size_t i = 0; i < mle.size(); ++i) {
    CHECK(std::isfinite(mwle[i].excess_risk));
    if (mle[i].n == 4000) {
      mle_big += mle[i].excess_risk / cfg.trials;
      mwle_big += mwle[i].excess_risk / cfg.trials;
    }
  }
  CHECK(mle_big == doctest::Approx(biased).epsilon(0.2));
  CHECK(mwle_big < 0.05 * biased);
}

TEST_CASE("failed fits are flagged, never dropped") {
  ExperimentConfig cfg;
  cfg.model = ModelKind::Linear;
  cfg.source = make_ball(3, 2.0);
  cfg.target = make_ball(3, 1.0);
  cfg.beta_star = Vector::Ones(3);
  cfg.estimator = EstimatorKind::MWLE;
  cfg.n_grid = {3, 4};
  cfg.trials = 20;
  const auto rows = run_experiment(cfg);
  CHECK(rows.size() == 40);
  int flagged = 0;
  for (const auto& r : rows) {
    if (!r.converged) {
      ++flagged;
      CHECK(std::isnan(r.excess_risk));
    }
  }
  CHECK(flagged > 0);
}

TEST_CASE("rate fit on an exact power law") {
  std::vector<TrialResult> rows;
  for (long long n : {100, 200, 400, 800, 1600}) {
    for (int t = 0; t < 50; ++t) {
      TrialResult r;
      r.n = n;
      r.trial = t;
      r.excess_risk = 3.0 / n;
      rows.push_back(r);
    }
  }
  const RateReport rep = rate_fit(rows, 6.0);
  CHECK(rep.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(rep.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& [n, level] : rep.normalized_levels) CHECK(level == doctest::Approx(0.5));

  std::vector<TrialResult> three(rows.begin(), rows.begin() + 150);
  CHECK(code_of([&] { rate_fit(three, 1.0); }) == ErrorCode::InsufficientGrid);
  rows.pop_back();
  CHECK(code_of([&] { rate_fit(rows, 1.0); }) == ErrorCode::InsufficientGrid);
}

TEST_CASE("mis-specification demo") {
  const MisspecResult r = misspec_demo(1.0, 20000, 1);
  CHECK(r.beta_star == 2.0);
  CHECK(std::abs(r.beta_mle + 2.0) <= 0.2);

  const MisspecResult z = misspec_demo(0.0, 1000, 2);
  CHECK(z.beta_mle == z.beta_mwle);

  // The weighted fit is heavy tailed at this n (asymptotic sd ~0.7), so its
  // location is judged by the median over reruns.
  int opposite = 0;
  std::vector<double> mwle;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const MisspecResult k = misspec_demo(1.0, 20000, 1000 + s);
    opposite += (k.beta_mle < 0) != (k.beta_mwle < 0);
    mwle.push_back(k.beta_mwle);
  }
  std::nth_element(mwle.begin(), mwle.begin() + 50, mwle.end());
  CHECK(std::abs(mwle[50] - 2.0) <= 0.2);
  CHECK(opposite >= 99);
  CHECK_THROWS_AS(misspec_demo(1.0, 99, 1), Error);
}

TEST_CASE("csv layout and round trip") {
  ExperimentConfig cfg = linear_config(2, {20, 40}, 3);
  const auto rows = run_experiment(cfg);
  const std::string text = to_csv(rows);
  std::istringstream in(text);
  std::string header;
  std::getline(in, header);
  CHECK(header == kCsvHeader);
  std::string first;
  std::getline(in, first);
  CHECK(first.rfind("linear,2,20,0,mle,", 0) == 0);
  // aligned_dist is empty for non-phase models
  CHECK(first.find(",,1,") != std::string::npos);

  std::istringstream again(text);
  const auto back = read_csv(again);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].excess_risk == rows[i].excess_risk);
    CHECK(back[i].seed == rows[i].seed);
    CHECK(std::isnan(back[i].aligned_dist));
  }
  CHECK(to_csv(back) == text);
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("output is independent of policy and worker count") {
  ExperimentConfig cfg;
  cfg.model = ModelKind::Logistic;
  cfg.source = make_sphere(3);
  Vector shift = Vector::Zero(3);
  shift(1) = 2.0;
  cfg.target = make_sphere(shift);
  cfg.beta_star = Vector::Zero(3);
  cfg.beta_star(0) = 1.0;
  cfg.n_grid = {200, 400};
  cfg.trials = 8;
  cfg.mc_eval_m = 5000;
  const std::string serial = to_csv(run_experiment(cfg, ExecPolicy::Serial));
  const std::string parallel = to_csv(run_experiment(cfg, ExecPolicy::Parallel));
  CHECK(serial == parallel);
  setenv("COVSHIFT_THREADS", "1", 1);
  const std::string one = to_csv(run_experiment(cfg));
  setenv("COVSHIFT_THREADS", "8", 1);
  const std::string eight = to_csv(run_experiment(cfg));
  unsetenv("COVSHIFT_THREADS");
  CHECK(one == serial);
  CHECK(eight == serial);
}

TEST_CASE("phase and constrained estimators through the runner") {
  ExperimentConfig cfg;
  cfg.model = ModelKind::PhaseRetrieval;
  cfg.source = make_sphere(3);
  cfg.target = make_sphere(3);
  cfg.beta_star = Vector::Ones(3) / std::sqrt(3.0);
  cfg.estimator = EstimatorKind::PhaseMLE;
  cfg.n_grid = {500};
  cfg.trials = 3;
  cfg.mc_eval_m = 2000;
  cfg.fit.max_iterations = 2000;
  for (const auto& r : run_experiment(cfg)) {
    CHECK(r.converged);
    CHECK(r.aligned_dist < 0.3);
    CHECK(r.excess_risk >= -4.0 * r.excess_risk_se);
  }

  ExperimentConfig c2 = linear_config(2, {100}, 3);
  c2.estimator = EstimatorKind::ConstrainedMLE;
  c2.constrained_center = Vector::Zero(2);
  c2.constrained_radius = 0.1;
  c2.fit.max_iterations = 1000;
  for (const auto& r : run_experiment(c2)) CHECK(r.param_dist >= c2.beta_star.norm() - 0.1 - 1e-9);
}

TEST_CASE("invalid experiment configs") {
  ExperimentConfig cfg = linear_config(2, {20, 10}, 1);
  CHECK(code_of([&] { run_experiment(cfg); }) == ErrorCode::InvalidArgument);
  cfg.n_grid = {10};
  cfg.trials = 0;
  CHECK(code_of([&] { run_experiment(cfg); }) == ErrorCode::InvalidArgument);
  cfg.trials = 1;
  cfg.target = make_sphere(3);
  CHECK(code_of([&] { run_experiment(cfg); }) == ErrorCode::DimensionMismatch);
  cfg.target = make_sphere(Vector::Ones(2));
  cfg.estimator = EstimatorKind::MWLE;
  CHECK(code_of([&] { run_experiment(cfg); }) == ErrorCode::UnsupportedPair);
}

TEST_CASE("config parsing") {
  std::istringstream text(
      "# linear shift\n"
      "model = linear\n"
      "dim = 2\n"
      "source = gaussian\n"
      "target = gaussian\n"
      "target.mean = 3, 4\n"
      "beta_star = 1, -1\n"
      "estimator = mle\n"
      "n_grid = 100, 200\n"
      "trials = 4   # inline comment\n"
      "seed = 9\n");
  const ConfigMap map = ConfigMap::parse(text);
  const ExperimentConfig cfg = experiment_from_config(map);
  CHECK(cfg.n_grid == std::vector<long long>{100, 200});
  CHECK(cfg.trials == 4);
  CHECK(cfg.master_seed == 9);
  CHECK(second_moment(cfg.target)(0, 1) == 12.0);

  ConfigMap missing = map;
  ConfigMap copy;
  std::istringstream partial("model = linear\ndim = 2\nsource = gaussian\ntarget = gaussian\n");
  copy = ConfigMap::parse(partial);
  try {
    experiment_from_config(copy);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("beta_star") != std::string::npos);
  }
  missing.set("n_grid", "100, x");
  CHECK(code_of([&] { experiment_from_config(missing); }) == ErrorCode::ConfigError);
  std::istringstream broken("just words\n");
  CHECK(code_of([&] { ConfigMap::parse(broken); }) == ErrorCode::ConfigError);
}
