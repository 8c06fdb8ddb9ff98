// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include "oracles.hpp"

#include "covshift/bounds.hpp"
#include "covshift/estimators.hpp"
#include "covshift/fisher.hpp"
#include "covshift/harness.hpp"
#include "covshift/risk.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace covshift;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Vector unit(int d, int k) {
  Vector e = Vector::Zero(d);
  e(k) = 1.0;
  return e;
}

Vector random_normal(int d, Rng& rng) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = standard_normal(rng);
  return v;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

// ---- criterion 1 ----------------------------------------------------------

Outcome ols_oracle() {
  Rng rng(derive_seed(1001, 0));
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const int d = 1 + static_cast<int>(uniform01(rng) * 20.0);
    const int n = std::min(1000, 2 * d + static_cast<int>(uniform01(rng) * 1000.0));
    Dataset data;
    data.x.resize(n, d);
    data.y.resize(n);
    const Vector beta = random_normal(d, rng);
    for (int i = 0; i < n; ++i) {
      data.x.row(i) = random_normal(d, rng).transpose();
      data.y(i) = data.x.row(i).dot(beta) + standard_normal(rng);
    }
    const Vector got = fit_mle(ModelKind::Linear, data).beta_hat;
    const Vector want = oracle::normal_equations(data.x, data.y);
    worst = std::max(worst, (got - want).lpNorm<Eigen::Infinity>());
  }
  return {worst <= 1e-8, fmt("max inf-norm diff %.3g over 100 instances", worst)};
}

// ---- criterion 2 ----------------------------------------------------------

Outcome derivative_suite() {
  Rng rng(derive_seed(1002, 0));
  double worst = 0.0;
  int checked = 0;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
  for (ModelKind model : {ModelKind::Linear, ModelKind::Logistic, ModelKind::PhaseRetrieval}) {
    for (int p = 0; p < 1000; ++p) {
      const int d = 1 + static_cast<int>(uniform01(rng) * 6.0);
      Observation obs;
      obs.x = random_normal(d, rng);
      const Vector beta_star = random_normal(d, rng);
      obs.y = sample_response(model, obs.x, beta_star, rng);
      const Vector b = random_normal(d, rng);
      auto f = [&](const Vector& v) { return loss(model, obs, v); };
      auto g = [&](const Vector& v) { return gradient(model, obs, v); };
      const Vector ga = gradient(model, obs, b);
      const Matrix ha = hessian(model, obs, b);
      const Vector gf = oracle::fd_gradient(f, b);
      const Matrix hf = oracle::fd_jacobian(g, b);
      for (int i = 0; i < d; ++i) {
        worst = std::max(worst, rel(ga(i), gf(i)));
        for (int j = 0; j < d; ++j) worst = std::max(worst, rel(ha(i, j), hf(i, j)));
      }
      ++checked;
    }
  }
  return {worst <= 1e-5, fmt("max rel err %.3g over %.0f points", worst, checked)};
}

// ---- criteria 3, 10, 12 ---------------------------------------------------

ExperimentConfig linear_rate_config() {
  ExperimentConfig cfg;
  cfg.model = ModelKind::Linear;
  cfg.source = make_gaussian(Vector::Zero(5), 1.0);
  cfg.target = make_gaussian(vec({2, 0, 0, 0, 0}), 1.0);
  cfg.beta_star = vec({1, -0.5, 0.25, 0, 0.75});
  cfg.estimator = EstimatorKind::MLE;
  cfg.n_grid = {200, 400, 800, 1600, 3200, 6400};
  cfg.trials = 200;
  cfg.master_seed = 42;
  return cfg;
}

std::string csv_of(const std::vector<TrialResult>& rows) {
  std::ostringstream out;
  write_csv(out, rows);
  return out.str();
}

struct LinearRun {
  std::vector<TrialResult> rows;
  FisherPair pair;
  double trace = 0.0;
};

LinearRun& linear_run() {
  static LinearRun run = [] {
    LinearRun r;
    const ExperimentConfig cfg = linear_rate_config();
    r.rows = run_experiment(cfg);
    r.pair = fisher_pair(cfg.model, make_shift_pair(cfg.source, cfg.target), cfg.beta_star, 200000, 0);
    r.trace = transfer_trace(r.pair);
    return r;
  }();
  return run;
}

Outcome linear_rate() {
  const LinearRun& run = linear_run();
  // |alpha|^2 + sigma^2 d = 4 + 5
  const double expected_trace = 9.0;
  const RateReport rep = rate_fit(run.rows, run.trace);
  bool ok = std::abs(run.trace - expected_trace) < 1e-10;
  ok = ok && rep.slope >= -1.15 && rep.slope <= -0.85;
  double lo = 1e300, hi = -1e300;
  for (const auto& [n, level] : rep.normalized_levels) {
    if (n < 800) continue;
    lo = std::min(lo, level);
    hi = std::max(hi, level);
  }
  ok = ok && lo >= 0.4 && hi <= 0.6;
  return {ok, fmt("slope %.3f, levels(n>=800) in [%.3f, %.3f], trace %.6g", rep.slope, lo, hi,
                  run.trace)};
}

Outcome van_trees_consistency() {
  const LinearRun& run = linear_run();
  const RateReport rep = rate_fit(run.rows, run.trace);
  const Radii radii = localization_radii({run.pair.source, run.pair.target, 0.0, 0.0, 0.0, 1.0});
  bool ok = true;
  double min_ratio = 1e300;
  for (const auto& [n, mean] : rep.mean_metric) {
    const double normalized = mean / run.trace;
    const double bound = van_trees_bound(run.pair, radii.r1, 5, n);
    ok = ok && normalized >= bound;
    min_ratio = std::min(min_ratio, normalized / bound);
  }
  return {ok, fmt("R1 %.4g, min normalized-risk/bound ratio %.3g", radii.r1, min_ratio)};
}

Outcome determinism() {
  const ExperimentConfig cfg = linear_rate_config();
  const std::string first = csv_of(linear_run().rows);
  const std::string again = csv_of(run_experiment(cfg));
  const char* saved = std::getenv("COVSHIFT_THREADS");
  const std::string saved_value = saved ? saved : "";
  setenv("COVSHIFT_THREADS", "1", 1);
  const std::string one = csv_of(run_experiment(cfg));
  setenv("COVSHIFT_THREADS", "8", 1);
  const std::string eight = csv_of(run_experiment(cfg));
  if (saved) {
    setenv("COVSHIFT_THREADS", saved_value.c_str(), 1);
  } else {
    unsetenv("COVSHIFT_THREADS");
  }
  const bool ok = first == again && first == one && first == eight;
  auto verdict = [&](const std::string& other) { return other == first ? "equal" : "DIFFER"; };
  return {ok, fmt("%.0f bytes; ", static_cast<double>(first.size())) + "rerun " + verdict(again) +
                  ", 1 thread " + verdict(one) + ", 8 threads " + verdict(eight)};
}

// ---- criterion 4 ----------------------------------------------------------

Outcome phase_eigenstructure() {
  const int d = 6;
  const SphereEigs e = sphere_phase_eigs(d);
  bool ok = std::abs(e.lambda1 - 9.0) < 1e-12 && std::abs(e.lambda2 - 3.0) < 1e-12 &&
            std::abs(e.lambda3 - 4.0) < 1e-12;
  const Vector beta = unit(d, 0);
  double worst_z = 0.0;
  for (const CovariateDistribution& dist : {make_sphere(d), make_sphere(Vector(2.0 * unit(d, 1)))}) {
    const Matrix closed = fisher_closed_form(ModelKind::PhaseRetrieval, dist, beta);
    const MatrixEstimate mc =
        fisher_monte_carlo(ModelKind::PhaseRetrieval, dist, beta, 200000, derive_seed(1004, 0));
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        const double se = mc.standard_error(i, j);
        const double diff = std::abs(mc.mean(i, j) - closed(i, j));
        if (se > 0) worst_z = std::max(worst_z, diff / se);
        if (se == 0 && diff > 1e-12) ok = false;
      }
    }
  }
  ok = ok && worst_z <= 3.0;
  return {ok, fmt("eigs (%.4g, %.4g, %.4g); max |MC - closed|/SE %.2f", e.lambda1, e.lambda2,
                  e.lambda3, worst_z)};
}

// ---- criterion 5 ----------------------------------------------------------

Outcome logistic_shift_scaling() {
  const int d = 3;
  const SphereEigs eigs = sphere_logistic_eigs(d, 1'000'000, derive_seed(1005, 1));
  std::vector<double> means;
  std::string detail;
  bool ok = true;
  for (double r : {0.0, 2.0, 4.0}) {
    ExperimentConfig cfg;
    cfg.model = ModelKind::Logistic;
    cfg.source = make_sphere(d);
    cfg.target = make_sphere(Vector(r * unit(d, 1)));
    cfg.beta_star = unit(d, 0);
    cfg.n_grid = {5000};
    cfg.trials = 300;
    cfg.master_seed = 1005;
    const auto rows = run_experiment(cfg);
    double sum = 0.0;
    for (const auto& row : rows) {
      ok = ok && row.converged;
      sum += row.excess_risk;
    }
    means.push_back(sum / static_cast<double>(rows.size()));
    const double predicted = (d + r * r * eigs.lambda3 / eigs.lambda2) / d;
    const double observed = means.back() / means.front();
    ok = ok && observed >= predicted / 2.0 && observed <= predicted * 2.0;
    detail += fmt("r=%.0f ratio %.3f (pred %.3f); ", r, observed, predicted);
  }
  return {ok, detail};
}

// ---- criterion 6 ----------------------------------------------------------

Outcome phase_rate() {
  const int d = 5;
  ExperimentConfig cfg;
  cfg.model = ModelKind::PhaseRetrieval;
  cfg.source = make_sphere(d);
  cfg.target = make_sphere(d);
  cfg.beta_star = unit(d, 0);
  cfg.estimator = EstimatorKind::PhaseMLE;
  cfg.n_grid = {1000, 2000, 4000, 8000, 16000};
  cfg.trials = 200;
  cfg.master_seed = 1006;
  cfg.mc_eval_m = 1000;
  cfg.fit.max_iterations = 2000;
  const auto rows = run_experiment(cfg);
  long long converged = 0;
  for (const auto& row : rows) converged += row.converged ? 1 : 0;
  const RateReport rep = rate_fit(rows, 1.0, RateMetric::AlignedDistSq);
  bool ok = rep.slope >= -1.2 && rep.slope <= -0.8;

  // noiseless recovery at n = 50 d
  cfg.noise_sd = 0.0;
  Rng rng(derive_seed(1006, 1));
  const Dataset data = draw_source_sample(cfg, 50 * d, rng);
  FitOptions opts = cfg.fit;
  opts.seed = derive_seed(1006, 2);
  const Estimate est = fit_phase_retrieval(data, opts);
  const double err = aligned_distance(est.beta_hat, cfg.beta_star);
  ok = ok && err <= 1e-6;
  return {ok, fmt("slope %.3f (r^2 %.3f), converged %.0f/1000, noiseless err %.2g", rep.slope,
                  rep.r_squared, static_cast<double>(converged), err)};
}

// ---- criterion 7 ----------------------------------------------------------

Outcome misspecification() {
  std::vector<double> mle, mwle;
  int opposite = 0;
  double beta_star = 0.0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const MisspecResult m = misspec_demo(1.0, 20000, derive_seed(1007, r));
    mle.push_back(m.beta_mle);
    mwle.push_back(m.beta_mwle);
    beta_star = m.beta_star;
    if ((m.beta_mle > 0) != (m.beta_mwle > 0)) ++opposite;
  }
  // single MWLE fits are heavy-tailed at this n, so location is judged by the median
  const double med_mle = median(mle);
  const double med_mwle = median(mwle);
  const bool ok = std::abs(beta_star - 2.0) < 1e-12 && std::abs(med_mwle - 2.0) <= 0.2 &&
                  std::abs(med_mle + 2.0) <= 0.2 && opposite >= 99;
  return {ok, fmt("beta* %.4g, median MWLE %.4f, median MLE %.4f, opposite signs %.0f/100", beta_star,
                  med_mwle, med_mle, opposite)};
}

// ---- criteria 8, 9 --------------------------------------------------------

ExperimentConfig ball_config(EstimatorKind est) {
  ExperimentConfig cfg;
  cfg.model = ModelKind::Linear;
  cfg.source = make_ball(3, 2.0);
  cfg.target = make_ball(3, 1.0);
  cfg.beta_star = vec({1, -1, 0.5});
  cfg.estimator = est;
  cfg.n_grid = {1000};
  cfg.trials = 500;
  cfg.master_seed = 1008;
  return cfg;
}

Outcome mwle_efficiency() {
  // same master seed, so both estimators see identical samples
  const auto mle = run_experiment(ball_config(EstimatorKind::MLE));
  const auto mwle = run_experiment(ball_config(EstimatorKind::MWLE));
  double sum = 0.0, sum_sq = 0.0, mle_mean = 0.0, mwle_mean = 0.0;
  const double k = static_cast<double>(mle.size());
  for (std::size_t i = 0; i < mle.size(); ++i) {
    const double diff = mle[i].excess_risk - mwle[i].excess_risk;
    sum += diff;
    sum_sq += diff * diff;
    mle_mean += mle[i].excess_risk / k;
    mwle_mean += mwle[i].excess_risk / k;
  }
  const double mean_diff = sum / k;
  const double se = std::sqrt((sum_sq / k - mean_diff * mean_diff) / (k - 1.0));
  bool ok = mean_diff <= 2.0 * se;

  const ExperimentConfig cfg = ball_config(EstimatorKind::MWLE);
  const ShiftPair pair = make_shift_pair(cfg.source, cfg.target);
  const double tr = transfer_trace(fisher_pair(cfg.model, pair, cfg.beta_star, 200000, 0));
  const WeightedPair w = weighted_information(cfg.model, pair, cfg.beta_star, 1'000'000, 1008);
  ok = ok && w.trace >= tr - 4.0 * w.trace_se;
  return {ok, fmt("mean risk MLE %.4g vs MWLE %.4g (paired SE %.2g); ", mle_mean, mwle_mean, se) +
                  fmt("Tr_w %.4g (SE %.2g) >= Tr %.4g", w.trace, w.trace_se, tr)};
}

Outcome ball_identity() {
  const ExperimentConfig cfg = ball_config(EstimatorKind::MWLE);
  const WeightedPair w = weighted_information(cfg.model, make_shift_pair(cfg.source, cfg.target),
                                              cfg.beta_star, 1'000'000, 1009);
  // W d with W = (2/1)^3 = 8, d = 3
  const double z = std::abs(w.trace - 24.0) / w.trace_se;
  return {z <= 4.0, fmt("Tr(G_w H_w^-1) %.4f, SE %.3g, |z| %.2f", w.trace, w.trace_se, z)};
}

// ---- criterion 11 ---------------------------------------------------------

Outcome concentration_coverage() {
  const CoverageReport bounded = concentration_check(sphere_generator(10), 10000, 0.1, 10000, 4.0, 1011);
  const CoverageReport gauss =
      concentration_check(gaussian_generator(10), 10000, 0.1, 10000, 4.0, derive_seed(1011, 1));
  const bool ok = bounded.exceedance <= 0.1 && gauss.exceedance <= 0.1;
  return {ok, fmt("bounded exceedance %.4f (t=%.4g), sub-Gaussian exceedance %.4f (t=%.4g)",
                  bounded.exceedance, bounded.threshold, gauss.exceedance, gauss.threshold)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "OLS oracle equivalence", 5, ols_oracle},
      {2, "derivative suite", 10, derivative_suite},
      {3, "linear rate", 120, linear_rate},
      {4, "phase eigenstructure", 30, phase_eigenstructure},
      {5, "logistic shift scaling", 180, logistic_shift_scaling},
      {6, "phase estimation rate", 300, phase_rate},
      {7, "mis-specification", 30, misspecification},
      {8, "MWLE vs MLE efficiency", 120, mwle_efficiency},
      {9, "ball-construction identity", 30, ball_identity},
      {10, "van Trees consistency", 120, van_trees_consistency},
      {11, "concentration coverage", 120, concentration_coverage},
      {12, "determinism", 600, determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = out.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s %2d %-28s %7.2fs  %s%s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs,
                out.detail.c_str(), in_time ? "" : " [over time budget]");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
