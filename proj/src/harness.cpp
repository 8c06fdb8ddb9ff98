#include "covshift/harness.hpp"

#include "covshift/risk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace covshift {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream tags so data, fitting and risk evaluation never share a stream.
constexpr std::uint64_t kFitStream = 0x66697421;
constexpr std::uint64_t kRiskStream = 0x7269736b;

bool has_closed_risk(const ExperimentConfig& cfg) {
  if (cfg.model != ModelKind::Linear) return false;
  if (const auto* s = std::get_if<SphereDist>(&cfg.target)) return !s->shifted();
  return true;
}

TrialResult run_trial(const ExperimentConfig& cfg, const ShiftPair& pair, long long n, int trial) {
  TrialResult row;
  row.model = cfg.model;
  row.d = static_cast<int>(cfg.beta_star.size());
  row.n = n;
  row.trial = trial;
  row.estimator = cfg.estimator;
  row.seed = trial_seed(cfg.master_seed, n, trial);
  row.aligned_dist = kNaN;

  Rng rng(row.seed);
  const Dataset data = draw_source_sample(cfg, n, rng);

  FitOptions opts = cfg.fit;
  opts.seed = derive_seed(row.seed, kFitStream);

  Estimate est;
  try {
    switch (cfg.estimator) {
      case EstimatorKind::MLE:
        est = fit_mle(cfg.model, data, opts);
        break;
      case EstimatorKind::MWLE: {
        std::vector<double> w(static_cast<std::size_t>(n));
        for (long long i = 0; i < n; ++i) {
          w[static_cast<std::size_t>(i)] = density_ratio(pair, data.x.row(i).transpose());
        }
        est = fit_mwle(cfg.model, data, w, opts);
        break;
      }
      case EstimatorKind::ConstrainedMLE:
        est = fit_constrained_mle(cfg.model, data, cfg.constrained_center, cfg.constrained_radius,
                                  opts);
        break;
      case EstimatorKind::PhaseMLE:
        est = fit_phase_retrieval(data, opts);
        break;
    }
  } catch (const Error&) {
    row.converged = false;
    row.excess_risk = kNaN;
    row.excess_risk_se = kNaN;
    row.param_dist = kNaN;
    return row;
  }

  row.converged = est.converged;
  row.param_dist = (est.beta_hat - cfg.beta_star).norm();
  if (cfg.model == ModelKind::PhaseRetrieval) {
    row.aligned_dist = aligned_distance(est.beta_hat, cfg.beta_star);
  }
  // Trials already run in parallel, so the inner Monte Carlo stays serial.
  const RiskValue risk =
      has_closed_risk(cfg)
          ? excess_risk_closed(cfg.model, cfg.target, est.beta_hat, cfg.beta_star)
          : excess_risk_mc(cfg.model, cfg.target, est.beta_hat, cfg.beta_star, cfg.mc_eval_m,
                           derive_seed(row.seed, kRiskStream), ExecPolicy::Serial);
  row.excess_risk = risk.value;
  row.excess_risk_se = risk.standard_error;
  return row;
}

double metric_value(const TrialResult& r, RateMetric metric) {
  switch (metric) {
    case RateMetric::ExcessRisk: return r.excess_risk;
    case RateMetric::AlignedDistSq: return r.aligned_dist * r.aligned_dist;
    case RateMetric::ParamDistSq: return r.param_dist * r.param_dist;
  }
  return kNaN;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double_field(const std::string& s) {
  if (s.empty() || s == "nan") return kNaN;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument(s);
  return v;
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::MLE: return "mle";
    case EstimatorKind::MWLE: return "mwle";
    case EstimatorKind::ConstrainedMLE: return "constrained";
    case EstimatorKind::PhaseMLE: return "phase";
  }
  return "?";
}

EstimatorKind parse_estimator_kind(std::string_view name) {
  if (name == "mle") return EstimatorKind::MLE;
  if (name == "mwle") return EstimatorKind::MWLE;
  if (name == "constrained") return EstimatorKind::ConstrainedMLE;
  if (name == "phase") return EstimatorKind::PhaseMLE;
  throw Error(ErrorCode::InvalidArgument, "unknown estimator '" + std::string(name) + "'");
}

void validate(const ExperimentConfig& cfg) {
  const int d = static_cast<int>(cfg.beta_star.size());
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "beta_star is empty");
  require_same_dim(dimension(cfg.source), d, "experiment: source");
  require_same_dim(dimension(cfg.target), d, "experiment: target");
  if (cfg.n_grid.empty()) throw Error(ErrorCode::InvalidArgument, "n_grid is empty");
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
    if (cfg.n_grid[i] < 1) throw Error(ErrorCode::InvalidArgument, "n_grid entries must be positive");
    if (i > 0 && cfg.n_grid[i] <= cfg.n_grid[i - 1]) {
      throw Error(ErrorCode::InvalidArgument, "n_grid must be strictly increasing");
    }
  }
  if (cfg.trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  if (!(cfg.noise_sd >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise_sd must be >= 0");
  if (cfg.truth == TruthKind::PiecewiseBall) {
    require_same_dim(cfg.beta_star_outer.size(), d, "experiment: beta_star_outer");
    if (!std::holds_alternative<BallDist>(cfg.target)) {
      throw Error(ErrorCode::InvalidArgument, "piecewise_ball truth needs a ball target");
    }
  }
  if (cfg.estimator == EstimatorKind::MWLE &&
      !supports_density_ratio(ShiftPair{cfg.source, cfg.target})) {
    throw Error(ErrorCode::UnsupportedPair, "mwle: density ratio unavailable for this pair");
  }
  if (cfg.estimator == EstimatorKind::ConstrainedMLE) {
    require_same_dim(cfg.constrained_center.size(), d, "experiment: constrained_center");
    if (!(cfg.constrained_radius > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "constrained_radius must be positive");
    }
  }
  if (cfg.estimator == EstimatorKind::PhaseMLE && cfg.model != ModelKind::PhaseRetrieval) {
    throw Error(ErrorCode::InvalidArgument, "phase estimator needs the phase model");
  }
  if (!has_closed_risk(cfg) && cfg.mc_eval_m < 1000) {
    throw Error(ErrorCode::InvalidArgument, "mc_eval_m must be >= 1000");
  }
}

std::uint64_t trial_seed(std::uint64_t master_seed, long long n, int trial) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(trial));
}

Dataset draw_source_sample(const ExperimentConfig& cfg, long long n, Rng& rng) {
  const int d = static_cast<int>(cfg.beta_star.size());
  Dataset data;
  data.x.resize(n, d);
  data.y.resize(n);
  const double inner_radius =
      cfg.truth == TruthKind::PiecewiseBall ? std::get<BallDist>(cfg.target).radius : 0.0;
  Vector x(d);
  for (long long i = 0; i < n; ++i) {
    sample_covariate_into(cfg.source, rng, x);
    const Vector& beta = (cfg.truth == TruthKind::PiecewiseBall && x.norm() > inner_radius)
                             ? cfg.beta_star_outer
                             : cfg.beta_star;
    data.x.row(i) = x.transpose();
    data.y(i) = sample_response(cfg.model, x, beta, rng, cfg.noise_sd);
  }
  return data;
}

std::vector<TrialResult> run_experiment(const ExperimentConfig& cfg, ExecPolicy policy) {
  validate(cfg);
  const ShiftPair pair{cfg.source, cfg.target};
  const long long per_n = cfg.trials;
  const long long tasks = static_cast<long long>(cfg.n_grid.size()) * per_n;
  // Preallocated slots indexed by (n, trial) keep the output order fixed.
  std::vector<TrialResult> rows(static_cast<std::size_t>(tasks));

  auto run = [&](long long k) {
    const long long n = cfg.n_grid[static_cast<std::size_t>(k / per_n)];
    rows[static_cast<std::size_t>(k)] = run_trial(cfg, pair, n, static_cast<int>(k % per_n));
  };
  if (policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
    for (long long k = 0; k < tasks; ++k) run(k);
  } else {
    for (long long k = 0; k < tasks; ++k) run(k);
  }
  return rows;
}

RateMetric parse_rate_metric(std::string_view name) {
  if (name == "excess_risk") return RateMetric::ExcessRisk;
  if (name == "aligned_dist_sq") return RateMetric::AlignedDistSq;
  if (name == "param_dist_sq") return RateMetric::ParamDistSq;
  throw Error(ErrorCode::InvalidArgument, "unknown metric '" + std::string(name) + "'");
}

RateReport rate_fit(const std::vector<TrialResult>& rows, double trace, RateMetric metric) {
  if (!(trace > 0.0)) throw Error(ErrorCode::InvalidArgument, "rate_fit: trace must be positive");
  std::map<long long, std::pair<double, long long>> sums;  // n -> (sum, count of finite)
  std::map<long long, long long> totals;
  for (const TrialResult& r : rows) {
    ++totals[r.n];
    const double v = metric_value(r, metric);
    if (std::isfinite(v)) {
      auto& s = sums[r.n];
      s.first += v;
      ++s.second;
    }
  }
  if (totals.size() < 4) {
    throw Error(ErrorCode::InsufficientGrid, "rate_fit: need at least 4 distinct n");
  }
  for (const auto& [n, count] : totals) {
    if (count < 50) {
      throw Error(ErrorCode::InsufficientGrid,
                  "rate_fit: need at least 50 trials at n=" + std::to_string(n));
    }
  }

  RateReport report;
  std::vector<double> lx;
  std::vector<double> ly;
  for (const auto& [n, s] : sums) {
    if (s.second == 0) continue;
    const double mean = s.first / static_cast<double>(s.second);
    report.mean_metric[n] = mean;
    report.normalized_levels[n] = static_cast<double>(n) * mean / trace;
    if (mean > 0.0) {
      lx.push_back(std::log(static_cast<double>(n)));
      ly.push_back(std::log(mean));
    }
  }
  if (lx.size() < 4) {
    throw Error(ErrorCode::InsufficientGrid, "rate_fit: fewer than 4 usable grid points");
  }

  const double k = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  report.slope = sxy / sxx;
  report.intercept = my - report.slope * mx;
  report.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return report;
}

MisspecResult misspec_demo(double mu, long long n, std::uint64_t seed) {
  if (!(mu >= 0.0)) throw Error(ErrorCode::InvalidArgument, "misspec_demo: mu must be >= 0");
  if (n < 100) throw Error(ErrorCode::InvalidArgument, "misspec_demo: n must be >= 100");
  Rng rng(seed);
  Dataset data;
  data.x.resize(n, 1);
  data.y.resize(n);
  std::vector<double> w(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    const double x = -mu + standard_normal(rng);
    data.x(i, 0) = x;
    data.y(i) = x * x + standard_normal(rng);
    // N(mu,1) / N(-mu,1)
    w[static_cast<std::size_t>(i)] = std::exp(2.0 * mu * x);
  }
  MisspecResult out;
  out.beta_mle = fit_mle(ModelKind::Linear, data).beta_hat(0);
  out.beta_mwle = fit_mwle(ModelKind::Linear, data, w).beta_hat(0);
  out.beta_star = (mu * mu * mu + 3.0 * mu) / (mu * mu + 1.0);
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& out, const std::vector<TrialResult>& rows) {
  out << kCsvHeader << '\n';
  for (const TrialResult& r : rows) {
    out << to_string(r.model) << ',' << r.d << ',' << r.n << ',' << r.trial << ','
        << to_string(r.estimator) << ',' << format_double(r.excess_risk) << ','
        << format_double(r.excess_risk_se) << ',' << format_double(r.param_dist) << ','
        << (std::isnan(r.aligned_dist) ? std::string() : format_double(r.aligned_dist)) << ','
        << (r.converged ? 1 : 0) << ',' << r.seed << '\n';
  }
}

std::vector<TrialResult> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw Error(ErrorCode::ConfigError, "csv: missing or unexpected header");
  }
  std::vector<TrialResult> rows;
  long long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 11) {
      throw Error(ErrorCode::ConfigError, "csv: line " + std::to_string(line_no) + " has " +
                                              std::to_string(f.size()) + " fields");
    }
    try {
      TrialResult r;
      r.model = parse_model_kind(f[0]);
      r.d = std::stoi(f[1]);
      r.n = std::stoll(f[2]);
      r.trial = std::stoi(f[3]);
      r.estimator = parse_estimator_kind(f[4]);
      r.excess_risk = parse_double_field(f[5]);
      r.excess_risk_se = parse_double_field(f[6]);
      r.param_dist = parse_double_field(f[7]);
      r.aligned_dist = parse_double_field(f[8]);
      r.converged = f[9] == "1";
      r.seed = std::stoull(f[10]);
      rows.push_back(r);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ConfigError,
                  "csv: bad value on line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace covshift
