// covshift: command-line front end for the experiment harness.

#include "covshift/bounds.hpp"
#include "covshift/config.hpp"
#include "covshift/fisher.hpp"
#include "covshift/harness.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

using namespace covshift;

namespace {

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* opt = cmd->add_option("--config", args.config, "key=value config file");
  if (config_required) opt->required();
  cmd->add_option("--seed", args.seed, "master seed (overrides the config)");
  cmd->add_option("--out", args.out, "output path (default: stdout)");
}

// Writes to --out or stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "' for writing");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::uint64_t seed_from(const CommonArgs& args, const ConfigMap& cfg) {
  if (args.seed) return *args.seed;
  return cfg.has("seed") ? cfg.u64("seed") : 0;
}

void print_matrix(std::ostream& out, const char* name, const Matrix& m) {
  out << name << " =\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << " ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ' ' << format_double(m(i, j));
    out << '\n';
  }
}

FisherPair pair_from_config(const ConfigMap& cfg, std::uint64_t seed) {
  const ModelKind model = model_from_config(cfg);
  const ShiftPair pair = make_shift_pair(distribution_from_config(cfg, "source"),
                                         distribution_from_config(cfg, "target"));
  const Vector beta = cfg.vector("beta_star");
  const auto m = static_cast<std::size_t>(cfg.integer_or("fisher_m", 200000));
  return fisher_pair(model, pair, beta, m, seed);
}

int cmd_simulate(const CommonArgs& args) {
  ConfigMap cfg = ConfigMap::load(args.config);
  if (args.seed) cfg.set("seed", std::to_string(*args.seed));
  const ExperimentConfig exp = experiment_from_config(cfg);
  const auto rows = run_experiment(exp);
  Output out(args.out);
  write_csv(out.stream(), rows);
  return 0;
}

int cmd_rate(const CommonArgs& args, const std::string& in_path, std::optional<double> trace,
             const std::string& metric_name) {
  std::ifstream in(in_path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open '" + in_path + "'");
  const auto rows = read_csv(in);
  double tr = 1.0;
  if (trace) {
    tr = *trace;
  } else if (!args.config.empty()) {
    const ConfigMap cfg = ConfigMap::load(args.config);
    tr = transfer_trace(pair_from_config(cfg, seed_from(args, cfg)));
  }
  const RateReport rep = rate_fit(rows, tr, parse_rate_metric(metric_name));
  char buf[128];
  std::snprintf(buf, sizeof buf, "slope=%.3f\nintercept=%.6g\nr_squared=%.6f\n", rep.slope,
                rep.intercept, rep.r_squared);
  std::cout << buf;
  for (const auto& [n, level] : rep.normalized_levels) {
    std::snprintf(buf, sizeof buf, "n=%lld mean=%.6g normalized=%.4f\n", n, rep.mean_metric.at(n), level);
    std::cout << buf;
  }
  if (!args.out.empty()) {
    Output out(args.out);
    out.stream() << "n,mean,normalized_level\n";
    for (const auto& [n, level] : rep.normalized_levels) {
      out.stream() << n << ',' << format_double(rep.mean_metric.at(n)) << ',' << format_double(level)
                   << '\n';
    }
  }
  return 0;
}

int cmd_fisher(const CommonArgs& args) {
  const ConfigMap cfg = ConfigMap::load(args.config);
  const std::uint64_t seed = seed_from(args, cfg);
  const FisherPair pair = pair_from_config(cfg, seed);
  Output out(args.out);
  print_matrix(out.stream(), "I_S", pair.source);
  print_matrix(out.stream(), "I_T", pair.target);
  out.stream() << "transfer_trace = " << format_double(transfer_trace(pair)) << '\n';
  const ShiftPair shift = make_shift_pair(distribution_from_config(cfg, "source"),
                                          distribution_from_config(cfg, "target"));
  if (supports_density_ratio(shift)) {
    const auto m = static_cast<std::size_t>(cfg.integer_or("fisher_m", 200000));
    const WeightedPair w = weighted_information(model_from_config(cfg), shift,
                                                cfg.vector("beta_star"), m, derive_seed(seed, 3));
    out.stream() << "weighted_trace = " << format_double(w.trace) << '\n';
    out.stream() << "weighted_trace_se = " << format_double(w.trace_se) << '\n';
  }
  return 0;
}

int cmd_lowerbound(const CommonArgs& args) {
  const ConfigMap cfg = ConfigMap::load(args.config);
  const FisherPair pair = pair_from_config(cfg, seed_from(args, cfg));
  RadiiInputs in{pair.source, pair.target, cfg.real_or("lipschitz_source", 0.0),
                 cfg.real_or("lipschitz_target", 0.0), cfg.real_or("b3", 0.0),
                 cfg.real_or("prior_radius", 1.0)};
  const Radii radii = localization_radii(in);
  const int d = static_cast<int>(pair.source.rows());
  Output out(args.out);
  out.stream() << "# R0=" << format_double(radii.r0) << " R1=" << format_double(radii.r1)
               << " n0=" << format_double(van_trees_min_n(pair, radii.r1, d)) << '\n';
  out.stream() << "n,van_trees_bound,reference_1_over_50n\n";
  for (long long n : cfg.integers("n_grid")) {
    out.stream() << n << ',' << format_double(van_trees_bound(pair, radii.r1, d, n)) << ','
                 << format_double(1.0 / (50.0 * static_cast<double>(n))) << '\n';
  }
  return 0;
}

int cmd_concentration(const CommonArgs& args) {
  const ConfigMap cfg = ConfigMap::load(args.config);
  const std::string kind = cfg.str("generator");
  const int d = static_cast<int>(cfg.integer("dim"));
  VectorGenerator gen;
  if (kind == "sphere") {
    gen = sphere_generator(d);
  } else if (kind == "gaussian") {
    gen = gaussian_generator(d);
  } else {
    throw Error(ErrorCode::ConfigError, "config key 'generator': unknown value '" + kind + "'");
  }
  const CoverageReport rep = concentration_check(gen, cfg.integer("n"), cfg.real("delta"),
                                                 cfg.integer("trials"), cfg.real_or("c", 4.0),
                                                 seed_from(args, cfg));
  Output out(args.out);
  out.stream() << "generator,n,delta,trials,threshold,exceedance\n"
               << kind << ',' << cfg.integer("n") << ',' << format_double(cfg.real("delta")) << ','
               << rep.trials << ',' << format_double(rep.threshold) << ','
               << format_double(rep.exceedance) << '\n';
  return 0;
}

int cmd_misspec(const CommonArgs& args) {
  const ConfigMap cfg = ConfigMap::load(args.config);
  const double mu = cfg.real("mu");
  const long long n = cfg.integer("n");
  const long long reps = cfg.integer_or("reps", 1);
  const std::uint64_t seed = seed_from(args, cfg);
  Output out(args.out);
  out.stream() << "rep,seed,beta_mle,beta_mwle,beta_star\n";
  for (long long r = 0; r < reps; ++r) {
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(r));
    const MisspecResult m = misspec_demo(mu, n, s);
    out.stream() << r << ',' << s << ',' << format_double(m.beta_mle) << ','
                 << format_double(m.beta_mwle) << ',' << format_double(m.beta_star) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariate-shift estimation experiments"};
  app.require_subcommand(1);

  CommonArgs sim_args, rate_args, fisher_args, lb_args, conc_args, mis_args;
  auto* sim = app.add_subcommand("simulate", "run an experiment and write per-trial CSV rows");
  add_common(sim, sim_args, true);

  auto* rate = app.add_subcommand("rate", "fit the log-log rate of a results CSV");
  add_common(rate, rate_args, false);
  std::string rate_in;
  std::optional<double> rate_trace;
  std::string rate_metric = "excess_risk";
  rate->add_option("--in", rate_in, "results CSV")->required();
  rate->add_option("--trace", rate_trace, "normalizing trace Tr(I_T I_S^-1)");
  rate->add_option("--metric", rate_metric, "excess_risk | aligned_dist_sq | param_dist_sq");

  auto* fisher = app.add_subcommand("fisher", "print Fisher matrices and traces");
  add_common(fisher, fisher_args, true);
  auto* lb = app.add_subcommand("lowerbound", "van Trees bound over an n grid");
  add_common(lb, lb_args, true);
  auto* conc = app.add_subcommand("concentration", "empirical coverage of the concentration threshold");
  add_common(conc, conc_args, true);
  auto* mis = app.add_subcommand("misspec", "MLE vs MWLE under a mis-specified quadratic truth");
  add_common(mis, mis_args, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(sim_args);
    if (*rate) return cmd_rate(rate_args, rate_in, rate_trace, rate_metric);
    if (*fisher) return cmd_fisher(fisher_args);
    if (*lb) return cmd_lowerbound(lb_args);
    if (*conc) return cmd_concentration(conc_args);
    if (*mis) return cmd_misspec(mis_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
