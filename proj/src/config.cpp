#include "covshift/config.hpp"

#include <fstream>
#include <istream>
#include <sstream>

namespace covshift {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ConfigError, "config key '" + key + "': " + what);
}

template <class T, class Parse>
T parse_scalar(const std::string& key, const std::string& text, Parse parse) {
  try {
    std::size_t used = 0;
    T v = parse(text, &used);
    if (used != text.size()) bad(key, "cannot parse '" + text + "'");
    return v;
  } catch (const std::logic_error&) {
    bad(key, "cannot parse '" + text + "'");
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

}  // namespace

ConfigMap ConfigMap::parse(std::istream& in) {
  ConfigMap cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError,
                  "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorCode::ConfigError, "config line " + std::to_string(line_no) + ": empty key");
    }
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

ConfigMap ConfigMap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config '" + path + "'");
  return parse(in);
}

const std::string& ConfigMap::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) bad(key, "missing");
  return it->second;
}

double ConfigMap::real(const std::string& key) const {
  return parse_scalar<double>(key, str(key),
                              [](const std::string& s, std::size_t* p) { return std::stod(s, p); });
}

long long ConfigMap::integer(const std::string& key) const {
  return parse_scalar<long long>(
      key, str(key), [](const std::string& s, std::size_t* p) { return std::stoll(s, p); });
}

std::uint64_t ConfigMap::u64(const std::string& key) const {
  const std::string& text = str(key);
  if (!text.empty() && text[0] == '-') bad(key, "must be non-negative");
  return parse_scalar<std::uint64_t>(
      key, text, [](const std::string& s, std::size_t* p) { return std::stoull(s, p); });
}

std::vector<double> ConfigMap::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(str(key))) {
    out.push_back(parse_scalar<double>(
        key, item, [](const std::string& s, std::size_t* p) { return std::stod(s, p); }));
  }
  if (out.empty()) bad(key, "empty list");
  return out;
}

std::vector<long long> ConfigMap::integers(const std::string& key) const {
  std::vector<long long> out;
  for (const auto& item : split_list(str(key))) {
    out.push_back(parse_scalar<long long>(
        key, item, [](const std::string& s, std::size_t* p) { return std::stoll(s, p); }));
  }
  if (out.empty()) bad(key, "empty list");
  return out;
}

Vector ConfigMap::vector(const std::string& key) const {
  const auto v = reals(key);
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string ConfigMap::str_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? str(key) : fallback;
}

double ConfigMap::real_or(const std::string& key, double fallback) const {
  return has(key) ? real(key) : fallback;
}

long long ConfigMap::integer_or(const std::string& key, long long fallback) const {
  return has(key) ? integer(key) : fallback;
}

ModelKind model_from_config(const ConfigMap& cfg) {
  try {
    return parse_model_kind(cfg.str("model"));
  } catch (const Error& err) {
    if (err.code() == ErrorCode::ConfigError) throw;
    bad("model", err.what());
  }
}

CovariateDistribution distribution_from_config(const ConfigMap& cfg, const std::string& prefix) {
  const std::string kind = cfg.str(prefix);
  const long long d = cfg.integer("dim");
  if (d < 1) bad("dim", "must be >= 1");
  auto sized = [&](const std::string& key) {
    if (!cfg.has(key)) return Vector(Vector::Zero(d));
    Vector v = cfg.vector(key);
    if (v.size() != d) bad(key, "expected " + std::to_string(d) + " entries");
    return v;
  };
  try {
    if (kind == "gaussian") return make_gaussian(sized(prefix + ".mean"), cfg.real_or(prefix + ".scale", 1.0));
    if (kind == "sphere") return make_sphere(sized(prefix + ".shift"));
    if (kind == "ball") return make_ball(static_cast<int>(d), cfg.real(prefix + ".radius"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    bad(prefix, e.what());
  }
  bad(prefix, "unknown distribution '" + kind + "'");
}

ExperimentConfig experiment_from_config(const ConfigMap& cfg) {
  ExperimentConfig e;
  e.model = model_from_config(cfg);
  e.source = distribution_from_config(cfg, "source");
  e.target = distribution_from_config(cfg, "target");
  e.beta_star = cfg.vector("beta_star");
  const std::string truth = cfg.str_or("truth", "well_specified");
  if (truth == "well_specified") {
    e.truth = TruthKind::WellSpecified;
  } else if (truth == "piecewise_ball") {
    e.truth = TruthKind::PiecewiseBall;
    e.beta_star_outer = cfg.vector("beta_star_outer");
  } else {
    bad("truth", "unknown value '" + truth + "'");
  }
  try {
    e.estimator = parse_estimator_kind(cfg.str("estimator"));
  } catch (const Error& err) {
    if (err.code() == ErrorCode::ConfigError) throw;
    bad("estimator", err.what());
  }
  e.n_grid = cfg.integers("n_grid");
  const long long trials = cfg.integer("trials");
  if (trials < 1 || trials > 100'000'000) bad("trials", "must be >= 1");
  e.trials = static_cast<int>(trials);
  e.master_seed = cfg.has("seed") ? cfg.u64("seed") : 0;
  const long long m = cfg.integer_or("mc_eval_m", 20000);
  if (m < 1000) bad("mc_eval_m", "must be >= 1000");
  e.mc_eval_m = static_cast<std::size_t>(m);
  e.noise_sd = cfg.real_or("noise_sd", 1.0);
  if (e.estimator == EstimatorKind::ConstrainedMLE) {
    e.constrained_center = cfg.vector("constrained_center");
    e.constrained_radius = cfg.real("constrained_radius");
  }
  e.fit.max_iterations = static_cast<int>(cfg.integer_or("max_iterations", e.fit.max_iterations));
  e.fit.grad_tol = cfg.real_or("grad_tol", e.fit.grad_tol);
  e.fit.restarts = static_cast<int>(cfg.integer_or("restarts", e.fit.restarts));
  const std::string step = cfg.str_or("step_rule", "newton");
  if (step == "newton") {
    e.fit.step_rule = NewtonDamped{};
  } else if (step == "gradient") {
    e.fit.step_rule = GradientFixed{cfg.real("step_size")};
  } else {
    bad("step_rule", "unknown value '" + step + "'");
  }

  try {
    validate(e);
  } catch (const Error& err) {
    throw Error(ErrorCode::ConfigError, err.what());
  }
  return e;
}

}  // namespace covshift
