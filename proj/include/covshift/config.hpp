#pragma once

// Flat key=value configuration files. Lists are comma separated, '#' starts
// a comment.

#include "covshift/harness.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace covshift {

class ConfigMap {
 public:
  static ConfigMap parse(std::istream& in);
  static ConfigMap load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  // All getters throw ConfigError naming the key when it is missing or malformed.
  const std::string& str(const std::string& key) const;
  double real(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::vector<long long> integers(const std::string& key) const;
  Vector vector(const std::string& key) const;

  std::string str_or(const std::string& key, const std::string& fallback) const;
  double real_or(const std::string& key, double fallback) const;
  long long integer_or(const std::string& key, long long fallback) const;

 private:
  std::map<std::string, std::string> values_;
};

/// Key "model".
ModelKind model_from_config(const ConfigMap& cfg);

/// prefix = "source" or "target". Keys: <prefix> = gaussian|sphere|ball,
/// <prefix>.mean, <prefix>.scale, <prefix>.shift, <prefix>.radius; dim.
CovariateDistribution distribution_from_config(const ConfigMap& cfg, const std::string& prefix);

/// Builds and validates an ExperimentConfig. Config-level problems raise
/// ConfigError.
ExperimentConfig experiment_from_config(const ConfigMap& cfg);

}  // namespace covshift
