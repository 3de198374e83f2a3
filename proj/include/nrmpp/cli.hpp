#pragma once

#include <map>
#include <string>
#include <vector>

#include "nrmpp/mcmc.hpp"
#include "nrmpp/mixture.hpp"

namespace nrmpp {

/// Flat key=value configuration with explicit defaults for every key.
class Config {
 public:
  static Config defaults();

  /// Reads `key = value` lines; `#` starts a comment. Unknown keys are errors.
  void load_file(const std::string& path);
  void load_string(const std::string& text, const std::string& origin = "<string>");
  void set(const std::string& key, const std::string& value);
  /// Overrides any key from NRMPP_<KEY> with dots mapped to underscores, upper-cased.
  void apply_env();

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long get_long(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_vector(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }
  std::string dump() const;

  static std::string env_name(const std::string& key);

 private:
  std::map<std::string, std::string> values_;
};

/// CSV, one observation per row, numeric columns.
Dataset load_dataset(const std::string& path);
Dataset parse_dataset(const std::string& text);

/// Built-in generators: "t3mix" (two Student-t(3) components at -5 and +5,
/// first half left) and "gaussmix2" (two unit-variance Gaussians at -3 and +3).
Dataset make_synthetic(const std::string& generator, long n, std::uint64_t seed);

ProcessModel build_process(const Config& cfg);
Model build_model(const Config& cfg);
ChainConfig build_chain(const Config& cfg);
Dataset build_dataset(const Config& cfg);

struct PriorCurvePoint {
  std::string setting;
  double x;
  int k;
  double value;
};

/// Joint K_n/Y* density curves; NaN where the DPP Palm kernel is not a valid
/// DPP kernel. Curves for settings I (-x, x), II (-0.3, -0.3 + 2x)
/// and III (-x, 0, x) under the Poisson and DPP priors of the prior.* keys.
std::vector<PriorCurvePoint> prior_analysis(const Config& cfg);

/// Reads a trace written by the fit command (records and, if present, atoms).
Trace read_trace_ndjson(const std::string& path);

/// Subcommand dispatcher; returns the process exit status.
int run(const std::string& command, const Config& cfg, int chains, const std::string& trace_path = "");

std::string version_string();

}  // namespace nrmpp
