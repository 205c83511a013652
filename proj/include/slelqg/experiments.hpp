#pragma once

// Registry of named experiments and the reproducible runner behind the CLI.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace slelqg {

enum class ParamType { Real, Integer, Complex, RealList, Text };

struct ParamSpec {
  std::string key;
  ParamType type = ParamType::Real;
  std::string default_value;
  std::string help;
};

struct ExperimentInfo {
  std::string name;
  std::string module;
  /// The identity or property the experiment checks.
  std::string verifies;
  std::vector<ParamSpec> params;
};

const std::vector<ExperimentInfo>& experiment_registry();
const ExperimentInfo* find_experiment(const std::string& name);

/// Registry as JSON: [{name, module, verifies, params: [{key, type, default}]}].
nlohmann::json registry_json();

/// Parsers for config values: reals accept "p/q" and "sqrt(x)", complex
/// numbers "a+bi" / "bi", lists "[v1, v2, ...]". Throw ConfigError.
double parse_real(const std::string& text);
std::complex<double> parse_complex(const std::string& text);
std::vector<double> parse_real_list(const std::string& text);

/// Flat key/value configuration. Keys outside the selected experiments'
/// schemas (and the global keys experiment, master_seed, workers,
/// output_dir) are rejected by validate().
class ExperimentConfig {
 public:
  ExperimentConfig() = default;

  /// Parses INI text with optional [sections]; section names are ignored and
  /// later keys override earlier ones. Throws ConfigError.
  static ExperimentConfig from_ini(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::vector<std::string> experiments() const;
  std::uint64_t master_seed() const;
  unsigned workers() const;

  /// Checks experiment names and every value against the registry schema.
  void validate() const;

  /// Lookup with the experiment's registered default.
  std::string raw(const ExperimentInfo& info, const std::string& key) const;
  double real(const ExperimentInfo& info, const std::string& key) const;
  std::int64_t integer(const ExperimentInfo& info, const std::string& key) const;
  std::complex<double> complex(const ExperimentInfo& info, const std::string& key) const;
  std::vector<double> real_list(const ExperimentInfo& info, const std::string& key) const;

  /// "key=value" lines in key order; the input to the config hash.
  std::string canonical() const;

 private:
  std::map<std::string, std::string> values_;
};

struct Assertion {
  std::string name;
  bool passed = false;
  double value = 0.0;
  std::string threshold;
  /// Exploratory checks are reported but do not fail the run.
  bool gating = true;
};

struct ExperimentReport {
  std::string name;
  nlohmann::json result;
  std::vector<Assertion> assertions;
  std::string csv;
  bool passed() const;
};

ExperimentReport run_experiment(const std::string& name, const ExperimentConfig& config);

inline constexpr int kExitOk = 0;
inline constexpr int kExitAssertion = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;

inline constexpr const char* kToolVersion = "1.0.0";

/// Validates, runs every configured experiment and writes report.json,
/// <experiment>.csv, summary.csv and manifest.json into output_dir.
/// Returns one of the exit codes above.
int run_and_report(const ExperimentConfig& config, const std::filesystem::path& output_dir,
                   std::string* error_message = nullptr);

}  // namespace slelqg
