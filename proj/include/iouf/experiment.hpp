#pragma once

#include "iouf/correlation_model.hpp"
#include "iouf/io.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace iouf {

struct ConfigKey {
  std::string key;
  std::string default_value;
  std::string doc;
};

// Every accepted key with its default.  Anything else in a config file is an error.
const std::vector<ConfigKey>& config_schema();

const std::vector<std::string>& experiment_commands();

// Resolved configuration: schema defaults overlaid with the user's entries.
class ExperimentConfig {
 public:
  // Throws ConfigError on unknown keys or an unknown command.
  static ExperimentConfig resolve(const FlatConfig& user);

  const std::string& command() const { return cmd_; }
  void set(const std::string& key, const std::string& value);
  std::string str(const std::string& key) const;
  double num(const std::string& key) const;
  long long integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> list(const std::string& key) const;

  CorrelationModel model() const;
  // "key = value" pairs in schema order, echoed into every output header.
  std::vector<std::pair<std::string, std::string>> echo() const;

 private:
  std::string cmd_;
  FlatConfig values_;
};

// Runs the configured command into `out`.  Returns the process exit status;
// ModelError / NumericalError / ConfigError propagate to the caller.
int run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out);

// Exit codes of the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitModel = 2;
inline constexpr int kExitNumerical = 3;

}  // namespace iouf
