#include "iouf/errors.hpp"
#include "iouf/experiment.hpp"
#include "iouf/io.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

int main(int argc, char** argv) {
  using namespace iouf;
  CLI::App app{"ioufsim: isotropic Ornstein-Uhlenbeck flow experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::optional<long long> seed, replicas;
  std::vector<std::string> sets;

  for (const auto& name : experiment_commands()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "flat key = value config file");
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--replicas", replicas, "overrides numerics.replicas");
    sub->add_option("--set", sets, "extra key=value override (repeatable)");
  }
  auto* defaults = app.add_subcommand("print-config", "print every config key with its default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  if (defaults->parsed()) {
    for (const auto& k : config_schema()) std::cout << k.key << " = " << k.default_value << "  # " << k.doc << "\n";
    return kExitOk;
  }

  try {
    FlatConfig user = config_path.empty() ? FlatConfig{} : FlatConfig::load(config_path);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      user.set(s.substr(0, eq), s.substr(eq + 1));
    }
    ExperimentConfig cfg = ExperimentConfig::resolve(user);
    cfg.set("command", app.get_subcommands().front()->get_name());
    if (seed) cfg.set("seed", std::to_string(*seed));
    if (replicas) cfg.set("numerics.replicas", std::to_string(*replicas));
    const int rc = run_experiment(cfg, out_dir);
    std::cerr << cfg.command() << ": " << (rc == 0 ? "ok" : "model validation failed") << ", outputs in "
              << out_dir << "\n";
    return rc;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kExitModel;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}
