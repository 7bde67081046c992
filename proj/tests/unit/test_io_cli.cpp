#include "iouf/errors.hpp"
#include "iouf/experiment.hpp"
#include "iouf/io.hpp"

#include <doctest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace iouf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("iouf_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("io_cli") {
  TEST_CASE("flat config parsing") {
    const auto c = FlatConfig::parse("# comment\nseed = 7\n[model]\nc = 0.25  # trailing\nd=2\n");
    CHECK(c.get("seed") == "7");
    CHECK(c.get("model.c") == "0.25");
    CHECK(c.get("model.d") == "2");
    CHECK(c.entries().size() == 3);
    CHECK_THROWS_AS(FlatConfig::parse("a = 1\na = 2\n"), ConfigError);
  }

  TEST_CASE("schema resolution") {
    FlatConfig user;
    user.set("command", "spectrum");
    user.set("model.c", "0.75");
    const auto cfg = ExperimentConfig::resolve(user);
    CHECK(cfg.command() == "spectrum");
    CHECK(cfg.num("model.c") == 0.75);
    CHECK(cfg.list("pullback.T_list") == std::vector<double>{5, 10, 20});
    CHECK(cfg.model().drift() == 0.75);
    FlatConfig bad;
    bad.set("model.cc", "1");
    CHECK_THROWS_AS(ExperimentConfig::resolve(bad), ConfigError);
    FlatConfig badcmd;
    badcmd.set("command", "nope");
    CHECK_THROWS_AS(ExperimentConfig::resolve(badcmd), ConfigError);
  }

  TEST_CASE("csv escaping and rendering") {
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CsvTable t({"x", "y"});
    t.add_row(std::vector<double>{1.5, -2.0});
    const auto s = t.render({{"seed", "1"}});
    CHECK(s == "# seed = 1\r\nx,y\r\n1.5,-2\r\n");
  }

  TEST_CASE("sha256 and number formatting") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) {
      const auto s = format_double(v);
      double back = 0;
      std::from_chars(s.data(), s.data() + s.size(), back);
      CHECK(back == v);
    }
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  }

  TEST_CASE("validate-model writes a manifest and is byte reproducible") {
    FlatConfig user;
    user.set("command", "validate-model");
    const auto cfg = ExperimentConfig::resolve(user);
    const auto a = scratch("a"), b = scratch("b");
    CHECK(run_experiment(cfg, a) == kExitOk);
    CHECK(run_experiment(cfg, b) == kExitOk);
    for (const auto& e : fs::directory_iterator(a))
      CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
    const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
    CHECK(manifest["files"].size() >= 2);
    for (const auto& f : manifest["files"])
      CHECK(sha256_hex(slurp(a / f["name"].get<std::string>())) == f["sha256"]);
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("invalid model maps to a model error") {
    FlatConfig user;
    user.set("model.ell", "-1");
    const auto cfg = ExperimentConfig::resolve(user);
    CHECK_THROWS_AS(cfg.model(), ModelError);
  }
}
