// INI parsing, canonical emission, environment overrides, and manifests.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <map>
#include <string>

#include "doctest.h"
#include "nlohmann/json.hpp"
#include "shelvesim/config.hpp"

using namespace shelvesim;

namespace {

std::function<const char*(const char*)> fake_env(
    const std::map<std::string, std::string>& vars) {
  return [vars](const char* name) -> const char* {
    auto it = vars.find(name);
    return it == vars.end() ? nullptr : it->second.c_str();
  };
}

}  // namespace

TEST_CASE("default configuration is valid and round-trips") {
  RunConfig config;
  CHECK_NOTHROW(validate_config(config));
  std::string text = emit_config_text(config);
  RunConfig parsed = parse_config_text(text, "round-trip");
  CHECK(emit_config_text(parsed) == text);
}

TEST_CASE("parsing reads sections, comments, and lists") {
  const char* text =
      "# leading comment\n"
      "[constants]\n"
      "zeta = 0.8\n"
      "; alternate comment style\n"
      "[protocol]\n"
      "shelve_time = 0.175\n"
      "repump_scheme = 861\n"
      "[scan]\n"
      "times = 0.05, 0.1, 0.2\n"
      "shots_per_point = 1234\n"
      "[run]\n"
      "seed = 99\n";
  RunConfig config = parse_config_text(text, "inline");
  CHECK(config.constants.zeta == doctest::Approx(0.8));
  CHECK(config.protocol.shelve_time == doctest::Approx(0.175));
  CHECK(config.protocol.repump_scheme == RepumpScheme::nm861);
  REQUIRE(config.scan.times.size() == 3);
  CHECK(config.scan.times[1] == doctest::Approx(0.1));
  CHECK(config.scan.shots_per_point == 1234);
  CHECK(config.run.seed == 99);
}

TEST_CASE("laser rates follow parsed constants unless explicitly set") {
  // Halving tau_d doubles the default 411 pump, which is defined relative
  // to the D5/2 lifetime.
  RunConfig config = parse_config_text("[constants]\ntau_d = 3.6e-3\n", "inline");
  CHECK(config.lasers.pump_rate_411 == doctest::Approx(50.0 / 3.6e-3));
  RunConfig pinned = parse_config_text(
      "[constants]\ntau_d = 3.6e-3\n[lasers]\npump_rate_411 = 777\n", "inline");
  CHECK(pinned.lasers.pump_rate_411 == doctest::Approx(777.0));
}

TEST_CASE("unknown keys and duplicates are rejected with context") {
  CHECK_THROWS_AS(parse_config_text("[constants]\nbogus = 1\n", "f"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[nonsense]\nzeta = 1\n", "f"), ConfigError);
  CHECK_THROWS_AS(
      parse_config_text("[run]\nseed = 1\nseed = 2\n", "f"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[run]\nseed = banana\n", "f"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("zeta = 1\n", "f"), ConfigError);  // no section
  try {
    parse_config_text("[constants]\nbogus = 1\n", "myfile.ini");
    FAIL("expected ConfigError");
  } catch (const ConfigError& ex) {
    std::string msg = ex.what();
    CHECK(msg.find("myfile.ini") != std::string::npos);
    CHECK(msg.find("bogus") != std::string::npos);
  }
}

TEST_CASE("semantic validation catches cross-field problems") {
  RunConfig config;
  config.constants.zeta = 1.5;
  CHECK_THROWS_AS(validate_config(config), ConfigError);
  config = RunConfig{};
  config.thresholds.doppler_cutoff = 0;  // a pinned Doppler cutoff must be >= 1
  CHECK_THROWS_AS(validate_config(config), ConfigError);
  config = RunConfig{};
  config.run.threads = 0;
  CHECK_THROWS_AS(validate_config(config), ConfigError);
  config = RunConfig{};
  config.scan.times = {-0.1};
  CHECK_THROWS_AS(validate_config(config), ConfigError);
  config = RunConfig{};
  config.rb.eps_per_gate = 0.7;
  CHECK_THROWS_AS(validate_config(config), ConfigError);
}

TEST_CASE("environment variables override file values") {
  RunConfig config;
  apply_env_overrides(config, fake_env({{"SHELVESIM_RUN_SEED", "4321"},
                                        {"SHELVESIM_PROTOCOL_SHELVE_TIME", "0.3"},
                                        {"SHELVESIM_SCAN_TIMES", "0.1,0.2"}}));
  CHECK(config.run.seed == 4321);
  CHECK(config.protocol.shelve_time == doctest::Approx(0.3));
  REQUIRE(config.scan.times.size() == 2);
  RunConfig bad;
  CHECK_THROWS_AS(
      apply_env_overrides(bad, fake_env({{"SHELVESIM_RUN_SEED", "pear"}})),
      ConfigError);
}

TEST_CASE("fnv1a64 matches published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("manifest embeds the canonical config and artifact digests") {
  RunConfig config;
  config.run.threads = 4;          // canonicalized away in the manifest
  config.run.out_dir = "elsewhere";
  config.run.seed = 5150;
  std::vector<ArtifactEntry> artifacts = {
      {"records.csv", 10, fnv1a64("0123456789")},
  };
  nlohmann::json doc =
      nlohmann::json::parse(manifest_json_text(config, "spam", artifacts));
  CHECK(doc["subcommand"] == "spam");
  CHECK(doc["seed"] == 5150);
  std::string embedded = doc["config_text"].get<std::string>();
  CHECK(doc["config_hash"].get<std::uint64_t>() == fnv1a64(embedded));
  // Worker count and output path are presentation details, not physics.
  CHECK(embedded.find("threads = 1") != std::string::npos);
  CHECK(embedded.find("out_dir = out") != std::string::npos);
  CHECK(embedded.find("elsewhere") == std::string::npos);
  REQUIRE(doc["artifacts"].size() == 1);
  CHECK(doc["artifacts"][0]["name"] == "records.csv");
  CHECK(doc["artifacts"][0]["bytes"] == 10);
  CHECK(doc["artifacts"][0]["fnv1a64"] == fnv1a64("0123456789"));
}

TEST_CASE("manifests are invariant under thread and out_dir changes") {
  RunConfig a, b;
  a.run.threads = 1;
  a.run.out_dir = "x";
  b.run.threads = 8;
  b.run.out_dir = "y";
  CHECK(manifest_json_text(a, "scan", {}) == manifest_json_text(b, "scan", {}));
}

TEST_CASE("emitted text prints doubles at full round-trip precision") {
  RunConfig config;
  config.constants.zeta = 0.824;
  std::string text = emit_config_text(config);
  CHECK(text.find("zeta = 0.824\n") != std::string::npos);
  config.constants.zeta = 0.1 + 0.2;  // forces the 17-digit fallback
  RunConfig back = parse_config_text(emit_config_text(config), "precision");
  CHECK(back.constants.zeta == config.constants.zeta);
}
