#include "shelvesim/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "nlohmann/json.hpp"

namespace shelvesim {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

double parse_double(const std::string& value, const std::string& where) {
  const char* begin = value.c_str();
  char* end = nullptr;
  double x = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw ConfigError(where + ": cannot parse '" + value + "' as a number");
  return x;
}

std::int64_t parse_int(const std::string& value, const std::string& where) {
  const char* begin = value.c_str();
  char* end = nullptr;
  long long x = std::strtoll(begin, &end, 10);
  if (end == begin || *end != '\0')
    throw ConfigError(where + ": cannot parse '" + value + "' as an integer");
  return x;
}

std::uint64_t parse_u64(const std::string& value, const std::string& where) {
  std::int64_t x = parse_int(value, where);
  if (x < 0) throw ConfigError(where + ": value must be >= 0");
  return static_cast<std::uint64_t>(x);
}

std::vector<double> parse_double_list(const std::string& value,
                                      const std::string& where) {
  std::vector<double> out;
  if (trim(value).empty()) return out;  // empty lists round-trip
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::string t = trim(item);
    if (t.empty()) throw ConfigError(where + ": empty list element");
    out.push_back(parse_double(t, where));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& value, const std::string& where) {
  std::vector<int> out;
  for (double x : parse_double_list(value, where)) {
    if (x != std::floor(x))
      throw ConfigError(where + ": list elements must be integers");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

std::string format_double(double x) {
  // Shortest representation that parses back to the same bits.
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", x);
  if (std::strtod(buf, nullptr) != x)
    std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string format_double_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += format_double(xs[i]);
  }
  return out;
}

std::string format_int_list(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(xs[i]);
  }
  return out;
}

struct KeyDef {
  const char* section;
  const char* key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define NUM_KEY(section_, key_, field_)                                     \
  KeyDef {                                                                  \
    section_, key_,                                                         \
        [](RunConfig& c, const std::string& v, const std::string& w) {      \
          c.field_ = parse_double(v, w);                                    \
        },                                                                  \
        [](const RunConfig& c) { return format_double(c.field_); }          \
  }

#define INT_KEY(section_, key_, field_)                                     \
  KeyDef {                                                                  \
    section_, key_,                                                         \
        [](RunConfig& c, const std::string& v, const std::string& w) {      \
          c.field_ = static_cast<int>(parse_int(v, w));                     \
        },                                                                  \
        [](const RunConfig& c) { return std::to_string(c.field_); }         \
  }

#define U64_KEY(section_, key_, field_)                                     \
  KeyDef {                                                                  \
    section_, key_,                                                         \
        [](RunConfig& c, const std::string& v, const std::string& w) {      \
          c.field_ = parse_u64(v, w);                                       \
        },                                                                  \
        [](const RunConfig& c) { return std::to_string(c.field_); }         \
  }

const std::vector<KeyDef>& schema() {
  static const std::vector<KeyDef> defs = {
      NUM_KEY("constants", "zeta", constants.zeta),
      NUM_KEY("constants", "tau_d", constants.tau_d),
      NUM_KEY("constants", "a_m1", constants.a_m1),
      NUM_KEY("constants", "tau_deshelve", constants.tau_deshelve),
      NUM_KEY("constants", "gamma_411", constants.gamma_411),
      NUM_KEY("constants", "omega_qubit", constants.omega_qubit),
      NUM_KEY("lasers", "pump_rate_411", lasers.pump_rate_411),
      NUM_KEY("lasers", "repump_rate_935", lasers.repump_rate_935),
      NUM_KEY("lasers", "repump_rate_861", lasers.repump_rate_861),
      NUM_KEY("lasers", "deshelve_rate_760", lasers.deshelve_rate_760),
      NUM_KEY("counts", "bright_rate", counts.bright_rate),
      NUM_KEY("counts", "dark_rate", counts.dark_rate),
      NUM_KEY("counts", "detect_window", counts.detect_window),
      NUM_KEY("counts", "bin_width", counts.bin_width),
      NUM_KEY("counts", "efficiency", counts.efficiency),
      NUM_KEY("protocol", "eps_prep0", protocol.eps_prep0),
      NUM_KEY("protocol", "eps_pi", protocol.eps_pi),
      NUM_KEY("protocol", "shelve_time", protocol.shelve_time),
      NUM_KEY("protocol", "detect_time", protocol.detect_time),
      NUM_KEY("protocol", "deshelve_time", protocol.deshelve_time),
      NUM_KEY("protocol", "p_storage", protocol.p_storage),
      INT_KEY("protocol", "block_size", protocol.block_size),
      KeyDef{"protocol", "repump_scheme",
             [](RunConfig& c, const std::string& v, const std::string& w) {
               if (v == "935")
                 c.protocol.repump_scheme = RepumpScheme::nm935;
               else if (v == "861")
                 c.protocol.repump_scheme = RepumpScheme::nm861;
               else
                 throw ConfigError(w + ": repump_scheme must be 935 or 861");
             },
             [](const RunConfig& c) {
               return std::string(to_string(c.protocol.repump_scheme));
             }},
      NUM_KEY("thresholds", "detect_error_bound", thresholds.detect_error_bound),
      NUM_KEY("thresholds", "doppler_error_bound", thresholds.doppler_error_bound),
      INT_KEY("thresholds", "detect_cutoff", thresholds.detect_cutoff),
      INT_KEY("thresholds", "doppler_cutoff", thresholds.doppler_cutoff),
      KeyDef{"scan", "times",
             [](RunConfig& c, const std::string& v, const std::string& w) {
               c.scan.times = parse_double_list(v, w);
             },
             [](const RunConfig& c) { return format_double_list(c.scan.times); }},
      U64_KEY("scan", "shots_per_point", scan.shots_per_point),
      KeyDef{"rb", "lengths",
             [](RunConfig& c, const std::string& v, const std::string& w) {
               c.rb.lengths = parse_int_list(v, w);
             },
             [](const RunConfig& c) { return format_int_list(c.rb.lengths); }},
      INT_KEY("rb", "sequences_per_length", rb.sequences_per_length),
      INT_KEY("rb", "shots_per_sequence", rb.shots_per_sequence),
      NUM_KEY("rb", "eps_per_gate", rb.eps_per_gate),
      U64_KEY("two_ion", "detection_bins", two_ion.detection_bins),
      INT_KEY("two_ion", "detect_bins_per_trial", two_ion.detect_bins_per_trial),
      NUM_KEY("two_ion", "storage_rate_per_trial", two_ion.storage_rate_per_trial),
      U64_KEY("run", "seed", run.seed),
      U64_KEY("run", "shots_per_state", run.shots_per_state),
      U64_KEY("run", "calibration_shots", run.calibration_shots),
      KeyDef{"run", "out_dir",
             [](RunConfig& c, const std::string& v, const std::string&) {
               c.run.out_dir = v;
             },
             [](const RunConfig& c) { return c.run.out_dir; }},
      INT_KEY("run", "threads", run.threads),
  };
  return defs;
}

#undef NUM_KEY
#undef INT_KEY
#undef U64_KEY

const KeyDef* find_key(const std::string& section, const std::string& key) {
  for (const KeyDef& def : schema())
    if (section == def.section && key == def.key) return &def;
  return nullptr;
}

struct RawEntry {
  std::string section, key, value;
  int line;
};

std::vector<RawEntry> parse_raw(std::string_view text, std::string_view source) {
  std::vector<RawEntry> entries;
  std::string section;
  int line_no = 0;
  std::stringstream ss{std::string(text)};
  std::string line;
  while (std::getline(ss, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    std::string where =
        std::string(source) + ":" + std::to_string(line_no);
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(where + ": malformed section header '" + t + "'");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected key = value, got '" + t + "'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (section.empty())
      throw ConfigError(where + ": key '" + key + "' outside any section");
    if (!find_key(section, key))
      throw ConfigError(where + ": unknown key '" + section + "." + key + "'");
    for (const RawEntry& prev : entries)
      if (prev.section == section && prev.key == key)
        throw ConfigError(where + ": duplicate key '" + section + "." + key +
                          "' (first on line " + std::to_string(prev.line) + ")");
    entries.push_back({section, key, value, line_no});
  }
  return entries;
}

}  // namespace

RunConfig parse_config_text(std::string_view text, std::string_view source_name) {
  std::vector<RawEntry> entries = parse_raw(text, source_name);
  RunConfig config;

  // Constants first so laser defaults can follow them; explicit laser keys
  // then win over the derived defaults.
  for (const RawEntry& e : entries) {
    if (e.section != "constants") continue;
    std::string where =
        std::string(source_name) + ":" + std::to_string(e.line);
    find_key(e.section, e.key)->set(config, e.value, where);
  }
  try {
    config.lasers = default_lasers(config.constants);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(std::string(source_name) + ": " + ex.what());
  }
  for (const RawEntry& e : entries) {
    if (e.section == "constants") continue;
    std::string where =
        std::string(source_name) + ":" + std::to_string(e.line);
    find_key(e.section, e.key)->set(config, e.value, where);
  }
  validate_config(config);
  return config;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

void apply_env_overrides(RunConfig& config,
                         const std::function<const char*(const char*)>& get_env) {
  auto lookup = get_env ? get_env : [](const char* name) -> const char* {
    return std::getenv(name);
  };
  for (const KeyDef& def : schema()) {
    std::string name = "SHELVESIM_";
    for (const char* p = def.section; *p; ++p)
      name += static_cast<char>(std::toupper(static_cast<unsigned char>(*p)));
    name += '_';
    for (const char* p = def.key; *p; ++p)
      name += static_cast<char>(std::toupper(static_cast<unsigned char>(*p)));
    if (const char* value = lookup(name.c_str()))
      def.set(config, value, "environment " + name);
  }
  validate_config(config);
}

std::string emit_config_text(const RunConfig& config) {
  std::string out;
  std::string current;
  for (const KeyDef& def : schema()) {
    if (current != def.section) {
      if (!out.empty()) out += '\n';
      current = def.section;
      out += '[';
      out += current;
      out += "]\n";
    }
    out += def.key;
    out += " = ";
    out += def.get(config);
    out += '\n';
  }
  return out;
}

void validate_config(const RunConfig& config) {
  auto rethrow = [](const char* what, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(std::string(what) + ": " + ex.what());
    }
  };
  rethrow("constants", [&] { validate(config.constants); });
  rethrow("lasers", [&] { validate(config.lasers); });
  rethrow("counts", [&] { validate(config.counts); });
  rethrow("protocol", [&] { validate(config.protocol); });

  auto bound = [](double x, const char* name) {
    if (!(x > 0.0 && x < 1.0))
      throw ConfigError(std::string("thresholds: ") + name +
                        " must lie in (0, 1)");
  };
  bound(config.thresholds.detect_error_bound, "detect_error_bound");
  bound(config.thresholds.doppler_error_bound, "doppler_error_bound");
  if (config.thresholds.detect_cutoff < -1 || config.thresholds.doppler_cutoff < -1)
    throw ConfigError("thresholds: cutoffs must be -1 (derive) or >= 0");
  if (config.thresholds.doppler_cutoff == 0)
    throw ConfigError("thresholds: a pinned doppler_cutoff must be >= 1");

  for (double t : config.scan.times)
    if (!(t >= 0.0)) throw ConfigError("scan: times must be >= 0");
  if (config.scan.shots_per_point == 0)
    throw ConfigError("scan: shots_per_point must be >= 1");

  for (int len : config.rb.lengths)
    if (len < 1) throw ConfigError("rb: lengths must be >= 1");
  if (config.rb.sequences_per_length < 1 || config.rb.shots_per_sequence < 1)
    throw ConfigError("rb: sequence and shot counts must be >= 1");
  if (!(config.rb.eps_per_gate >= 0.0 && config.rb.eps_per_gate < 0.5))
    throw ConfigError("rb: eps_per_gate must lie in [0, 0.5)");

  if (config.two_ion.detection_bins == 0)
    throw ConfigError("two_ion: detection_bins must be >= 1");
  if (config.two_ion.detect_bins_per_trial < 1)
    throw ConfigError("two_ion: detect_bins_per_trial must be >= 1");
  if (!(config.two_ion.storage_rate_per_trial >= 0.0 &&
        config.two_ion.storage_rate_per_trial < 1.0))
    throw ConfigError("two_ion: storage_rate_per_trial must lie in [0, 1)");

  if (config.run.shots_per_state == 0)
    throw ConfigError("run: shots_per_state must be >= 1");
  if (config.run.threads < 1) throw ConfigError("run: threads must be >= 1");
  if (config.run.out_dir.empty()) throw ConfigError("run: out_dir is empty");
}

std::string manifest_json_text(const RunConfig& config, std::string_view subcommand,
                               std::span<const ArtifactEntry> artifacts) {
  nlohmann::ordered_json root;
  root["tool"] = "shelvesim";
  root["version"] = "1.0.0";
  root["subcommand"] = std::string(subcommand);
  root["seed"] = config.run.seed;
  root["rng_scheme"] =
      "per-shot mt19937_64 seeded with splitmix64(seed + shot_index)";
  // Worker count and output location are plumbing, not replay identity;
  // canonicalize them so reruns with different --threads or --out produce
  // byte-identical manifests.
  RunConfig canonical = config;
  canonical.run.threads = 1;
  canonical.run.out_dir = "out";
  std::string config_text = emit_config_text(canonical);
  root["config_hash"] = fnv1a64(config_text);
  root["config_text"] = config_text;
  nlohmann::ordered_json arts = nlohmann::ordered_json::array();
  for (const ArtifactEntry& a : artifacts)
    arts.push_back({{"name", a.name}, {"bytes", a.bytes}, {"fnv1a64", a.hash}});
  root["artifacts"] = std::move(arts);
  return root.dump(2) + "\n";
}

}  // namespace shelvesim
