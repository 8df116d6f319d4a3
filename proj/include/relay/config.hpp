#pragma once

// Run configuration in a flat TOML-style format:
//
//   [relay]      a, f, h, N, m, Np, beta, paths = [[r1, l1], [r2, l2], ...]
//   [filter]     tau, dc_gain (optional, default 1)
//   [ofdm]       num_blocks, block_len, guard_len, seed
//   [synthesis]  rel_tol, epsilon          (optional)
//   [output]     dir                       (optional)
//
// '#' starts a comment. Strings are double-quoted. Numbers are parsed
// independently of the C locale.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "relay/plant.hpp"
#include "relay/text.hpp"

namespace relay {

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct OfdmConfig {
  int num_blocks = 1;
  int block_len = 64;
  int guard_len = 16;
  std::uint64_t seed = 0;

  Eigen::Index symbols() const { return static_cast<Eigen::Index>(num_blocks) * (block_len + guard_len); }
};

struct SynthesisConfig {
  double rel_tol = 1e-4;
  double epsilon = 1e-4;
};

struct RunConfig {
  RelayParams relay;
  double filter_tau = 1.0;
  double filter_dc_gain = 1.0;
  OfdmConfig ofdm;
  SynthesisConfig synthesis;
  std::string output_dir = ".";
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

inline bool parse_int(std::string_view s, long long& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

struct RawValue {
  std::string text;
  int line;
};

class ConfigReader {
 public:
  ConfigReader(std::string origin, std::map<std::string, RawValue> values)
      : origin_(std::move(origin)), values_(std::move(values)) {}

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const auto it = values_.find(key);
    const std::string where = it == values_.end() ? origin_ : origin_ + ":" + std::to_string(it->second.line);
    throw ConfigError(where + ": " + key + ": " + what);
  }

  double real(const std::string& key) const {
    double v;
    if (!parse_double(values_.at(key).text, v)) fail(key, "expected a number, got '" + values_.at(key).text + "'");
    return v;
  }

  long long integer(const std::string& key) const {
    long long v;
    if (!parse_int(values_.at(key).text, v)) fail(key, "expected an integer, got '" + values_.at(key).text + "'");
    return v;
  }

  int small_int(const std::string& key) const {
    const long long v = integer(key);
    if (v < -1000000000LL || v > 1000000000LL) fail(key, "integer out of range");
    return static_cast<int>(v);
  }

  std::string string(const std::string& key) const {
    const std::string& t = values_.at(key).text;
    if (t.size() < 2 || t.front() != '"' || t.back() != '"') fail(key, "expected a double-quoted string");
    return t.substr(1, t.size() - 2);
  }

  std::vector<Path> paths(const std::string& key) const {
    std::string_view t = trim(values_.at(key).text);
    auto bad = [&]() { fail(key, "expected [[gain, delay], ...]"); };
    if (t.size() < 2 || t.front() != '[' || t.back() != ']') bad();
    t = trim(t.substr(1, t.size() - 2));
    std::vector<Path> out;
    while (!t.empty()) {
      if (t.front() != '[') bad();
      const auto close = t.find(']');
      if (close == std::string_view::npos) bad();
      const std::string_view inner = t.substr(1, close - 1);
      const auto comma = inner.find(',');
      if (comma == std::string_view::npos) bad();
      double gain;
      long long delay;
      if (!parse_double(inner.substr(0, comma), gain)) fail(key, "path gain is not a number");
      if (!parse_int(inner.substr(comma + 1), delay)) fail(key, "path delay must be an integer number of samples");
      if (delay < -1000000000LL || delay > 1000000000LL) fail(key, "path delay out of range");
      out.push_back({gain, static_cast<int>(delay)});
      t = trim(t.substr(close + 1));
      if (!t.empty()) {
        if (t.front() != ',') bad();
        t = trim(t.substr(1));
        if (t.empty()) bad();
      }
    }
    return out;
  }

 private:
  std::string origin_;
  std::map<std::string, RawValue> values_;
};

inline const std::set<std::string>& required_keys() {
  static const std::set<std::string> keys = {
      "relay.a",        "relay.f",          "relay.h",          "relay.N",
      "relay.m",        "relay.Np",         "relay.beta",       "relay.paths",
      "filter.tau",     "ofdm.num_blocks",  "ofdm.block_len",   "ofdm.guard_len",
      "ofdm.seed"};
  return keys;
}

inline const std::set<std::string>& optional_keys() {
  static const std::set<std::string> keys = {"filter.dc_gain", "synthesis.rel_tol", "synthesis.epsilon", "output.dir"};
  return keys;
}

}  // namespace detail

/// Parses and validates configuration text. `origin` prefixes error locations.
inline RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>") {
  std::map<std::string, detail::RawValue> values;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    // strip comments outside strings
    bool quoted = false;
    std::size_t cut = raw.size();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] == '"') quoted = !quoted;
      if (raw[i] == '#' && !quoted) {
        cut = i;
        break;
      }
    }
    const std::string_view line = detail::trim(std::string_view(raw).substr(0, cut));
    if (line.empty()) continue;
    if (line.front() == '[' && line.size() > 1 && line[1] != '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      static const std::set<std::string> sections = {"relay", "filter", "ofdm", "synthesis", "output"};
      if (!sections.count(section)) throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (section.empty()) throw ConfigError(where + ": key '" + key + "' appears before any section");
    const std::string full = section + "." + key;
    if (!detail::required_keys().count(full) && !detail::optional_keys().count(full))
      throw ConfigError(where + ": unknown key '" + full + "'");
    if (value.empty()) throw ConfigError(where + ": " + full + ": missing value");
    if (values.count(full)) throw ConfigError(where + ": duplicate key '" + full + "'");
    values[full] = {value, line_no};
  }

  std::string missing;
  for (const auto& k : detail::required_keys())
    if (!values.count(k)) missing += (missing.empty() ? "" : ", ") + k;
  if (!missing.empty()) throw ConfigError(origin + ": missing required keys: " + missing);

  const detail::ConfigReader r(origin, std::move(values));
  RunConfig c;
  RelayParams& p = c.relay;
  p.amplifier_gain = r.real("relay.a");
  p.carrier = r.real("relay.f");
  p.sample_period = r.real("relay.h");
  p.ratio = r.small_int("relay.N");
  p.processing_delay = r.small_int("relay.m");
  p.pulse_support = r.small_int("relay.Np");
  p.rolloff = r.real("relay.beta");
  p.paths = r.paths("relay.paths");
  c.filter_tau = r.real("filter.tau");
  if (r.has("filter.dc_gain")) c.filter_dc_gain = r.real("filter.dc_gain");

  if (p.amplifier_gain < 0.0) r.fail("relay.a", "amplifier gain must be nonnegative");
  if (!(p.sample_period > 0.0)) r.fail("relay.h", "sample period must be positive");
  if (p.ratio < 1) r.fail("relay.N", "upsampling ratio must be at least 1");
  if (p.processing_delay < 0) r.fail("relay.m", "processing delay must be nonnegative");
  if (p.pulse_support <= 0 || p.pulse_support % 2 != 0) r.fail("relay.Np", "pulse support must be a positive even integer");
  if (p.pulse_support < 2 * p.ratio) r.fail("relay.Np", "pulse support must span at least two symbols (Np >= 2N)");
  if (!(p.pulse_support / 2 < p.processing_delay * p.ratio))
    r.fail("relay.m", "causality rule violated: need Np/2 < m*N (Np = " + std::to_string(p.pulse_support) +
                          ", m = " + std::to_string(p.processing_delay) + ", N = " + std::to_string(p.ratio) + ")");
  if (!(p.rolloff > 0.0 && p.rolloff <= 1.0)) r.fail("relay.beta", "roll-off must lie in (0, 1]");
  for (const auto& path : p.paths) {
    if (!(path.gain > 0.0)) r.fail("relay.paths", "path gains must be positive");
    if (path.delay <= 0) r.fail("relay.paths", "path delays must be positive");
  }
  if (!(c.filter_tau > 0.0)) r.fail("filter.tau", "time constant must be positive");
  p.filter = RelayParams::first_order_filter(c.filter_tau, c.filter_dc_gain);

  auto& o = c.ofdm;
  o.num_blocks = r.small_int("ofdm.num_blocks");
  o.block_len = r.small_int("ofdm.block_len");
  o.guard_len = r.small_int("ofdm.guard_len");
  const long long seed = r.integer("ofdm.seed");
  if (o.num_blocks < 1) r.fail("ofdm.num_blocks", "need at least one block");
  if (o.block_len < 1 || (o.block_len & (o.block_len - 1)) != 0) r.fail("ofdm.block_len", "must be a power of two");
  if (o.guard_len < 0 || o.guard_len >= o.block_len) r.fail("ofdm.guard_len", "must lie in [0, block_len)");
  if (seed < 0) r.fail("ofdm.seed", "must be nonnegative");
  o.seed = static_cast<std::uint64_t>(seed);

  if (r.has("synthesis.rel_tol")) c.synthesis.rel_tol = r.real("synthesis.rel_tol");
  if (r.has("synthesis.epsilon")) c.synthesis.epsilon = r.real("synthesis.epsilon");
  if (!(c.synthesis.rel_tol > 0.0 && c.synthesis.rel_tol < 1.0)) r.fail("synthesis.rel_tol", "must lie in (0, 1)");
  if (!(c.synthesis.epsilon > 0.0)) r.fail("synthesis.epsilon", "must be positive");
  if (r.has("output.dir")) c.output_dir = r.string("output.dir");

  p.validate();
  return c;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path + ": cannot open configuration file");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path);
}

/// FNV-1a hash of the design-relevant fields (relay, filter, synthesis),
/// printed in a canonical form. OFDM source and output settings are not
/// part of it: one controller serves every input realization.
inline std::string config_hash(const RunConfig& c) {
  const auto& p = c.relay;
  std::string canon;
  auto put = [&](const char* key, double v) { canon += std::string(key) + "=" + format_real(v) + ";"; };
  put("a", p.amplifier_gain);
  put("f", p.carrier);
  put("h", p.sample_period);
  put("N", p.ratio);
  put("m", p.processing_delay);
  put("Np", p.pulse_support);
  put("beta", p.rolloff);
  for (const auto& path : p.paths) {
    put("r", path.gain);
    put("l", path.delay);
  }
  put("tau", c.filter_tau);
  put("dc", c.filter_dc_gain);
  put("rel_tol", c.synthesis.rel_tol);
  put("eps", c.synthesis.epsilon);

  return fnv1a_hex(canon);
}

}  // namespace relay
