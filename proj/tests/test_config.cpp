#include <gtest/gtest.h>

#include <filesystem>
#include <regex>

#include "support.hpp"

using namespace relay;
using relay::testing::Rng;

namespace {

const std::string kConfigs = std::string(RELAY_SOURCE_DIR) + "/configs/";

const char* kMinimal = R"([relay]
a = 2500
f = 10000
h = 1
N = 2
m = 5
Np = 16
beta = 0.1
paths = [[0.2, 10], [0.17, 12]]
[filter]
tau = 0.5
[ofdm]
num_blocks = 4
block_len = 64
guard_len = 16
seed = 0
)";

std::string with_line(const std::string& key_prefix, const std::string& replacement) {
  std::string text = kMinimal;
  const auto pos = text.find(key_prefix);
  const auto end = text.find('\n', pos);
  return text.replace(pos, end - pos, replacement);
}

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text, "test.toml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST(Config, ReferenceFileValues) {
  const auto c = parse_config(kConfigs + "paper_sec5.toml");
  const auto& p = c.relay;
  EXPECT_EQ(p.amplifier_gain, 2500.0);
  EXPECT_EQ(p.processing_delay, 5);
  EXPECT_EQ(p.ratio, 2);
  EXPECT_EQ(p.pulse_support, 16);
  EXPECT_EQ(p.rolloff, 0.1);
  ASSERT_EQ(p.paths.size(), 2u);
  EXPECT_EQ(p.paths[0].gain, 0.2);
  EXPECT_EQ(p.paths[0].delay, 10);
  EXPECT_EQ(p.paths[1].gain, 0.17);
  EXPECT_EQ(p.paths[1].delay, 12);
  EXPECT_EQ(p.carrier, 10000.0);
  EXPECT_EQ(p.sample_period, 1.0);
  EXPECT_EQ(c.ofdm.block_len, 64);
  EXPECT_EQ(c.ofdm.guard_len, 16);
  EXPECT_EQ(c.ofdm.num_blocks, 4);
  EXPECT_EQ(c.ofdm.symbols(), 320);
  EXPECT_EQ(c.filter_tau, 0.5);
  EXPECT_EQ(c.synthesis.rel_tol, 1e-4);
  EXPECT_EQ(c.output_dir, "out/paper_sec5");
  EXPECT_LE((dc_gain(c2d_zoh(p.filter, 1.0)) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Config, UncoupledFileDiffersOnlyInGain) {
  const auto ref = parse_config(kConfigs + "paper_sec5.toml");
  const auto off = parse_config(kConfigs + "no_coupling.toml");
  EXPECT_EQ(off.relay.amplifier_gain, 0.0);
  EXPECT_EQ(off.relay.paths.size(), ref.relay.paths.size());
  EXPECT_NE(config_hash(off), config_hash(ref));
}

TEST(Config, DefaultsForOptionalKeys) {
  const auto c = parse_config_text(kMinimal);
  EXPECT_EQ(c.filter_dc_gain, 1.0);
  EXPECT_EQ(c.synthesis.epsilon, 1e-4);
  EXPECT_EQ(c.output_dir, ".");
}

TEST(Config, CausalityViolationNamesTheRule) {
  const auto e = error_of(with_line("m = 5", "m = 4"));
  EXPECT_TRUE(contains(e, "relay.m")) << e;
  EXPECT_TRUE(contains(e, "causality")) << e;
  EXPECT_TRUE(contains(e, "test.toml:6")) << e;
}

TEST(Config, EmptyFileListsAllMissingKeys) {
  const auto e = error_of("");
  for (const char* key : {"relay.a", "relay.f", "relay.h", "relay.N", "relay.m", "relay.Np", "relay.beta", "relay.paths",
                          "filter.tau", "ofdm.num_blocks", "ofdm.block_len", "ofdm.guard_len", "ofdm.seed"})
    EXPECT_TRUE(contains(e, key)) << key << " missing from: " << e;
}

TEST(Config, UnknownKeyCarriesLocation) {
  const auto e = error_of(std::string(kMinimal) + "gain = 3\n");
  EXPECT_TRUE(contains(e, "test.toml:17")) << e;
  EXPECT_TRUE(contains(e, "ofdm.gain")) << e;
  EXPECT_TRUE(contains(error_of(std::string(kMinimal) + "[plot]\n"), "unknown section"));
}

TEST(Config, TypeErrorsNameTheKey) {
  auto e = error_of(with_line("N = 2", "N = two"));
  EXPECT_TRUE(contains(e, "relay.N")) << e;
  EXPECT_TRUE(contains(e, "integer")) << e;
  e = error_of(with_line("beta", "beta = 0,1"));
  EXPECT_TRUE(contains(e, "relay.beta")) << e;
  e = error_of(with_line("paths", "paths = [[0.2, 10.5]]"));
  EXPECT_TRUE(contains(e, "relay.paths")) << e;
  e = error_of(with_line("paths", "paths = [0.2, 10]"));
  EXPECT_TRUE(contains(e, "relay.paths")) << e;
  e = error_of(std::string(kMinimal) + "[output]\ndir = out\n");
  EXPECT_TRUE(contains(e, "output.dir")) << e;
}

TEST(Config, StructuralErrors) {
  EXPECT_TRUE(contains(error_of("a = 1\n"), "before any section"));
  EXPECT_TRUE(contains(error_of(std::string(kMinimal) + "seed = 1\n"), "duplicate"));
  EXPECT_TRUE(contains(error_of(with_line("h = 1", "h =")), "missing value"));
  EXPECT_TRUE(contains(error_of(with_line("h = 1", "h 1")), "key = value"));
  EXPECT_TRUE(contains(error_of(with_line("[filter]", "[filter")), "section header"));
}

TEST(Config, InvariantViolationsNameTheKey) {
  EXPECT_TRUE(contains(error_of(with_line("block_len", "block_len = 48")), "ofdm.block_len"));
  EXPECT_TRUE(contains(error_of(with_line("guard_len", "guard_len = 64")), "ofdm.guard_len"));
  EXPECT_TRUE(contains(error_of(with_line("beta", "beta = 1.5")), "relay.beta"));
  EXPECT_TRUE(contains(error_of(with_line("Np", "Np = 15")), "relay.Np"));
  EXPECT_TRUE(contains(error_of(with_line("Np", "Np = 2")), "relay.Np"));
  EXPECT_TRUE(contains(error_of(with_line("a = ", "a = -1")), "relay.a"));
  EXPECT_TRUE(contains(error_of(with_line("paths", "paths = [[0.2, 0]]")), "relay.paths"));
  EXPECT_TRUE(contains(error_of(with_line("tau", "tau = 0")), "filter.tau"));
  EXPECT_TRUE(contains(error_of(with_line("seed", "seed = -3")), "ofdm.seed"));
  EXPECT_TRUE(contains(error_of(std::string(kMinimal) + "[synthesis]\nrel_tol = 2\n"), "synthesis.rel_tol"));
}

TEST(Config, CommentsAndQuotedHashes) {
  const auto c = parse_config_text(std::string(kMinimal) + "# trailing note\n[output]\ndir = \"out/#1\"  # where\n");
  EXPECT_EQ(c.output_dir, "out/#1");
}

TEST(Config, MissingFileIsReported) { EXPECT_THROW(parse_config(kConfigs + "does_not_exist.toml"), ConfigError); }

TEST(ConfigHash, CoversDesignFieldsOnly) {
  const auto base = parse_config_text(kMinimal);
  const std::string h = config_hash(base);
  EXPECT_TRUE(std::regex_match(h, std::regex("[0-9a-f]{16}")));
  EXPECT_EQ(config_hash(parse_config_text(kMinimal)), h);
  EXPECT_EQ(config_hash(parse_config_text(with_line("seed", "seed = 9"))), h);
  EXPECT_EQ(config_hash(parse_config_text(with_line("num_blocks", "num_blocks = 2"))), h);
  EXPECT_NE(config_hash(parse_config_text(with_line("a = ", "a = 2400"))), h);
  EXPECT_NE(config_hash(parse_config_text(with_line("tau", "tau = 0.25"))), h);
  EXPECT_NE(config_hash(parse_config_text(with_line("paths", "paths = [[0.2, 10]]"))), h);
  EXPECT_NE(config_hash(parse_config_text(std::string(kMinimal) + "[synthesis]\nepsilon = 1e-3\n")), h);
}

TEST(Digest, PublishedFnvVectors) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(FormatReal, ShortestRoundTrip) {
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(-2.5e-7), "-2.5e-07");
  EXPECT_EQ(format_real(3.0), "3");
  EXPECT_EQ(format_real(std::numeric_limits<double>::infinity()), "inf");
  Rng rng(71);
  std::normal_distribution<double> nd(0.0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = nd(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(std::stod(format_real(v)), v);
  }
}

TEST(Artifact, RoundTripIsBitIdentical) {
  Rng rng(72);
  const auto k = relay::testing::random_stable(rng, 7, 4, 2);
  const ControllerArtifact art{"0123456789abcdef", 1.234567890123e-3,
                               Controller{DiscreteStateSpace(k.a(), k.b(), k.c(), k.d(), 2.0), 1.234567890123e-3}};
  const std::string text = artifact_text(art);
  const auto back = parse_artifact_text(text);
  EXPECT_EQ(back.config_hash, art.config_hash);
  EXPECT_EQ(back.gamma_opt, art.gamma_opt);
  EXPECT_TRUE(back.controller.inner.a() == k.a());
  EXPECT_TRUE(back.controller.inner.b() == k.b());
  EXPECT_TRUE(back.controller.inner.c() == k.c());
  EXPECT_TRUE(back.controller.inner.d() == k.d());
  EXPECT_EQ(back.controller.inner.period(), 2.0);
  EXPECT_EQ(artifact_text(back), text);

  const auto path = std::filesystem::temp_directory_path() / "relay_artifact_roundtrip.txt";
  write_artifact(path.string(), art);
  EXPECT_EQ(artifact_text(read_artifact(path.string())), text);
  std::filesystem::remove(path);
}

TEST(Artifact, MalformedFilesAreRejectedWithLine) {
  Rng rng(73);
  const auto k = relay::testing::random_stable(rng, 2, 4, 2);
  const std::string text = artifact_text({"feedfeedfeedfeed", 0.5, Controller{k, 0.5}});
  auto error_for = [](const std::string& t) {
    try {
      parse_artifact_text(t, "k.txt");
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_TRUE(contains(error_for("relay-controller 2\n" + text.substr(text.find('\n') + 1)), "version"));
  EXPECT_TRUE(contains(error_for(text.substr(0, text.size() / 2)), "k.txt:"));
  std::string wrong_shape = text;
  wrong_shape.replace(wrong_shape.find("matrix B 2 4"), 12, "matrix B 2 3");
  EXPECT_TRUE(contains(error_for(wrong_shape), "wrong shape"));
  std::string bad_number = text;
  bad_number.replace(bad_number.find("gamma_opt 0.5"), 13, "gamma_opt 0,5");
  EXPECT_TRUE(contains(error_for(bad_number), "k.txt:3"));
  EXPECT_THROW(read_artifact("/nonexistent/controller.txt"), ValidationError);
}
