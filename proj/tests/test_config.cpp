#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "steinmd/config.hpp"

using namespace steinmd;

namespace {

const std::filesystem::path kSamples = STEINMD_SAMPLES_DIR;

// Line number reported by a config_error, or -1 when nothing was thrown.
int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const config_error& e) {
    return e.line();
  }
  return -1;
}

std::string error_text(const std::string& text) {
  try {
    parse_config(text);
  } catch (const config_error& e) {
    return e.what();
  }
  return "";
}

const char* kMinimal = R"({
  "schema_version": 1,
  "model": {"type": "localdep", "shape": [8]}
})";

}  // namespace

TEST(Config, Defaults) {
  const auto c = parse_config(kMinimal);
  EXPECT_EQ(c.schema_version, 1);
  EXPECT_EQ(c.model.type, "localdep");
  EXPECT_EQ(c.model.id, "localdep");
  EXPECT_EQ(c.model.field.shape, std::vector<int>{8});
  EXPECT_EQ(c.model.field.m, 0);
  EXPECT_EQ(c.estimation.method, "auto");
  EXPECT_EQ(c.estimation.mode, "auto");
  EXPECT_EQ(c.estimation.samples, 100000u);
  EXPECT_EQ(c.estimation.seed, 1u);
  EXPECT_EQ(c.bound.theorem, "auto");
  EXPECT_FALSE(c.bound.a_n.has_value());
  EXPECT_EQ(c.output.formats, std::vector<std::string>{"csv"});
  EXPECT_TRUE(c.n_list.empty());
}

TEST(Config, EverySampleParses) {
  int parsed = 0;
  for (const auto& entry : std::filesystem::directory_iterator(kSamples)) {
    const auto name = entry.path().filename().string();
    if (name == "malformed.json" || name == "bad_key.json") {
      EXPECT_THROW(load_config(entry.path()), config_error) << name;
      continue;
    }
    EXPECT_NO_THROW(load_config(entry.path())) << name;
    ++parsed;
  }
  EXPECT_GE(parsed, 10);
}

TEST(Config, SampleValues) {
  const auto c = load_config(kSamples / "iid_uniform_256.json");
  EXPECT_EQ(c.model.id, "iid_uniform");
  EXPECT_EQ(c.estimation.seed, 20240611u);
  EXPECT_EQ(c.estimation.z_grid.size(), 6u);
  EXPECT_EQ(c.base_dir, kSamples);
  const auto m = make_local_model(c.model);
  EXPECT_EQ(m.size(), 256u);
  EXPECT_EQ(make_local_model(c.model, 64).size(), 64u);
  // Var of uniform(-1, 1) is 1/3; W is normalized regardless.
  EXPECT_NEAR(m.variance_of_w(), 1.0, 1e-12);

  const auto k = load_config(kSamples / "comb_64.json");
  EXPECT_EQ(k.model.n, 64);
  EXPECT_EQ(k.model.means_seed, 3u);
  EXPECT_EQ(make_comb_model(k.model).n(), 64);
  EXPECT_EQ(make_comb_model(k.model, 16).n(), 16);
}

TEST(Config, MalformedReportsLine) {
  EXPECT_EQ(error_line("{\n  \"schema_version\": 1,\n  \"model\": {\"shape\": [4],}\n}"), 3);
  EXPECT_EQ(error_line("[1, 2]"), 1);
  EXPECT_EQ(error_line("{\"model\": {\"shape\": [4]}}"), 1);  // no schema_version
}

TEST(Config, SchemaVersion) {
  const std::string t = "{\n\"schema_version\": 2,\n\"model\": {\"shape\": [4]}}";
  EXPECT_EQ(error_line(t), 2);
  EXPECT_NE(error_text(t).find("unsupported"), std::string::npos);
}

TEST(Config, UnknownKeysAreRejectedWithLine) {
  const std::string t = "{\n  \"schema_version\": 1,\n  \"model\": {\"shape\": [4]},\n  \"estimation\": {\n    \"sample\": 20000\n  }\n}";
  EXPECT_EQ(error_line(t), 5);
  EXPECT_NE(error_text(t).find("estimation.sample"), std::string::npos);
  EXPECT_EQ(error_line("{\"schema_version\": 1, \"model\": {\"shape\": [4]}, \"extra\": {}}"), 1);
}

TEST(Config, KeyLineIsTheOneInTheRightSection) {
  // "seed" appears in the model section first; the estimation one is wrong.
  const std::string t =
      "{\n\"schema_version\": 1,\n\"model\": {\"type\": \"comb\", \"n\": 8,\n \"means_seed\": 4},\n\"estimation\": {\n"
      "\"seed\": -3\n}}";
  EXPECT_EQ(error_line(t), 6);
}

TEST(Config, ValueChecks) {
  auto with = [](const std::string& section) {
    return "{\"schema_version\": 1, \"model\": {\"shape\": [4]}, " + section + "}";
  };
  EXPECT_GT(error_line(with("\"estimation\": {\"samples\": 5000}")), 0);
  EXPECT_GT(error_line(with("\"estimation\": {\"samples\": 12345.5}")), 0);
  EXPECT_GT(error_line(with("\"estimation\": {\"method\": \"fast\"}")), 0);
  EXPECT_GT(error_line(with("\"estimation\": {\"z_grid\": [2, 1]}")), 0);
  EXPECT_GT(error_line(with("\"estimation\": {\"z_grid\": []}")), 0);
  EXPECT_GT(error_line(with("\"estimation\": {\"workers\": 0}")), 0);
  EXPECT_GT(error_line(with("\"bound\": {\"theorem\": \"general\"}")), 0);
  EXPECT_GT(error_line(with("\"bound\": {\"r\": [1, 2]}")), 0);
  EXPECT_GT(error_line(with("\"bound\": {\"C\": 0}")), 0);
  EXPECT_GT(error_line(with("\"output\": {\"formats\": [\"xml\"]}")), 0);
  EXPECT_EQ(error_line(with("\"bound\": {\"theorem\": \"general\", \"preset\": \"localdep\"}")), -1);
  EXPECT_GT(error_line("{\"schema_version\": 1, \"model\": {\"shape\": [4, 4]}}"), 0);  // d = 1
  EXPECT_GT(error_line("{\"schema_version\": 1, \"model\": {\"d\": 2, \"shape\": [4, 4]}, \"experiment\": {\"n_list\": [8]}}"), 0);
}

TEST(Config, Laws) {
  auto law_of = [](const std::string& inner) {
    return parse_config("{\"schema_version\": 1, \"model\": {\"shape\": [4], \"innovation\": " + inner + "}}")
        .model.field.innovation;
  };
  EXPECT_NEAR(law_of("{\"law\": \"uniform\", \"half_width\": 3}").variance(), 3.0, 1e-14);
  EXPECT_NEAR(law_of("{\"law\": \"gaussian\", \"sd\": 2}").variance(), 4.0, 1e-14);
  EXPECT_NEAR(law_of("{\"law\": \"laplace\", \"scale\": 1}").variance(), 2.0, 1e-14);
  EXPECT_NEAR(law_of("{\"law\": \"bernoulli\", \"p\": 0.25}").variance(), 0.1875, 1e-14);
  EXPECT_NEAR(law_of("{\"atoms\": [[-1, 0.25], [1, 0.75]]}").variance(), 0.75, 1e-14);
  EXPECT_GT(error_line("{\"schema_version\": 1, \"model\": {\"shape\": [4], \"innovation\": {\"law\": \"cauchy\"}}}"), 0);
  EXPECT_GT(error_line("{\"schema_version\": 1, \"model\": {\"shape\": [4], \"innovation\": {\"atoms\": [[0, 0.5]]}}}"), 0);
}

TEST(Config, CombMeans) {
  const auto lat = parse_config("{\"schema_version\": 1, \"model\": {\"type\": \"comb\", \"n\": 5, \"means\": \"latin_square\"}}");
  EXPECT_EQ(lat.model.means_kind, "latin_square");
  std::string arr = "[";
  for (int k = 0; k < 9; ++k) arr += std::to_string(k * k % 7) + (k < 8 ? "," : "]");
  const auto ex = parse_config("{\"schema_version\": 1, \"model\": {\"type\": \"comb\", \"n\": 3, \"means\": " + arr + "}}");
  EXPECT_EQ(ex.model.means_kind, "explicit");
  EXPECT_EQ(ex.model.means.size(), 9u);
  EXPECT_THROW(make_comb_model(ex.model, 4), model_error);
  EXPECT_GT(error_line("{\"schema_version\": 1, \"model\": {\"type\": \"comb\", \"n\": 3, \"means\": [1, 2]}}"), 0);
  EXPECT_GT(error_line("{\"schema_version\": 1, \"model\": {\"type\": \"comb\", \"n\": 1}}"), 0);
  EXPECT_GT(error_line("{\"schema_version\": 1, \"model\": {\"type\": \"comb\", \"n\": 3, \"noise\": {\"law\": \"gaussian\"}}}"), 0);
}

TEST(Config, MeansFileRelativeToConfig) {
  const auto dir = std::filesystem::temp_directory_path() / "steinmd_config_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "m.csv") << "1,2,3\n4,5,6\n7,8,10\n";
    std::ofstream(dir / "c.json") << R"({"schema_version": 1, "model": {"type": "comb", "n": 3, "means_file": "m.csv"}})";
  }
  const auto c = load_config(dir / "c.json");
  EXPECT_EQ(c.model.means, (std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 10}));
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_config(dir / "c.json"), config_error);
}

TEST(Config, IntegersAreStrict) {
  EXPECT_GT(error_line("{\"schema_version\": 1, \"model\": {\"shape\": [4], \"m\": 1.5}}"), 0);
  EXPECT_GT(error_line("{\"schema_version\": 1, \"model\": {\"shape\": [4]}, \"estimation\": {\"seed\": 2.0}}"), 0);
  EXPECT_EQ(parse_config("{\"schema_version\": 1, \"model\": {\"shape\": [4]}, \"estimation\": {\"seed\": 18446744073709551615}}")
                .estimation.seed,
            18446744073709551615ull);
}
