#include <gtest/gtest.h>

#include <filesystem>

#include "hkvf/config.hpp"
#include "support.hpp"

using namespace hkvf;
using namespace hkvf::config;

namespace {

const char* kAnnulus = R"(# flat annulus
[surface]
kind = "annulus"
rho = 0.5

[metric]
lambda = "1"

[field]
tag = "rotational"

[checks]
run = ["killing", "nonzero"]
grid = 11
seeds = [[0.7, 0], [0, -0.6]]

[tolerances]
killing = 1e-7
)";

ConfigError error_of(const std::string& text) {
  try {
    (void)to_job(parse(text));
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no ConfigError for:\n" << text;
  return ConfigError(0, 0, "");
}

}  // namespace

TEST(ConfigParse, Values) {
  const Document d = parse("a = 1_000.5\nb = true\n[s.t]\nc = \"x\\\"y\\n\" # trailing\nd = [1, [2, \"z\"], false]\n");
  EXPECT_EQ(std::get<double>(d.entries.at("a").data), 1000.5);
  EXPECT_EQ(std::get<bool>(d.entries.at("b").data), true);
  EXPECT_EQ(std::get<std::string>(d.entries.at("s.t.c").data), "x\"y\n");
  const Array& arr = std::get<Array>(d.entries.at("s.t.d").data);
  ASSERT_EQ(arr.size(), 3u);
  EXPECT_TRUE(arr[1].is_array());
  EXPECT_EQ(d.entries.at("s.t.c").line, 4u);
  EXPECT_EQ(d.entries.at("s.t.c").column, 5u);
  EXPECT_EQ(d.sections.count("s.t"), 1u);
}

TEST(ConfigParse, SyntaxErrorsCarryPosition) {
  auto pos = [](const std::string& text) {
    try {
      (void)parse(text);
    } catch (const ConfigError& e) {
      return std::make_pair(e.line(), e.column());
    }
    return std::make_pair(std::size_t{0}, std::size_t{0});
  };
  EXPECT_EQ(pos("a = 1\nb = \n"), std::make_pair(std::size_t{2}, std::size_t{5}));
  EXPECT_EQ(pos("[x]\n[x]\n").first, 2u);
  EXPECT_EQ(pos("a = 1\na = 2\n").first, 2u);
  EXPECT_EQ(pos("a = \"open\n").first, 1u);
  EXPECT_EQ(pos("a = [1, 2\n").first, 1u);
  EXPECT_EQ(pos("a = 1 2\n").first, 1u);
}

TEST(ConfigJob, Annulus) {
  const JobConfig j = to_job(parse(kAnnulus));
  EXPECT_EQ(j.surface.kind(), SurfaceKind::Annulus);
  EXPECT_DOUBLE_EQ(j.surface.rho(), 0.5);
  EXPECT_EQ(j.tag, FieldTag::Rotational);
  EXPECT_EQ(j.verify.grid_n, 11);
  EXPECT_EQ(j.verify.tol_killing, 1e-7);
  EXPECT_FALSE(j.verify.check_complete);
  EXPECT_FALSE(j.verify.check_periodic);
  ASSERT_EQ(j.verify.seeds.size(), 2u);
  EXPECT_EQ(j.verify.seeds[1].value(), Complex(0, -0.6));
  const HkvfReport r = verify(j.metric(), j.field(), j.verify);
  EXPECT_EQ(r.killing.status, CheckStatus::Pass);
}

TEST(ConfigJob, Torus) {
  const JobConfig j = to_job(parse("[surface]\nkind = \"torus\"\npi1 = [0, 1]\npi2 = [1, 0]\n[field]\nu = \"0\"\nv = \"1\"\n"));
  EXPECT_EQ(j.surface.kind(), SurfaceKind::Torus);
  EXPECT_EQ(j.field().at(Complex(0.3, 0.2)), Complex(0, 1));
}

TEST(ConfigJob, ValidationErrors) {
  const std::string field = "[field]\ntag = \"rotational\"\n";
  EXPECT_EQ(error_of("[surface]\nkind = \"plane\"\n[bogus]\n" + field).line(), 3u);
  const ConfigError k = error_of("[surface]\nkind = \"plane\"\ncolour = 1\n" + field);
  EXPECT_EQ(k.line(), 3u);
  EXPECT_NE(std::string(k.what()).find("surface.colour"), std::string::npos);
  EXPECT_EQ(error_of("[surface]\nkind = \"moebius\"\n" + field).line(), 2u);
  EXPECT_EQ(error_of("[surface]\nkind = \"annulus\"\nrho = 1.5\n" + field).line(), 2u);
  EXPECT_EQ(error_of("[surface]\nkind = \"plane\"\nrho = 0.5\n" + field).line(), 3u);
  EXPECT_EQ(error_of("[surface]\nkind = \"plane\"\n[field]\ntag = \"radial\"\n").line(), 4u);
  EXPECT_EQ(error_of("[surface]\nkind = \"plane\"\n[field]\ntag = \"rotational\"\nu = \"1\"\n").line(), 4u);
  EXPECT_EQ(error_of("[surface]\nkind = \"plane\"\n[metric]\nlambda = \"1 +\"\n" + field).line(), 4u);
  EXPECT_EQ(error_of("[surface]\nkind = \"plane\"\n" + field + "[checks]\nhorizon = -1\n").line(), 6u);
  EXPECT_EQ(error_of("[surface]\nkind = \"plane\"\n" + field + "[checks]\ngrid = 2.5\n").line(), 6u);
  EXPECT_EQ(error_of("[surface]\nkind = \"plane\"\n" + field + "[checks]\nrun = [\"fast\"]\n").line(), 6u);
  EXPECT_EQ(error_of("[surface]\nkind = \"plane\"\n" + field + "[tolerances]\nslip = 0\n").line(), 6u);
  EXPECT_EQ(error_of("[surface]\nkind = \"plane\"\n[field]\nu = \"1\"\n").line(), 1u);
}

TEST(ConfigJob, ShippedConfigsLoad) {
  int n = 0;
  for (const auto& e : std::filesystem::directory_iterator(std::string(HKVF_SOURCE_DIR) + "/configs")) {
    if (e.path().extension() != ".toml") continue;
    EXPECT_NO_THROW((void)load(e.path().string())) << e.path();
    ++n;
  }
  EXPECT_EQ(n, 18);
}

TEST(ConfigProperty, NumbersRoundTrip) {
  hkvf::prop::Gen gen(101);
  for (int i = 0; i < 200; ++i) {
    const double x = gen.uniform(-1e6, 1e6) * std::pow(10.0, gen.integer(-20, 20));
    char buf[64];
    std::snprintf(buf, sizeof buf, "v = %.17g\n", x);
    EXPECT_EQ(std::get<double>(parse(buf).entries.at("v").data), x) << buf;
  }
}

TEST(ConfigProperty, StringEscapesRoundTrip) {
  hkvf::prop::Gen gen(102);
  const std::string alphabet = "ab z\"\\\n\t#[]=";
  for (int i = 0; i < 200; ++i) {
    std::string s, quoted = "\"";
    const int len = gen.integer(0, 12);
    for (int k = 0; k < len; ++k) {
      const char c = alphabet[gen.integer(0, static_cast<int>(alphabet.size()) - 1)];
      s += c;
      if (c == '"') quoted += "\\\"";
      else if (c == '\\') quoted += "\\\\";
      else if (c == '\n') quoted += "\\n";
      else if (c == '\t') quoted += "\\t";
      else quoted += c;
    }
    quoted += "\"";
    EXPECT_EQ(std::get<std::string>(parse("k = " + quoted + "\n").entries.at("k").data), s);
  }
}
