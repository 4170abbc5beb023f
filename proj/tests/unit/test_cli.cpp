#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hkvf/cli.hpp"

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "hkvf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = hkvf::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string cfg(const std::string& name) { return std::string(HKVF_SOURCE_DIR) + "/configs/" + name; }

std::filesystem::path tmp(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("hkvf_cli_test_" + name);
}

}  // namespace

TEST(Cli, VerifySphereConfig) {
  const Outcome r = run({"verify", "--config", cfg("sphere_rot.toml")});
  EXPECT_EQ(r.code, 0);
  for (const char* check : {"killing: pass", "nonzero: pass", "slip: not_applicable", "verdict: pass"})
    EXPECT_NE(r.out.find(check), std::string::npos) << check << "\n" << r.out;
}

TEST(Cli, VerifyJson) {
  const Outcome r = run({"verify", "--json", "--config", cfg("closed_annulus_rot.toml")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["surface"]["kind"], "closed_annulus");
  EXPECT_EQ(j["report"]["verdict"], "pass");
  EXPECT_EQ(j["report"]["slip"]["status"], "pass");
}

TEST(Cli, MobiusIdentity) {
  const Outcome r = run({"mobius", "--matrix", "1", "0", "0", "0", "0", "0", "1", "0"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, 8), "identity");
  const Outcome p = run({"mobius", "--matrix", "1", "0", "0", "1", "0", "0", "1", "0"});
  EXPECT_EQ(p.out.substr(0, 9), "parabolic");
  const Outcome t = run({"mobius", "--points", "0,0", "1,0", "inf", "--images", "0,0", "-1,0", "inf"});
  EXPECT_EQ(t.code, 0);
  EXPECT_EQ(t.out.substr(0, 8), "elliptic");
}

TEST(Cli, FlowEscapeTruncatesCsv) {
  const Outcome r = run({"flow", "--surface", "punctured_plane", "--field", "1,0", "--seed", "-1,0", "--horizon", "2"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("escape at t=1.000"), std::string::npos) << r.err;
  std::istringstream csv(r.out);
  std::string line, last;
  std::getline(csv, line);
  EXPECT_EQ(line, "t,x,y,lambda,speed_g");
  int rows = 0;
  while (std::getline(csv, line)) {
    last = line;
    ++rows;
  }
  EXPECT_GT(rows, 90);
  EXPECT_LT(std::stod(last.substr(0, last.find(','))), 1.0 + 1e-3);
}

TEST(Cli, FlowToFile) {
  const auto path = tmp("flow.csv");
  const Outcome r = run({"flow", "--surface", "disc", "--tag", "rotational", "--seed", "0.5,0", "--horizon", "1",
                     "--csv", path.string()});
  EXPECT_EQ(r.code, 0);
  std::ifstream f(path);
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "t,x,y,lambda,speed_g");
  std::filesystem::remove(path);
}

TEST(Cli, ClassifyJsonAndCoordinates) {
  const Outcome r = run({"classify", "--json", "--coordinates", "--config", cfg("cylinder_tra.toml")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["target"]["kind"], "cylinder");
  EXPECT_EQ(j["normal_form"], "translation");
  EXPECT_TRUE(j.contains("canonical_coordinates"));
}

TEST(Cli, ClassifyRefusesNonHkvf) {
  const Outcome r = run({"classify", "--surface", "plane", "--lambda", "exp(x)", "--field", "1,0"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("killing: fail"), std::string::npos);
}

TEST(Cli, FlagsOverrideConfig) {
  const Outcome r = run({"verify", "--json", "--config", cfg("plane_rot.toml"), "--lambda", "exp(x)"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(nlohmann::json::parse(r.out)["lambda"], "exp(x)");
}

TEST(Cli, Collar) {
  const Outcome r = run({"collar", "--json", "--surface", "closed_annulus", "--rho", "0.3", "--tag", "rotational",
                     "--point", "1,0", "--eps", "0.4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(nlohmann::json::parse(r.out)["conformality_residual"].get<double>(), 1e-5);
}

TEST(Cli, MapCheck) {
  const Outcome r = run({"map", "--chain", "fp_inv,fh,scale(0,1)", "--point", "0.5,0.5", "--check"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("pass"), std::string::npos);
  EXPECT_EQ(run({"map", "--chain", "fp_inv,,fh", "--point", "1,0"}).code, 1);
  EXPECT_EQ(run({"map", "--chain", "nope", "--point", "1,0"}).code, 1);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"mobius", "--matrix", "1", "0"}).code, 1);
  EXPECT_EQ(run({"verify", "--surface", "plane"}).code, 1);
  EXPECT_EQ(run({"verify", "--surface", "plane", "--tag", "rotational", "--horizon", "-1"}).code, 1);
}

TEST(Cli, ConfigErrorsReportPosition) {
  const auto path = tmp("bad.toml");
  {
    std::ofstream f(path);
    f << "[surface]\nkind = \"plane\"\n[field]\ntag = \"rotational\"\nspin = 1\n";
  }
  const Outcome r = run({"verify", "--config", path.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("config:5:1"), std::string::npos) << r.err;
  std::filesystem::remove(path);
}

TEST(Cli, JsonIsDeterministic) {
  for (const char* c : {"torus_tra.toml", "disc_rot.toml", "channel_closed_tra.toml"}) {
    const Outcome a = run({"classify", "--json", "--config", cfg(c)});
    const Outcome b = run({"classify", "--json", "--config", cfg(c)});
    EXPECT_EQ(a.code, 0) << c;
    EXPECT_EQ(a.out, b.out) << c;
  }
}
