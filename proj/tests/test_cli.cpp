#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "htrip/cli.hpp"

namespace fs = std::filesystem;
using htrip::cli::dispatch;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = dispatch(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "htrip_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string data_file() { return std::string(HTRIP_SOURCE_DIR) + "/data/example_2x3.txt"; }

std::string strip_comments(const std::string& s) {
  std::istringstream is(s);
  std::string line, out;
  while (std::getline(is, line))
    if (line.rfind("#", 0) != 0 && line.rfind("wrote:", 0) != 0) out += line + "\n";
  return out;
}

}  // namespace

TEST(Cli, SpectrumOnStoredExample) {
  const auto r = run({"spectrum", "--matrix", data_file(), "--stat", "deltam", "--m", "2", "--normalize"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("value: 0.707106781187"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("support: {1,3}"), std::string::npos);
  EXPECT_NE(r.out.find("# normalize=true"), std::string::npos);
}

TEST(Cli, BoundsCalculator) {
  const auto r = run({"bounds", "--name", "c2", "--sigma", "4", "--lambda", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("c2: 0.367879441171"), std::string::npos) << r.out;
  // defaulted absolute constants are echoed
  EXPECT_NE(r.out.find("# C=1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("# c=1"), std::string::npos);
}

TEST(Cli, UnknownFlagExitsTwoWithoutArtifacts) {
  const auto target = scratch("unknown.txt");
  fs::remove(target);
  const auto r = run({"bounds", "--name", "c2", "--bogus", "1", "--out", target.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(r.out.empty());
  EXPECT_FALSE(fs::exists(target));
}

TEST(Cli, ValidationFailureExitsTwo) {
  const auto r = run({"bounds", "--name", "c2", "--sigma", "1", "--lambda", "1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("sigma"), std::string::npos);
  EXPECT_EQ(run({"bounds", "--name", "c2", "--sigma", "4"}).code, 2);
  EXPECT_EQ(run({"bounds", "--name", "nope"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
}

TEST(Cli, CapRefusalExitsThree) {
  const auto r = run({"spectrum", "--model", "kind=gaussian", "--n", "3", "--N", "40", "--stat", "ak", "--k", "5",
                      "--cap", "1000"});
  EXPECT_EQ(r.code, 3);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(run({"gen", "--n", "100", "--N", "100", "--element-cap", "50", "--out", scratch("big.txt").string()}).code,
            3);
}

TEST(Cli, GenThenSpectrumEqualsOneProcess) {
  const auto path = scratch("gen.txt");
  const auto g = run({"gen", "--model", "kind=pareto;q=3;normalize=variance", "--n", "5", "--N", "8", "--seed", "42",
                      "--out", path.string()});
  ASSERT_EQ(g.code, 0) << g.err;
  ASSERT_TRUE(fs::exists(path));
  EXPECT_FALSE(fs::exists(path.string() + ".tmp"));
  const auto from_file = run({"spectrum", "--matrix", path.string(), "--stat", "bksq", "--k", "3"});
  const auto direct = run({"spectrum", "--model", "kind=pareto;q=3;normalize=variance", "--n", "5", "--N", "8",
                           "--seed", "42", "--stat", "bksq", "--k", "3"});
  ASSERT_EQ(from_file.code, 0);
  ASSERT_EQ(direct.code, 0);
  EXPECT_EQ(strip_comments(from_file.out), strip_comments(direct.out));
  const auto a = htrip::load_matrix(path.string());
  EXPECT_EQ(a, htrip::generate_matrix(htrip::parse_model_record("kind=pareto;q=3;normalize=variance"), 5, 8, 42));
}

TEST(Cli, ConfigFileAndFlagOverride) {
  const auto cfg = scratch("c2.cfg");
  {
    std::ofstream os(cfg);
    os << "# calculator\nname = c2\nsigma = 7\nlambda=1\n";
  }
  auto r = run({"bounds", "--config", cfg.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("c2: 0.23544284235\n"), std::string::npos) << r.out;
  r = run({"bounds", "--config", cfg.string(), "--sigma", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("c2: 0.367879441171"), std::string::npos) << r.out;
  {
    std::ofstream os(cfg);
    os << "name=c2\nwhatever=3\n";
  }
  EXPECT_EQ(run({"bounds", "--config", cfg.string()}).code, 2);
  {
    std::ofstream os(cfg);
    os << "stat=deltam\nm=2\nnormalize=true\n";
  }
  r = run({"spectrum", "--config", cfg.string(), "--matrix", data_file()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("value: 0.707106781187"), std::string::npos);
}

TEST(Cli, CsvOutputIsFullPrecisionAndAtomic) {
  const auto path = scratch("spec.csv");
  fs::remove(path);
  const auto r = run({"spectrum", "--matrix", data_file(), "--stat", "ak", "--k", "2", "--format", "csv", "--out",
                      path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  EXPECT_NE(ss.str().find("1.8477590650225735"), std::string::npos) << ss.str();
  EXPECT_NE(ss.str().find("# subcommand=spectrum"), std::string::npos);
}

TEST(Cli, OtherSubcommandsRun) {
  auto r = run({"rip", "--regime", "exp", "--theta", "0.5", "--alpha", "2", "--n", "100", "--N", "800"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("m: 7\n"), std::string::npos) << r.out;
  r = run({"kls", "--model", "kind=gaussian", "--n", "4", "--Ns", "20,40", "--trials", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("slope:"), std::string::npos);
  r = run({"verify", "--kind", "binomial", "--Nlo", "5", "--Nhi", "8"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("exceptions: 0"), std::string::npos);
  r = run({"verify", "--kind", "orderstats", "--q", "2", "--s", "4", "--k", "10", "--N", "100", "--trials", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("violations: 0"), std::string::npos);
  r = run({"verify", "--kind", "lower", "--construction", "weibull", "--param", "1", "--m", "2", "--n", "4", "--N",
           "3", "--trials", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("frequency: 1\n"), std::string::npos) << r.out;
  r = run({"verify", "--kind", "desym", "--source", "model", "--model", "kind=pareto;q=5", "--q", "2", "--N", "50",
           "--trials", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"report", "--model", "kind=gaussian", "--n", "3", "--N", "5", "--stat", "ak", "--k", "2", "--trials", "4",
           "--threshold", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find(std::string(htrip::kCsvHeader)), std::string::npos);
  EXPECT_EQ(run({"--help"}).code, 0);
}
