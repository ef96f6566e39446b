#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stemtrace/annotation.hpp"
#include "stemtrace/cli.hpp"
#include "stemtrace/metrics.hpp"
#include "stemtrace/png_io.hpp"
#include "stemtrace/service.hpp"

namespace stemtrace {
namespace fs = std::filesystem;
namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("stemtrace_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_ / "ann");
  }
  void TearDown() override { fs::remove_all(root_); }

  void add_annotation(const std::string& id, double x, int tau = 30) {
    ControlPointAnnotation a;
    a.image_id = id;
    a.image_width = 96;
    a.image_height = 128;
    a.stems = {{{x, 120}, {x + 4, 80}, {x - 2, 40}, {x + 3, 6}}};
    a.tau = tau;
    std::ofstream(root_ / "ann" / (id + ".json")) << write_annotation(a);
  }
  std::string path(const std::string& rel) const { return (root_ / rel).string(); }

  fs::path root_;
};

TEST_F(CliTest, GenerateThreeAnnotations) {
  for (int i = 0; i < 3; ++i) add_annotation("p" + std::to_string(i), 30 + 15 * i);
  const auto r = run({"generate", "--tau", "30", "--in", path("ann"), "--out", path("masks")});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(fs::exists(root_ / "masks" / ("p" + std::to_string(i) + "_mask.png")));
}

TEST_F(CliTest, GenerateReportsPerFileFailure) {
  add_annotation("good", 40);
  std::ofstream(root_ / "ann" / "broken.json") << "{";
  const auto r = run({"generate", "--in", path("ann"), "--out", path("masks"), "--jobs", "2"});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_TRUE(fs::exists(root_ / "masks" / "good_mask.png"));
  EXPECT_NE(r.out.find("broken.json"), std::string::npos) << r.out;
}

TEST_F(CliTest, EvaluateSameDirectoryIsPerfect) {
  add_annotation("a", 30);
  add_annotation("b", 60);
  ASSERT_EQ(run({"generate", "--in", path("ann"), "--out", path("masks")}).code, kExitOk);
  auto r = run({"evaluate", "--pred", path("masks"), "--gt", path("masks")});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("100.0"), std::string::npos) << r.out;
  EXPECT_EQ(r.out.find("66.7"), std::string::npos);

  r = run({"evaluate", "--pred", path("masks"), "--gt", path("masks"), "--format", "csv", "--report",
           path("report.csv")});
  EXPECT_EQ(r.code, kExitOk);
  std::ifstream in(path("report.csv"));
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, kReportCsvHeader);
}

TEST_F(CliTest, EvaluateWarnsOnUnpairedMasks) {
  add_annotation("a", 30);
  add_annotation("b", 60);
  ASSERT_EQ(run({"generate", "--in", path("ann"), "--out", path("pred")}).code, kExitOk);
  fs::create_directories(root_ / "gt");
  fs::copy_file(root_ / "pred" / "a_mask.png", root_ / "gt" / "a_mask.png");
  const auto r = run({"evaluate", "--pred", path("pred"), "--gt", path("gt"), "--format", "csv"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.err.find("1 warning"), std::string::npos) << r.err;
  EXPECT_NE(r.out.find("\na,"), std::string::npos);
}

TEST_F(CliTest, SplitFourHundredIds) {
  fs::create_directories(root_ / "ids");
  for (int i = 0; i < 400; ++i) std::ofstream(root_ / "ids" / ("img" + std::to_string(i) + ".json")) << "{}";
  const auto r = run({"split", "--n-from", path("ids"), "--seed", "7"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc.at("train").size(), 320u);
  EXPECT_EQ(doc.at("val").size(), 40u);
  EXPECT_EQ(doc.at("test").size(), 40u);
  EXPECT_EQ(doc.at("seed"), 7);
  EXPECT_EQ(run({"split", "--n-from", path("ids"), "--seed", "7"}).out, r.out);
}

TEST_F(CliTest, PreviewToStdoutAndFile) {
  add_annotation("one", 50, 12);
  const auto r = run({"preview", "--in", path("ann/one.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::vector<std::uint8_t> bytes(r.out.begin(), r.out.end());
  const auto mask = read_mask_png(bytes);
  EXPECT_EQ(mask.width(), 96u);
  ASSERT_EQ(run({"preview", "--in", path("ann/one.json"), "--out", path("one.png")}).code, kExitOk);
  EXPECT_EQ(read_file_bytes(path("one.png")), bytes);

  const auto wider = run({"preview", "--in", path("ann/one.json"), "--tau", "30", "--clamp-ends"});
  ASSERT_EQ(wider.code, kExitOk);
  EXPECT_GT(read_mask_png(std::vector<std::uint8_t>(wider.out.begin(), wider.out.end())).count(), mask.count());
}

TEST_F(CliTest, PreviewOfInvalidAnnotationFails) {
  std::ofstream(root_ / "ann" / "short.json")
      << R"({"imageWidth":10,"imageHeight":10,"shapes":[{"label":"stem","shape_type":"linestrip","points":[[1,1],[2,2],[3,3]]}]})";
  const auto r = run({"preview", "--in", path("ann/short.json")});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_NE(r.err.find("insufficient_control_points"), std::string::npos) << r.err;
  EXPECT_EQ(run({"preview", "--in", path("ann/missing.json")}).code, kExitFailure);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"generate", "--in", "x"}).code, kExitUsage);
  EXPECT_EQ(run({"generate", "--in", "x", "--out", "y", "--bogus"}).code, kExitUsage);
  EXPECT_EQ(run({"evaluate", "--pred", "x", "--gt", "y", "--format", "xml"}).code, kExitUsage);
  EXPECT_EQ(run({"preview", "--in", "x", "--tau", "0"}).code, kExitUsage);
  const auto r = run({"split"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("--n-from"), std::string::npos);
}

TEST(Cli, HelpAndVersion) {
  auto r = run({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("generate"), std::string::npos);
  r = run({"--version"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out, std::string(version()) + "\n");
}

TEST(Cli, ServeRejectsBadAddress) {
  EXPECT_EQ(run({"serve", "--addr", "nonsense"}).code, kExitFailure);
}

}  // namespace
}  // namespace stemtrace
