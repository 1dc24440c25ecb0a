// End-to-end checks of the command-line tool: subcommands, exit codes,
// output files. Each test shells out to the built binary.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "fflogo/io/cloud_io.hpp"
#include "fflogo/io/transform_io.hpp"
#include "fflogo/synth/synth.hpp"

using namespace fflogo;
namespace fs = std::filesystem;

namespace {

class CliFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = (fs::temp_directory_path() / ("fflogo_cli_" + std::to_string(::getpid()))).string();
    fs::create_directories(dir_);
    sample_ = dir_ + "/sample.ply";
    save_cloud(sample_, synth::generate_base(synth::BaseShape::composite_room, 2500, 3),
               CloudFormat::ply_ascii);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static int run(const std::string& args, std::string* output = nullptr) {
    const std::string out_file = dir_ + "/cmd_out.txt";
    const std::string cmd =
        std::string(FFLOGO_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) {
      std::ifstream in(out_file);
      std::stringstream ss;
      ss << in.rdbuf();
      *output = ss.str();
    }
    return WEXITSTATUS(status);
  }

  static std::string dir_;
  static std::string sample_;
};

std::string CliFixture::dir_;
std::string CliFixture::sample_;

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  nlohmann::json j;
  in >> j;
  return j;
}

void strip_timing(nlohmann::json& j) {
  if (j.is_object()) {
    j.erase("timing");
    j.erase("wall_ms");
    for (auto& [key, value] : j.items()) strip_timing(value);
  } else if (j.is_array()) {
    for (auto& value : j) strip_timing(value);
  }
}

}  // namespace

TEST_F(CliFixture, InfoPrintsDefaultsAndExitCodes) {
  std::string output;
  EXPECT_EQ(run("info", &output), 0);
  EXPECT_NE(output.find("exit codes"), std::string::npos);
  EXPECT_NE(output.find("voxel_size"), std::string::npos);
}

TEST_F(CliFixture, SelfRegistrationSucceedsWithIdentity) {
  const std::string out = dir_ + "/self.json";
  EXPECT_EQ(run("register " + sample_ + " " + sample_ + " --out " + out), 0);
  const auto result = read_json(out);
  const auto T = transform_from_json(result["final_transform"]);
  EXPECT_LT((T.matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(), 0.01);
  // The aligned cloud is written next to the result JSON.
  EXPECT_TRUE(fs::exists(dir_ + "/self_aligned.ply"));
}

TEST_F(CliFixture, MissingInputYieldsIoExitCodeAndPath) {
  std::string output;
  EXPECT_EQ(run("register /no/such.ply " + sample_, &output), 3);
  EXPECT_NE(output.find("/no/such.ply"), std::string::npos);
}

TEST_F(CliFixture, BadConfigYieldsConfigExitCodeAndField) {
  const std::string config = dir_ + "/bad_config.json";
  std::ofstream(config) << "{\"voxel_size\": -1}";
  std::string output;
  EXPECT_EQ(run("register " + sample_ + " " + sample_ + " --config " + config, &output), 4);
  EXPECT_NE(output.find("voxel_size"), std::string::npos);
}

TEST_F(CliFixture, UnknownFlagIsUsageError) {
  EXPECT_EQ(run("register --frobnicate"), 2);
}

TEST_F(CliFixture, SynthWritesCorpusAndManifest) {
  const std::string spec = dir_ + "/corpus_spec.json";
  std::ofstream(spec) << R"({"pairs": 2, "points": 1200, "seed": 5,
                             "source": {"density_keep": 0.5, "noise_sigma": 0.005}})";
  const std::string corpus = dir_ + "/corpus";
  EXPECT_EQ(run("synth " + spec + " --out " + corpus), 0);
  EXPECT_TRUE(fs::exists(corpus + "/manifest.json"));
  EXPECT_TRUE(fs::exists(corpus + "/pair_000_source.ply"));
  EXPECT_TRUE(fs::exists(corpus + "/pair_001_target.ply"));

  // Same spec, second directory: identical ground-truth entries.
  const std::string corpus2 = dir_ + "/corpus2";
  EXPECT_EQ(run("synth " + spec + " --out " + corpus2), 0);
  auto a = read_json(corpus + "/manifest.json");
  auto b = read_json(corpus2 + "/manifest.json");
  EXPECT_EQ(a["pairs"].dump(), b["pairs"].dump());
}

TEST_F(CliFixture, SynthRejectsUnknownSpecField) {
  const std::string spec = dir_ + "/bad_spec.json";
  std::ofstream(spec) << R"({"pairs": 2, "wibble": true})";
  std::string output;
  EXPECT_EQ(run("synth " + spec + " --out " + dir_ + "/never", &output), 4);
  EXPECT_NE(output.find("wibble"), std::string::npos);
}

TEST_F(CliFixture, EvaluateProducesReportAndCsv) {
  const std::string corpus = dir_ + "/eval_corpus";
  const std::string spec = dir_ + "/eval_spec.json";
  std::ofstream(spec) << R"({"pairs": 2, "points": 1500, "seed": 9,
                             "source": {"density_keep": 0.5, "noise_sigma": 0.005,
                                        "overlap": 0.85},
                             "max_rotation_deg": 25.0})";
  ASSERT_EQ(run("synth " + spec + " --out " + corpus), 0);

  const std::string report = dir_ + "/report.json";
  const std::string csv = dir_ + "/report.csv";
  std::string output;
  EXPECT_EQ(run("evaluate " + corpus + " --repeats 1 --out " + report + " --csv " + csv,
                &output),
            0);
  EXPECT_NE(output.find("recall"), std::string::npos);

  const auto j = read_json(report);
  EXPECT_TRUE(j.contains("recall"));
  EXPECT_EQ(j["records"].size(), 2u);

  // Hand-recount the CSV against the reported recall.
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  int rows = 0, recalled = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    if (line.back() == '1') ++recalled;
  }
  EXPECT_EQ(rows, 2);
  EXPECT_DOUBLE_EQ(j["recall"].get<double>(),
                   static_cast<double>(recalled) / static_cast<double>(rows));
}

TEST_F(CliFixture, EvaluateIsDeterministicWithFixedSeed) {
  const std::string corpus = dir_ + "/det_corpus";
  const std::string spec = dir_ + "/det_spec.json";
  std::ofstream(spec) << R"({"pairs": 2, "points": 1200, "seed": 13,
                             "source": {"density_keep": 0.6, "noise_sigma": 0.004}})";
  ASSERT_EQ(run("synth " + spec + " --out " + corpus), 0);

  const std::string r1 = dir_ + "/det1.json", r2 = dir_ + "/det2.json";
  ASSERT_EQ(run("evaluate " + corpus + " --repeats 1 --seed 99 --out " + r1), 0);
  ASSERT_EQ(run("evaluate " + corpus + " --repeats 1 --seed 99 --out " + r2), 0);
  auto a = read_json(r1), b = read_json(r2);
  strip_timing(a);
  strip_timing(b);
  EXPECT_EQ(a.dump(), b.dump());
}

TEST_F(CliFixture, AblateEmitsThreeRows) {
  const std::string corpus = dir_ + "/abl_corpus";
  const std::string spec = dir_ + "/abl_spec.json";
  std::ofstream(spec) << R"({"pairs": 2, "points": 1500, "seed": 17,
                             "source": {"density_keep": 0.5, "noise_sigma": 0.006,
                                        "overlap": 0.8}})";
  ASSERT_EQ(run("synth " + spec + " --out " + corpus), 0);

  const std::string report = dir_ + "/ablation.json";
  std::string output;
  EXPECT_EQ(run("ablate " + corpus + " --out " + report, &output), 0);
  EXPECT_NE(output.find("ff+logo"), std::string::npos);
  const auto j = read_json(report);
  ASSERT_EQ(j["rows"].size(), 3u);
  EXPECT_EQ(j["rows"][0]["mode"], "ff");
  EXPECT_EQ(j["rows"][2]["mode"], "ff+logo");
}

TEST_F(CliFixture, EmptyCorpusIsAnError) {
  const std::string empty = dir_ + "/empty_corpus";
  fs::create_directories(empty);
  std::string output;
  EXPECT_NE(run("evaluate " + empty, &output), 0);
}
