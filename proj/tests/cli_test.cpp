#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "capforge/cli/commands.hpp"
#include "capforge/fusion.hpp"
#include "support/msrvtt_fixture.hpp"

using namespace capforge;
using namespace capforge::cli;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  fs::path dir;

  void SetUp() override {
    dir = fs::temp_directory_path() / ("capforge_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    write("toy.json", R"({"name":"toy","videos":[
        {"id":"v1","split":"test"},{"id":"v2","split":"test"},{"id":"v3","split":"train"},{"id":"v4","split":"train"}],
      "sentences":[
        {"video_id":"v1","caption":"A man is playing a guitar."},{"video_id":"v1","caption":"someone plays an instrument"},
        {"video_id":"v2","caption":"two dogs run in the snow"},
        {"video_id":"v3","caption":"a chef cuts onions quickly"},{"video_id":"v4","caption":"children swim in a pool"}]})");
    write("identity.jsonl", "{\"video_id\":\"v1\",\"caption\":\"A man is playing a guitar.\"}\n"
                            "{\"video_id\":\"v2\",\"caption\":\"Two dogs run in the snow\"}\n");
    write("partial.jsonl", "{\"video_id\":\"v2\",\"caption\":\"a dog runs in snow\"}\n"
                           "{\"video_id\":\"v1\",\"caption\":\"a man plays guitar\"}\n"
                           "{\"video_id\":\"ghost\",\"caption\":\"nothing\"}\n");
  }
  void TearDown() override { fs::remove_all(dir); }

  fs::path write(const std::string& name, const std::string& text) {
    std::ofstream(dir / name, std::ios::binary) << text;
    return dir / name;
  }

  RunConfig config(Command c) const {
    RunConfig cfg;
    cfg.command = c;
    cfg.dataset = dir / "toy.json";
    cfg.predictions = dir / "identity.jsonl";
    return cfg;
  }

  struct Result {
    int code;
    std::string out, err;
  };

  static Result run(const RunConfig& cfg, const std::string& input = "") {
    std::istringstream in(input);
    std::ostringstream out, err;
    const int code = execute(cfg, in, out, err);
    return {code, out.str(), err.str()};
  }
};

int shell(const std::string& cmd, std::string* out = nullptr) {
  FILE* p = ::popen(cmd.c_str(), "r");
  std::string buf;
  char chunk[4096];
  std::size_t n;
  while ((n = std::fread(chunk, 1, sizeof chunk, p)) > 0) buf.append(chunk, n);
  const int status = ::pclose(p);
  if (out) *out = buf;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(TableRow, LeaderboardFormatting) { EXPECT_EQ(format_table_row(0.795, 0.342, 0.683, 0.524), "79.5  34.2  68.3  52.4"); }

TEST(GroupThousands, Examples) {
  EXPECT_EQ(group_thousands(0), "0");
  EXPECT_EQ(group_thousands(497), "497");
  EXPECT_EQ(group_thousands(6513), "6,513");
  EXPECT_EQ(group_thousands(1234567), "1,234,567");
}

TEST_F(CliTest, EvaluateIdentityShowsHundred) {
  const auto r = run(config(Command::kEvaluate));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream lines(r.out);
  std::string meta, header, row;
  std::getline(lines, meta);
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(header.substr(0, 2), "C.");
  std::istringstream cells(row);
  std::string c, m, rl, b4;
  cells >> c >> m >> rl >> b4;
  EXPECT_EQ(rl, "100.0");
  EXPECT_EQ(b4, "100.0");
  EXPECT_NE(r.out.find("meteor_lite"), std::string::npos);
}

TEST_F(CliTest, JsonAndTextCarrySameNumbers) {
  auto cfg = config(Command::kEvaluate);
  cfg.predictions = dir / "partial.jsonl";
  const auto text = run(cfg);
  cfg.format = OutputFormat::kJson;
  const auto json = run(cfg);
  ASSERT_EQ(json.code, kExitOk);
  const auto doc = nlohmann::json::parse(json.out);
  const auto& c = doc["corpus"];
  const std::string row = format_table_row(c["cider"], c["meteor_lite"], c["rouge_l"], c["bleu4"]);
  std::istringstream want(row), got(text.out.substr(text.out.find('\n', text.out.find("B4.")) + 1));
  for (int i = 0; i < 4; ++i) {
    std::string a, b;
    want >> a;
    got >> b;
    EXPECT_EQ(a, b);
  }
  EXPECT_EQ(doc["n_items"], 2);
  EXPECT_EQ(doc["extra"], 1);
  EXPECT_NE(json.err.find("ghost"), std::string::npos);
}

TEST_F(CliTest, CsvHasItemsAndCorpusRow) {
  auto cfg = config(Command::kEvaluate);
  cfg.format = OutputFormat::kCsv;
  const auto r = run(cfg);
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "video_id,cider,bleu4,rouge_l,meteor_lite");
  EXPECT_NE(r.out.find("\nv1,"), std::string::npos);
  EXPECT_NE(r.out.find("\n__corpus__,"), std::string::npos);
}

TEST_F(CliTest, BootstrapIsSeededAndEchoed) {
  auto cfg = config(Command::kEvaluate);
  cfg.predictions = dir / "partial.jsonl";
  cfg.format = OutputFormat::kJson;
  cfg.bootstrap_samples = 200;
  cfg.seed = 99;
  const auto a = run(cfg), b = run(cfg);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.err.find("seed: 99"), std::string::npos);
  const auto doc = nlohmann::json::parse(a.out);
  EXPECT_EQ(doc["bootstrap"]["seed"], 99);
  EXPECT_LE(doc["bootstrap"]["cider"][0].get<double>(), doc["bootstrap"]["cider"][1].get<double>());
  cfg.bootstrap_samples = 0;
  EXPECT_FALSE(nlohmann::json::parse(run(cfg).out).contains("bootstrap"));
}

TEST_F(CliTest, ExitCodes) {
  auto cfg = config(Command::kEvaluate);
  cfg.predictions = dir / "missing.jsonl";
  EXPECT_EQ(run(cfg).code, kExitInput);
  cfg.predictions = write("bad.jsonl", "{\"video_id\":\"v1\"\n");
  EXPECT_EQ(run(cfg).code, kExitInput);
  cfg.predictions = dir / "identity.jsonl";
  cfg.split = "train";
  EXPECT_EQ(run(cfg).code, kExitAlignment);
  cfg.split = "nosuch";
  EXPECT_EQ(run(cfg).code, kExitAlignment);
  cfg = config(Command::kEvaluate);
  cfg.dataset.clear();
  EXPECT_EQ(run(cfg).code, kExitInput);
}

TEST_F(CliTest, RewardStreamEmptyInput) {
  auto cfg = config(Command::kRewardStream);
  const auto r = run(cfg, "");
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out, "");
  EXPECT_NE(r.err.find("served 0 requests"), std::string::npos) << r.err;
}

TEST_F(CliTest, RewardStreamIdentityRewardIsTen) {
  write("two.json", R"({"videos":[{"id":"a","split":"train"},{"id":"b","split":"train"}],
    "sentences":[{"video_id":"a","caption":"a man plays the guitar"},{"video_id":"b","caption":"two dogs run in snow"}]})");
  auto cfg = config(Command::kRewardStream);
  cfg.dataset = dir / "two.json";
  const auto r = run(cfg, R"({"video_id":"a","greedy":"a man","samples":["a man plays the guitar"],"refs":["a man plays the guitar"]})"
                          "\n");
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_NEAR(doc["rewards"][0].get<double>(), 10.0, 1e-12);
  EXPECT_EQ(doc["advantages"][0].get<double>(), doc["rewards"][0].get<double>() - doc["greedy_reward"].get<double>());
}

TEST_F(CliTest, RewardStreamReplayIsIdentical) {
  std::string input;
  for (int i = 0; i < 100; ++i)
    input += R"({"video_id":"v)" + std::to_string(i % 4 + 1) + R"(","greedy":"a man plays","samples":["a chef cuts onions", "children swim )" +
             std::to_string(i) + R"("]})" + "\n";
  auto cfg = config(Command::kRewardStream);
  const auto a = run(cfg, input), b = run(cfg, input);
  EXPECT_EQ(a.code, kExitOk);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 100);
}

TEST_F(CliTest, StatsSidecarFeedsRewardStream) {
  auto stats_cfg = config(Command::kStats);
  stats_cfg.output = dir / "stats.json";
  ASSERT_EQ(run(stats_cfg).code, kExitOk);
  const std::string input = R"({"video_id":"v3","greedy":"a chef","samples":["a chef cuts onions quickly","swim"]})" "\n";
  auto from_dataset = config(Command::kRewardStream);
  auto from_sidecar = config(Command::kRewardStream);
  from_sidecar.stats = dir / "stats.json";
  const auto a = run(from_dataset, input), b = run(from_sidecar, input);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(b.err.find("loaded stats"), std::string::npos);
}

TEST_F(CliTest, RewardStreamMetricSwitch) {
  auto cfg = config(Command::kRewardStream);
  cfg.reward_metric = RewardMetric::kBleu4Smoothed;
  const auto r = run(cfg, R"({"video_id":"v3","greedy":"x","samples":["a chef cuts onions quickly"]})" "\n");
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_DOUBLE_EQ(doc["rewards"][0].get<double>(), 1.0);
}

TEST_F(CliTest, ValidateMsrVtt) {
  write("msrvtt.json", fixture::msrvtt_json());
  auto cfg = config(Command::kValidateData);
  cfg.dataset = dir / "msrvtt.json";
  cfg.profile = AnnotationProfile::kMsrVtt;
  const auto r = run(cfg);
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("train/val/test: 6,513/497/2,990"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("captions per video: 20 x 10,000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("splits disjoint: yes"), std::string::npos);
}

TEST_F(CliTest, ValidateListsVideoWithoutCaptions) {
  auto cfg = config(Command::kValidateData);
  cfg.dataset = write("empty_video.json", R"({"videos":[{"id":"v1","split":"test"},{"id":"silent","split":"test"}],
    "sentences":[{"video_id":"v1","caption":"hello there"}]})");
  const auto r = run(cfg);
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.out.find("error: silent"), std::string::npos) << r.out;
  cfg.format = OutputFormat::kJson;
  const auto doc = nlohmann::json::parse(run(cfg).out);
  EXPECT_FALSE(doc["ok"].get<bool>());
  EXPECT_EQ(doc["issues"][0]["subject"], "silent");
}

TEST_F(CliTest, FuseTokenCounts) {
  auto cfg = config(Command::kFuse);
  cfg.height = 224;
  cfg.width = 224;
  cfg.frames = 8;
  const auto r = run(cfg);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("visual tokens per frame: 256"), std::string::npos);
  EXPECT_NE(r.out.find("concat length: 2048"), std::string::npos);
  EXPECT_NE(r.out.find("average length: 256"), std::string::npos);
  cfg.height = 225;
  EXPECT_EQ(run(cfg).code, kExitInput);
}

TEST_F(CliTest, FuseTensorFiles) {
  const FrameTokenBlock block(2, 3, 2, {1, 2, 3, 4, 5, 6, 3, 4, 5, 6, 7, 8});
  write_tensor_file(dir / "in.bin", block);
  auto cfg = config(Command::kFuse);
  cfg.input = dir / "in.bin";
  cfg.output = dir / "avg.bin";
  cfg.fusion_mode = FusionMode::kAverage;
  ASSERT_EQ(run(cfg).code, kExitOk);
  const auto avg = read_tensor_file(dir / "avg.bin");
  EXPECT_EQ(avg.tokens_per_frame(), 3u);
  EXPECT_EQ(std::vector<double>(avg.values().begin(), avg.values().end()), (std::vector<double>{2, 3, 4, 5, 6, 7}));
  cfg.output = dir / "cat.bin";
  cfg.fusion_mode = FusionMode::kConcat;
  ASSERT_EQ(run(cfg).code, kExitOk);
  EXPECT_EQ(read_tensor_file(dir / "cat.bin").tokens_per_frame(), 6u);
  write("junk.bin", "xyz");
  cfg.input = dir / "junk.bin";
  EXPECT_EQ(run(cfg).code, kExitInput);
}

TEST_F(CliTest, BinaryEndToEnd) {
  const std::string bin = CAPFORGE_BINARY;
  const std::string ds = (dir / "toy.json").string();
  std::string out;
  EXPECT_EQ(shell(bin + " evaluate --dataset " + ds + " --predictions " + (dir / "identity.jsonl").string() + " --format json --workers 3 2>/dev/null", &out), 0);
  EXPECT_EQ(nlohmann::json::parse(out)["corpus"]["rouge_l"].get<double>(), 1.0);
  EXPECT_EQ(shell(bin + " evaluate --dataset " + ds + " --predictions " + (dir / "identity.jsonl").string() + " --split train 2>/dev/null"), 3);
  EXPECT_EQ(shell(bin + " evaluate --dataset " + ds + " --predictions /nonexistent.jsonl 2>/dev/null"), 2);
  EXPECT_EQ(shell(bin + " evaluate --no-such-flag 2>/dev/null"), 2);
  EXPECT_EQ(shell(bin + " evaluate --dataset " + ds + " --predictions x --format yaml 2>/dev/null"), 2);
  EXPECT_EQ(shell(bin + " 2>/dev/null"), 2);
  EXPECT_EQ(shell("printf '' | " + bin + " reward-stream --dataset " + ds + " 2>/dev/null", &out), 0);
  EXPECT_EQ(out, "");
  EXPECT_EQ(shell("CAPFORGE_WORKERS=2 " + bin + " evaluate --dataset " + ds + " --predictions " + (dir / "identity.jsonl").string() +
                  " --format csv 2>/dev/null", &out), 0);
  EXPECT_NE(out.find("__corpus__"), std::string::npos);
  EXPECT_EQ(shell(bin + " fuse --height 364 --width 364", &out), 0);
  EXPECT_NE(out.find("676"), std::string::npos);
}
