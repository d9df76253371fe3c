#include <spn/cli.hpp>

#include "test_util.hpp"

#include <gtest/gtest.h>

namespace spn::cli {
namespace {

namespace fs = std::filesystem;

struct Invocation {
  int code = -1;
  std::string out;
  std::string err;
  json echo;
  json result;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "spn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Invocation r;
  r.code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  if (r.code == kOk && r.out.find("\"command\"") != std::string::npos) {
    std::istringstream in(r.out);
    in >> r.echo >> r.result;
  }
  return r;
}

std::size_t count_files(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ext;
  return n;
}

/// A tiny simulated dataset shared by the tests below.
const fs::path& tiny_dataset() {
  static const fs::path dir = [] {
    const fs::path d = test::scratch_dir("cli_tiny");
    const auto r = invoke({"simulate", "--out", d.string(), "--participants", "8", "--per-class", "1", "--seed", "4"});
    EXPECT_EQ(r.code, kOk) << r.err;
    return d;
  }();
  return dir;
}

std::string tiny_manifest() { return (tiny_dataset() / "manifest.json").string(); }

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, kUsage);
  EXPECT_EQ(invoke({"simulate", "--out", "x", "--bogus"}).code, kUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, kUsage);
  EXPECT_EQ(invoke({"simulate"}).code, kUsage);
  EXPECT_EQ(invoke({"eval", "--manifest", tiny_manifest(), "--out", "r.json", "--methods", "spn+x"}).code, kUsage);
}

TEST(Cli, HelpExitsCleanly) {
  const auto r = invoke({"--help"});
  EXPECT_EQ(r.code, kOk);
  EXPECT_NE(r.out.find("simulate"), std::string::npos);
}

TEST(Cli, SimulateDefaultCorpus) {
  const fs::path d = test::scratch_dir("cli_sim520");
  const auto r = invoke({"simulate", "--out", d.string()});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(count_files(d, ".uwbf"), 520u);
  EXPECT_EQ(r.result["result"]["files"], 520);
  const auto m = load_manifest(d / "manifest.json");
  EXPECT_EQ(m.entries.size(), 520u);
  EXPECT_EQ(r.echo["command"], "simulate");
  EXPECT_EQ(r.echo["config"]["participants"], "26");
}

TEST(Cli, SimulateDistractorAddsSession) {
  const fs::path d = test::scratch_dir("cli_sim_two");
  const auto r = invoke({"simulate", "--out", d.string(), "--participants", "2", "--per-class", "1", "--distractor"});
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto m = load_manifest(d / "manifest.json");
  ASSERT_EQ(m.entries.size(), 16u);
  EXPECT_EQ(m.entries.back().session, 2);
  EXPECT_EQ(r.echo["config"]["distractor"], true);
}

TEST(Cli, DataErrorsExitTwo) {
  const fs::path d = test::scratch_dir("cli_bad");
  spn::detail::write_file(d / "manifest.json", "{\"entries\": [ {\"file\": \"nope.uwbf\"");
  EXPECT_EQ(invoke({"featurize", "--manifest", (d / "manifest.json").string(), "--out", d.string()}).code, kDataError);
  EXPECT_EQ(invoke({"featurize", "--manifest", (d / "absent.json").string(), "--out", d.string()}).code, kDataError);
  EXPECT_EQ(invoke({"report", "--report", (d / "manifest.json").string()}).code, kDataError);
}

TEST(Cli, Featurize) {
  const fs::path out = test::scratch_dir("cli_feat");
  const auto r = invoke({"featurize", "--manifest", tiny_manifest(), "--out", out.string(), "--ws", "30"});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(count_files(out, ".csv"), 2u * 32u + 1u);
  const std::string windows = spn::detail::read_file(out / "windows.csv");
  EXPECT_EQ(std::count(windows.begin(), windows.end(), '\n'), 33);
  const std::string td = spn::detail::read_file(out / "0000_p00_SUSI_s1_td.csv");
  EXPECT_EQ(std::count(td.begin(), td.end(), '\n'), 30);
  EXPECT_EQ(std::count(td.begin(), td.begin() + static_cast<std::ptrdiff_t>(td.find('\n')), ','), 158);
  const std::string tf = spn::detail::read_file(out / "0000_p00_SUSI_s1_wrtft.csv");
  EXPECT_EQ(std::count(tf.begin(), tf.end(), '\n'), 33);
}

TEST(Cli, AugmentPreview) {
  const fs::path out = test::scratch_dir("cli_aug");
  const auto r = invoke({"augment-preview", "--manifest", tiny_manifest(), "--out", out.string(), "--index", "3"});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(r.result["result"]["outputs"], 16);
  EXPECT_EQ(count_files(out, ".csv"), 16u);
  EXPECT_TRUE(fs::exists(out / "TS+RS+TW+MW.csv"));
  EXPECT_EQ(invoke({"augment-preview", "--manifest", tiny_manifest(), "--out", out.string(), "--index", "99"}).code,
            kUsage);
}

TEST(Cli, TrainWritesArtifacts) {
  const fs::path out = test::scratch_dir("cli_train");
  const auto r = invoke({"train", "--manifest", tiny_manifest(), "--out", out.string(), "--arch", "wrtft", "--split",
                         "4,2,2", "--max-epochs", "2", "--aug", "off"});
  ASSERT_EQ(r.code, kOk) << r.err;
  for (const char* f : {"model.spnw", "history.csv", "confusion.csv"}) EXPECT_TRUE(fs::exists(out / f)) << f;
  EXPECT_EQ(r.result["result"]["epochs_run"], 2);
  auto net = nn::load_checkpoint<float>(out / "model.spnw");
  EXPECT_EQ(net.parameter_count(), r.result["result"]["parameters"].get<std::size_t>());
  const std::string hist = spn::detail::read_file(out / "history.csv");
  EXPECT_EQ(std::count(hist.begin(), hist.end(), '\n'), 3);
}

std::vector<std::string> tiny_eval_args(const fs::path& report) {
  return {"eval", "--manifest", tiny_manifest(), "--out", report.string(), "--split", "4,2,2", "--max-splits", "1",
          "--runs", "1", "--max-epochs", "1", "--seed", "21"};
}

TEST(Cli, EvalReportsSixMethods) {
  const fs::path dir = test::scratch_dir("cli_eval");
  auto args = tiny_eval_args(dir / "report.json");
  args.insert(args.end(), {"--csv", (dir / "summary.csv").string(), "--confusion-dir", (dir / "cm").string()});
  const auto r = invoke(args);
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto& rows = r.result["result"]["results"];
  ASSERT_EQ(rows.size(), 6u);
  std::set<std::string> names;
  for (const auto& row : rows) names.insert(row["method"].get<std::string>());
  EXPECT_EQ(names, (std::set<std::string>{"spn+aug", "td+aug", "wrtft+aug", "spn", "td", "wrtft"}));
  EXPECT_EQ(count_files(dir / "cm", ".csv"), 6u);
  const std::string csv = spn::detail::read_file(dir / "summary.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);

  const fs::path again = dir / "again.csv";
  const auto rep = invoke({"report", "--report", (dir / "report.json").string(), "--csv", again.string()});
  ASSERT_EQ(rep.code, kOk) << rep.err;
  EXPECT_EQ(spn::detail::read_file(again), csv);
}

TEST(Cli, ConfigEchoReproducesRun) {
  const fs::path dir = test::scratch_dir("cli_repro");
  auto args = tiny_eval_args(dir / "first.json");
  args.insert(args.end(), {"--methods", "wrtft,td"});
  const auto first = invoke(args);
  ASSERT_EQ(first.code, kOk) << first.err;

  json echo = first.echo;
  echo["config"]["out"] = (dir / "second.json").string();
  spn::detail::write_file(dir / "config.json", echo.dump(2));
  const auto second = invoke({"eval", "--config", (dir / "config.json").string()});
  ASSERT_EQ(second.code, kOk) << second.err;
  EXPECT_EQ(second.echo["config"], echo["config"]);
  EXPECT_EQ(spn::detail::read_file(dir / "first.json"), spn::detail::read_file(dir / "second.json"));
}

TEST(Cli, FlagsAfterConfigOverride) {
  const fs::path dir = test::scratch_dir("cli_override");
  spn::detail::write_file(dir / "config.json", R"({"out": "ignored", "participants": "1", "per-class": "1"})");
  const auto r = invoke({"simulate", "--config", (dir / "config.json").string(), "--per-class", "2", "--out",
                         (dir / "data").string()});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(r.echo["config"]["per-class"], "2");
  EXPECT_EQ(count_files(dir / "data", ".uwbf"), 8u);
}

}  // namespace
}  // namespace spn::cli
