#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <fstream>

#include "cherry/dataset.hpp"
#include "cherry/detect.hpp"
#include "cherry/error.hpp"
#include "fixture_run.hpp"

using namespace cherry;

namespace {

int run_cli(const std::string& args) {
  const int status = std::system((std::string(CHERRY_BINARY) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("a stage without its inputs names the missing file") {
  testing::TempDir dir;
  RunConfig c = testing::fixture_config(dir.path());
  try {
    run_stage("segment", c);
    FAIL("expected a prerequisite error");
  } catch (const PrerequisiteError& e) {
    CHECK(std::string(e.what()).find("articles.jsonl") != std::string::npos);
    CHECK(exit_code_for(e) == 3);
  }
  run_stage("ingest", c);
  try {
    run_stage("cluster-statements", c);
    FAIL("expected a prerequisite error");
  } catch (const PrerequisiteError& e) {
    CHECK(std::string(e.what()).find("statements.jsonl") != std::string::npos);
  }
  CHECK_THROWS_AS(run_stage("correlate", c), PrerequisiteError);
  CHECK_THROWS_AS(run_stage("evaluate", c), PrerequisiteError);
}

TEST_CASE("configuration errors are reported together") {
  testing::TempDir dir;
  RunConfig c = testing::fixture_config(dir.path());
  c.scorer = "oracle";
  c.presence_threshold = 1.5;
  c.decision_threshold = -0.1;
  c.label_config = 9;
  c.train_ratio = 1.0;
  const auto violations = c.validate("detect");
  CHECK(violations.size() >= 5);
  try {
    run_stage("detect", c);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    for (const auto& v : violations) CHECK(msg.find(v) != std::string::npos);
    CHECK(exit_code_for(e) == 2);
  }
  CHECK_FALSE(c.validate("no-such-stage").empty());
  CHECK(exit_code_for(IoError("disk")) == 4);
  CHECK(exit_code_for(std::runtime_error("x")) == 4);
}

TEST_CASE("fixture from raw records to outlet scores") {
  testing::TempDir dir;
  const RunConfig c = testing::fixture_config(dir.path());
  const auto ingest = run_stage("ingest", c);
  CHECK(ingest.counts["fetched"] == 13);
  CHECK(ingest.counts["articles"] == 12);
  CHECK(ingest.counts["opinion_or_editorial"] == 1);
  CHECK(run_stage("segment", c).counts["statements"] == 55);
  CHECK(run_stage("cluster-events", c).counts["events"] == 3);
  run_stage("cluster-statements", c);
  const auto detect = run_stage("detect", c);
  CHECK(detect.counts["reported"] == 3);
  CHECK(detect.counts["cherry_picked"] == 13);
  CHECK(detect.counts["scoring_failures"] == 0);
  CHECK_FALSE(std::filesystem::exists(dir / kLockFile));

  const auto expected = testing::expected_texts();
  const auto got = testing::flagged_texts(dir.path());
  for (const auto& [key, texts] : expected) {
    INFO(key.first << " / " << key.second);
    REQUIRE(got.count(key));
    CHECK(got.at(key) == texts);
  }
  CHECK(got.size() == expected.size());

  std::map<std::string, double> mean;
  for (const auto& row : detect.output["outlet_scores"]) mean[row["outlet_id"]] = row["mean"].get<double>();
  CHECK(mean["center1"] == doctest::Approx(0.0));
  CHECK(mean["left1"] == doctest::Approx(1.0));
  CHECK(mean["leftcenter1"] == doctest::Approx(2.0 / 3.0));
  CHECK(mean["right1"] == doctest::Approx(8.0 / 3.0));

  SUBCASE("correlate against the fixture ratings") {
    RunConfig cc = c;
    cc.ratings = testing::fixture_dir() / "ratings.csv";
    const auto r = run_stage("correlate", cc);
    CHECK(r.counts["sources"] == 2);
    const auto headers = r.output["correlation"]["headers"].get<std::vector<std::string>>();
    CHECK(headers == std::vector<std::string>{"Bias score source", "r", "P-value"});
    // outlet order center1, left1, leftcenter1, right1
    const auto want = spearman(std::vector<double>{0.0, 1.0, 2.0 / 3.0, 8.0 / 3.0}, std::vector<double>{0, -2, -1, 2});
    const auto row = r.output["correlation"]["rows"][0].get<std::vector<std::string>>();
    CHECK(std::stod(row[1]) == doctest::Approx(want.r).epsilon(0.01));
  }

  SUBCASE("re-running an upstream stage invalidates downstream ones") {
    run_stage("segment", c);
    CHECK_THROWS_AS(run_stage("detect", c), PrerequisiteError);
    CHECK_THROWS_AS(run_stage("correlate", c), PrerequisiteError);
  }

  SUBCASE("dataset, evaluation and sweep") {
    RunConfig dc = c;
    dc.votes = dir / "votes.jsonl";
    testing::write_fixture_votes(dir.path(), *dc.votes);
    const auto built = run_stage("build-dataset", dc);
    const auto rows = parse_dataset_jsonl(read_file(dc.dataset_path()));
    REQUIRE_FALSE(rows.empty());
    CHECK(built.counts["train"].get<std::size_t>() + built.counts["test"].get<std::size_t>() == rows.size());
    std::map<std::string, std::set<std::string>> splits_of_event;
    for (const auto& r : rows) splits_of_event[r.event_id].insert(r.split);
    for (const auto& [event, splits] : splits_of_event) CHECK(splits.size() == 1);

    // Perfect predictions, then all class 1.
    dc.eval_split = "all";
    dc.predictions = dir / "pred.jsonl";
    {
      std::ofstream out(*dc.predictions);
      for (const auto& r : rows) out << json{{"example_id", r.example_id}, {"class", r.cls}}.dump() << "\n";
    }
    auto eval = run_stage("evaluate", dc);
    CHECK(eval.output["metrics"]["accuracy"] == doctest::Approx(1.0));
    CHECK(eval.output["metrics"]["macro_f1"] == doctest::Approx(1.0));
    std::size_t ones = 0;
    {
      std::ofstream out(*dc.predictions);
      for (const auto& r : rows) {
        out << json{{"example_id", r.example_id}, {"class", 1}}.dump() << "\n";
        ones += r.cls == 1 ? 1 : 0;
      }
    }
    eval = run_stage("evaluate", dc);
    CHECK(eval.output["metrics"]["accuracy"] ==
          doctest::Approx(static_cast<double>(ones) / static_cast<double>(rows.size())));

    // The lookup scorer knows every planted fact.
    dc.predictions.reset();
    eval = run_stage("evaluate", dc);
    CHECK(eval.output["source"] == "lookup");
    CHECK(eval.counts["examples"] == rows.size());

    dc.sweep_lengths = {50, 100};
    dc.sweep_scorers = {"lexrank", "lookup"};
    const auto first = run_stage("sweep-context", dc);
    const auto second = run_stage("sweep-context", dc);
    CHECK(first.counts["cells"] == 4);
    CHECK(first.output.dump() == second.output.dump());
    CHECK(first.counts["failed_cells"] == 0);
  }
}

TEST_CASE("a held lock blocks a second run") {
  testing::TempDir dir;
  const RunConfig c = testing::fixture_config(dir.path());
  {
    const CorpusLock lock(dir.path());
    CHECK(std::filesystem::exists(dir / kLockFile));
    CHECK_THROWS_AS(run_stage("ingest", c), ConflictError);
  }
  CHECK_FALSE(std::filesystem::exists(dir / kLockFile));
  // A lock left by a dead process is taken over.
  std::ofstream(dir / kLockFile) << "999999999\n";
  CHECK_NOTHROW(run_stage("ingest", c));
}

TEST_CASE("command line exit codes") {
  testing::TempDir dir;
  const std::string corpus = " --corpus " + dir.path().string();
  const std::string fixture = testing::fixture_dir().string();
  CHECK(run_cli("segment" + corpus) == 3);
  CHECK(run_cli("detect" + corpus + " --scorer bogus") == 2);
  CHECK(run_cli("no-such-stage" + corpus) == 2);
  CHECK(run_cli("detect" + corpus + " --presence-threshold abc") == 2);
  CHECK(run_cli("--help") == 0);
  std::ofstream(dir / "run.toml") << "corpus = \"" << dir.path().string() << "\"\npresence-threshold = 3\n";
  CHECK(run_cli("detect --config " + (dir / "run.toml").string()) == 2);
  CHECK(run_cli("ingest" + corpus + " --registry " + fixture + "/registry.json --source " + fixture + "/raw") == 0);
  CHECK(run_cli("segment --json" + corpus) == 0);
  CHECK(std::filesystem::exists(dir / "statements.jsonl"));
}
