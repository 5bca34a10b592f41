#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cherry/cluster.hpp"
#include "cherry/detect.hpp"
#include "cherry/json_io.hpp"
#include "cherry/scoring.hpp"

namespace cherry {

struct RunConfig {
  std::filesystem::path corpus_dir;

  // ingest
  std::optional<std::filesystem::path> registry;
  std::string provider = "local_directory";
  std::string source;
  std::optional<std::string> from;
  std::optional<std::string> to;  // a bare date includes the whole day
  double rate_limit = 5.0;
  int fetch_attempts = 3;

  // segment / cluster
  std::optional<std::filesystem::path> abbreviations;
  std::string embedding = "hashed-ngram";
  std::size_t embedding_dimension = 256;
  std::string embedding_url;
  DbscanParams article_dbscan = kArticleDbscan;
  DbscanParams statement_dbscan = kStatementDbscan;
  std::optional<std::filesystem::path> event_allow_list;

  // build-dataset
  std::optional<std::filesystem::path> votes;
  std::optional<std::filesystem::path> dataset;  // defaults to <corpus>/dataset.jsonl
  int label_config = 1;
  std::size_t min_annotators = 3;
  double min_agreement = 0.75;
  double train_ratio = 0.85;
  std::uint64_t split_seed = 13;

  // scoring
  std::string scorer = "lexrank";  // lexrank | remote | prompt | lookup
  double decision_threshold = kDefaultDecisionThreshold;
  LexRankParams lexrank;
  std::string classifier_url;
  std::string chat_url;
  std::optional<std::filesystem::path> lookup;
  std::optional<std::filesystem::path> prompt_template;
  std::optional<std::filesystem::path> demonstrations;
  std::size_t demonstration_count = 4;
  std::uint64_t demonstration_seed = 7;
  int remote_timeout_ms = 10000;
  std::size_t max_in_flight = 4;

  // detect
  ContextSpec context;
  double presence_threshold = kDefaultPresenceThreshold;

  // evaluate / sweep / correlate
  std::optional<std::filesystem::path> predictions;
  std::string eval_split = "test";  // test | train | all
  std::vector<std::size_t> sweep_lengths = {100, 200, 300, 400, 500};
  std::vector<std::string> sweep_scorers;  // empty means {scorer}
  std::optional<std::filesystem::path> ratings;

  // serve-annotator
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> roster;
  std::optional<std::filesystem::path> static_dir;
  std::optional<std::filesystem::path> vote_log;  // defaults to <corpus>/votes.jsonl

  // Every violation, not just the first; empty when valid.
  std::vector<std::string> validate(std::string_view stage) const;
  json to_json() const;

  std::filesystem::path dataset_path() const;
  std::filesystem::path vote_log_path() const;
};

inline constexpr const char* kStages[] = {"ingest",  "segment",  "cluster-events", "cluster-statements",
                                          "build-dataset", "dataset-stats", "detect", "evaluate",
                                          "correlate", "sweep-context", "serve-annotator"};

bool is_stage(std::string_view name);

struct StageReport {
  std::string stage;
  json counts = json::object();
  json output = json::object();
  long long duration_ms = 0;
  json parameters = json::object();

  json to_json() const;
};

// Runs one stage over config.corpus_dir. serve-annotator is handled by the
// CLI since it blocks. Throws ValidationError listing every violation,
// PrerequisiteError naming the missing input, or any runtime error.
StageReport run_stage(std::string_view stage, const RunConfig& config);

// Throws PrerequisiteError naming the file a missing earlier stage produces.
void check_stage_prerequisites(std::string_view stage, const RunConfig& config);

// Exit status for an exception escaping run_stage: 2 validation,
// 3 prerequisite, 4 anything else.
int exit_code_for(const std::exception& error);

struct ScorerBundle {
  std::unique_ptr<ChatClient> chat;
  std::unique_ptr<ImportanceScorer> scorer;
};

ScorerBundle make_scorer(std::string_view kind, const RunConfig& config);

// Held for the duration of a stage; a second pipeline on the same corpus
// directory fails with ConflictError. Locks left by dead processes are taken over.
class CorpusLock {
 public:
  explicit CorpusLock(const std::filesystem::path& corpus_dir);
  ~CorpusLock();
  CorpusLock(const CorpusLock&) = delete;
  CorpusLock& operator=(const CorpusLock&) = delete;

 private:
  std::filesystem::path path_;
};

inline constexpr const char* kLockFile = ".cherry.lock";
inline constexpr const char* kReportsFile = "reports.jsonl";

}  // namespace cherry
