#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cherry/util.hpp"

namespace cherry {

enum class BiasCategory { kLeft, kLeftCenter, kCenter, kRightCenter, kRight };
enum class Rater { kMbfc, kAllSides, kAdFontes };
enum class ArticleKind { kNews, kOpinion, kEditorial };

// Left..Right map onto -2..+2. Only the order matters downstream.
int bias_ordinal(BiasCategory category);
BiasCategory bias_from_ordinal(int ordinal);
std::string_view to_string(BiasCategory category);
std::string_view to_string(Rater rater);
std::string_view to_string(ArticleKind kind);
BiasCategory parse_bias_category(std::string_view text);
Rater parse_rater(std::string_view text);
ArticleKind parse_article_kind(std::string_view text);

struct TimeWindow {
  Timestamp start;
  Timestamp end;

  bool contains(Timestamp t) const { return start <= t && t <= end; }
  bool operator==(const TimeWindow&) const = default;
};

struct Outlet {
  std::string id;
  std::string name;
  std::string domain;
  // Band used when grouping outlets; usually the raters' consensus.
  BiasCategory bias_category = BiasCategory::kCenter;
  std::map<Rater, int> bias_ratings;

  bool operator==(const Outlet&) const = default;
};

struct Article {
  std::string id;
  std::string outlet_id;
  std::string url;
  std::string headline;
  std::string body;
  Timestamp published_at;
  ArticleKind kind = ArticleKind::kNews;

  bool operator==(const Article&) const = default;
};

struct Statement {
  std::string id;
  std::string article_id;
  std::size_t ordinal = 0;
  std::string text;
  std::size_t word_count = 0;

  bool operator==(const Statement&) const = default;
};

struct Event {
  std::string id;
  std::string title;
  std::vector<std::string> article_ids;  // sorted, unique
  TimeWindow window;

  bool operator==(const Event&) const = default;
};

struct StatementCluster {
  std::string id;
  std::string event_id;
  std::vector<std::string> statement_ids;  // sorted, unique
  std::string representative_id;
  bool singleton_noise = false;

  bool operator==(const StatementCluster&) const = default;
};

struct Corpus {
  std::vector<Outlet> outlets;
  std::vector<Article> articles;
  std::vector<Statement> statements;
  std::vector<Event> events;
  std::vector<StatementCluster> clusters;

  bool operator==(const Corpus&) const = default;
};

inline constexpr std::size_t kMinEventSize = 2;

std::string make_article_id(std::string_view outlet_id, std::string_view url);
std::string make_statement_id(std::string_view article_id, std::size_t ordinal);
std::string make_event_id(const std::vector<std::string>& sorted_article_ids);

// Read-only lookup tables over a corpus. The corpus must outlive the index.
class CorpusIndex {
 public:
  explicit CorpusIndex(const Corpus& corpus);

  const Corpus& corpus() const { return corpus_; }
  const Outlet* outlet(std::string_view id) const;
  const Article* article(std::string_view id) const;
  const Statement* statement(std::string_view id) const;
  const Event* event(std::string_view id) const;
  const StatementCluster* cluster(std::string_view id) const;
  const Outlet* outlet_of(const Article& article) const;
  // Statements of one article in ordinal order.
  std::vector<const Statement*> statements_of(std::string_view article_id) const;
  std::vector<const StatementCluster*> clusters_of(std::string_view event_id) const;

 private:
  const Corpus& corpus_;
  std::unordered_map<std::string_view, std::size_t> outlets_;
  std::unordered_map<std::string_view, std::size_t> articles_;
  std::unordered_map<std::string_view, std::size_t> statements_;
  std::unordered_map<std::string_view, std::size_t> events_;
  std::unordered_map<std::string_view, std::size_t> clusters_;
  std::unordered_map<std::string_view, std::vector<std::size_t>> by_article_;
  std::unordered_map<std::string_view, std::vector<std::size_t>> by_event_;
};

struct UniversalStatementSet {
  std::string event_id;
  std::vector<std::string> statement_ids;
};

// All statements of all member articles: articles in event order, each in
// ordinal order, duplicates by id removed.
UniversalStatementSet universal_statement_set(const CorpusIndex& index, const Event& event);

struct Violation {
  std::string record_id;
  std::string message;

  bool operator==(const Violation&) const = default;
};

struct ValidationOptions {
  std::optional<TimeWindow> collection_window;
};

std::vector<Violation> validate_corpus(const Corpus& corpus, const ValidationOptions& options = {});

struct Manifest {
  int schema_version = 1;
  std::map<std::string, std::size_t> counts;
  std::string sha256;
  std::vector<std::string> stages;

  bool operator==(const Manifest&) const = default;
};

inline constexpr int kSchemaVersion = 1;

// One JSONL file per record type plus manifest.json. Stages already run
// over the directory are recorded in the manifest.
Manifest save_corpus(const Corpus& corpus, const std::filesystem::path& dir,
                     const std::vector<std::string>& stages = {});
Corpus load_corpus(const std::filesystem::path& dir);
Manifest read_manifest(const std::filesystem::path& dir);

}  // namespace cherry
