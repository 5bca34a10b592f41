#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cherry/model.hpp"

namespace cherry {

// Annotation labels, numbered as annotators see them.
enum class ImportanceLabel {
  kVeryImportant = 1,
  kKindOfImportant = 2,
  kNotVeryImportant = 3,
  kExcerptsIncorrect = 4,
  kNotSure = 5,
};

inline constexpr std::array<ImportanceLabel, 5> kAllLabels = {
    ImportanceLabel::kVeryImportant, ImportanceLabel::kKindOfImportant, ImportanceLabel::kNotVeryImportant,
    ImportanceLabel::kExcerptsIncorrect, ImportanceLabel::kNotSure};

ImportanceLabel label_from_int(int value);
inline int to_int(ImportanceLabel label) { return static_cast<int>(label); }
// Wording shown to annotators, e.g. "very important".
std::string_view label_wording(ImportanceLabel label);

struct VoteRecord {
  std::string annotator;
  std::string cluster_id;
  std::string event_id;
  std::string context_article_id;
  ImportanceLabel label = ImportanceLabel::kNotSure;
  Timestamp submitted_at;

  bool operator==(const VoteRecord&) const = default;
};

struct AnnotationExample {
  std::string id;
  std::string event_id;
  std::string cluster_id;
  std::string statement_id;
  std::string context_article_id;
  ImportanceLabel label = ImportanceLabel::kNotSure;
  std::map<std::string, ImportanceLabel> votes;  // annotator -> label
  double agreement_ratio = 0.0;

  std::size_t vote_count() const { return votes.size(); }
  bool operator==(const AnnotationExample&) const = default;
};

// One example per (cluster, context article) carrying the majority label
// and agreement ratio (majority count / votes). The cluster's representative
// stands for the cluster. A tie for the majority drops the example. Each
// annotator's last vote per cluster and context wins.
std::vector<AnnotationExample> aggregate_annotations(std::span<const VoteRecord> votes, const CorpusIndex& index);

inline constexpr std::size_t kMinAnnotators = 3;
inline constexpr double kMinAgreement = 0.75;

// Keeps examples with at least min_annotators votes and an agreement ratio
// of at least min_agreement.
std::vector<AnnotationExample> filter_examples(std::vector<AnnotationExample> examples,
                                               std::size_t min_annotators = kMinAnnotators,
                                               double min_agreement = kMinAgreement);

// One example per member statement, all sharing the cluster's label and context.
std::vector<AnnotationExample> cast_labels(const AnnotationExample& cluster_example, const StatementCluster& cluster);

struct ClassificationConfig {
  int id = 1;
  std::map<ImportanceLabel, int> classes;  // labels absent here are excluded
  int class_count = 2;

  std::optional<int> class_of(ImportanceLabel label) const;
  std::vector<ImportanceLabel> labels_of(int cls) const;
};

// The four label groupings:
//   1: {1} | {2,3,4,5}      2: {1} | {2,3}
//   3: {1} | {2,3} | {4,5}  4: {1} | {2} | {3}
ClassificationConfig classification_config(int id);

struct ClassifiedExample {
  AnnotationExample example;
  int cls = 1;
};

std::vector<ClassifiedExample> apply_config(std::span<const AnnotationExample> examples,
                                            const ClassificationConfig& config);

struct DatasetSplit {
  std::vector<std::string> train_events;  // sorted
  std::vector<std::string> test_events;   // sorted
  double ratio = 0.85;
  std::size_t train_examples = 0;
  std::size_t test_examples = 0;

  bool is_train(std::string_view event_id) const;
};

inline constexpr double kDefaultTrainRatio = 0.85;

// Shuffles the events with the seed, then puts the shortest prefix whose
// example count is closest to ratio * total into train. Both sides keep at
// least one event.
DatasetSplit split_by_events(std::span<const ClassifiedExample> dataset, double ratio, std::uint64_t seed);

struct ExportRow {
  std::string example_id;
  std::string statement_id;
  std::string statement_text;
  std::string context_text;
  int label = 0;
  int cls = 0;
  std::string event_id;
  std::string split;  // "train" or "test"
};

std::vector<ExportRow> export_rows(std::span<const ClassifiedExample> dataset, const DatasetSplit& split,
                                   const CorpusIndex& index);
std::string render_jsonl(std::span<const ExportRow> rows);
std::vector<ExportRow> parse_dataset_jsonl(std::string_view text);

// Votes as produced by the annotation service's export.
std::vector<VoteRecord> parse_votes_jsonl(std::string_view text);
std::string render_votes_jsonl(std::span<const VoteRecord> votes);

struct ClassCount {
  std::vector<ImportanceLabel> labels;
  std::size_t count = 0;
  double share = 0.0;  // of the examples the config keeps
};

struct ConfigDistribution {
  int config_id = 1;
  std::vector<ClassCount> classes;
};

std::vector<ConfigDistribution> class_distribution(std::span<const AnnotationExample> examples);

}  // namespace cherry
