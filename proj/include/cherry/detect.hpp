#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cherry/json_io.hpp"
#include "cherry/model.hpp"
#include "cherry/scoring.hpp"
#include "cherry/textproc.hpp"

namespace cherry {

inline constexpr double kDefaultPresenceThreshold = 0.8;
inline constexpr double kDefaultFailureBudget = 0.10;

struct Presence {
  bool present = false;
  double best_similarity = 0.0;
};

Presence check_presence(const HybridVector& statement, std::span<const HybridVector> document, double threshold);

// Identical (whitespace-normalized) text counts as similarity 1 without
// vectorizing. An empty document is absent with similarity 0.
Presence check_presence(std::string_view statement, std::span<const std::string> document, const TfidfModel& tfidf,
                        const EmbeddingProvider& provider, double threshold);

struct CherryPick {
  std::string statement_id;
  std::string text;
  double probability = 0.0;
  double best_similarity = 0.0;

  bool operator==(const CherryPick&) const = default;
};

struct DocumentReport {
  std::string article_id;
  std::string outlet_id;
  std::vector<CherryPick> cherry_picked;  // sorted by statement id

  bool operator==(const DocumentReport&) const = default;
};

struct ScoringFailure {
  std::string statement_id;
  std::string error;

  bool operator==(const ScoringFailure&) const = default;
};

struct CherryReport {
  std::string event_id;
  std::size_t universal_size = 0;
  std::vector<std::string> important;      // I_e, sorted
  std::vector<DocumentReport> documents;   // sorted by article id
  std::vector<ScoringFailure> failures;

  const DocumentReport* document(std::string_view article_id) const;
  bool operator==(const CherryReport&) const = default;
};

struct DetectOptions {
  ContextSpec context;
  double presence_threshold = kDefaultPresenceThreshold;
  double failure_budget = kDefaultFailureBudget;

  void validate() const;
};

// Scores the event's universal statement set against one shared context,
// then lists for every member article the important statements it lacks.
// Statements whose scoring failed count as unimportant; more failures than
// the budget allows abort with ScorerError.
CherryReport detect_cherry_picking(const Event& event, const CorpusIndex& index, const ImportanceScorer& scorer,
                                   const DetectOptions& options, const EmbeddingProvider& provider,
                                   const Summarizer* summarizer = nullptr);

json to_json(const CherryReport& report);
CherryReport cherry_report_from_json(const json& j);

// ---------------------------------------------------------------------------
// Outlet scores

struct OutletScore {
  std::string outlet_id;
  double mean = 0.0;  // mean |c_i| over the outlet's documents
  std::size_t events_covered = 0;
  std::size_t documents = 0;

  bool operator==(const OutletScore&) const = default;
};

// One row per outlet that published in at least one reported event, sorted
// by outlet id. Throws InvalidArgumentError on an empty report list.
std::vector<OutletScore> outlet_scores(std::span<const CherryReport> reports, const CorpusIndex& index);

struct BiasBandRow {
  BiasCategory category = BiasCategory::kCenter;
  double mean = 0.0;
  std::optional<double> stddev;  // sample standard deviation; none when n < 2
  std::size_t sample_size = 0;
};

// Bands in the order Left, LeftCenter, Right, RightCenter, Center. Bands
// without outlets are omitted.
std::vector<BiasBandRow> bias_band_summary(std::span<const OutletScore> scores, const CorpusIndex& index);

// ---------------------------------------------------------------------------
// Statistics

struct SpearmanResult {
  double r = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

// Average ranks for ties (1-based).
std::vector<double> average_ranks(std::span<const double> values);
double pearson(std::span<const double> x, std::span<const double> y);

// Rank correlation with a two-sided p-value: exact over all permutations
// for n <= 10, Student t with n - 2 degrees of freedom above that. Needs
// n >= 3 and non-constant inputs.
SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

struct ClassMetrics {
  int cls = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct MetricReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<int> classes;
  std::vector<ClassMetrics> per_class;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][predicted] in `classes` order
};

// Zero denominators give 0 for precision, recall and F-1.
MetricReport evaluate(std::span<const int> predictions, std::span<const int> gold, std::span<const int> classes);

json to_json(const MetricReport& report);

}  // namespace cherry
