#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <unordered_map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cherry/model.hpp"
#include "cherry/textproc.hpp"

namespace cherry {

inline constexpr double kDefaultDecisionThreshold = 0.5;

struct ImportanceScore {
  double probability = 0.0;
  bool important = false;
  double threshold = kDefaultDecisionThreshold;

  bool operator==(const ImportanceScore&) const = default;
};

// A probability equal to the threshold counts as important.
ImportanceScore make_score(double probability, double threshold = kDefaultDecisionThreshold);

struct ScoreResult {
  std::optional<ImportanceScore> score;
  std::string error;  // set when score is empty
};

class ImportanceScorer {
 public:
  virtual ~ImportanceScorer() = default;
  virtual std::string name() const = 0;
  virtual ImportanceScore score(std::string_view statement, std::string_view context) const = 0;
  // Results line up with the input. The default scores one statement at a
  // time and records per-statement failures instead of throwing.
  virtual std::vector<ScoreResult> score_batch(std::span<const std::string> statements,
                                               std::string_view context) const;
};

// ---------------------------------------------------------------------------
// Context

enum class ContextPolicy { kNeutralSingle, kBiasedPairSummarized };

ContextPolicy parse_context_policy(std::string_view text);
std::string_view to_string(ContextPolicy policy);

struct ContextSpec {
  ContextPolicy policy = ContextPolicy::kNeutralSingle;
  std::size_t max_words = 500;
  std::optional<std::size_t> summarize_to_words;

  void validate() const;
};

class Summarizer {
 public:
  virtual ~Summarizer() = default;
  virtual std::string summarize(std::string_view text, std::size_t target_words) const = 0;
};

// The article a neutral context comes from: the earliest-published member
// article of a Center outlet, ties broken by id. Null when there is none.
const Article* select_neutral_article(const Event& event, const CorpusIndex& index);

// neutral_single: first max_words words of the neutral article body.
// biased_pair_summarized: the earliest Left and earliest Right article
// bodies, concatenated in that order, summarized together to
// summarize_to_words (or max_words) and trimmed to max_words.
std::string build_context(const Event& event, const CorpusIndex& index, const ContextSpec& spec,
                          const Summarizer* summarizer = nullptr);

// ---------------------------------------------------------------------------
// LexRank

struct LexRankParams {
  double similarity_threshold = 0.1;
  double damping = 0.15;  // teleportation probability
  double tolerance = 1e-8;
  std::size_t max_iterations = 1000;
  std::size_t summary_size = 5;

  void validate() const;
};

// Stationary distribution of the damped random walk over the thresholded
// TF-IDF cosine graph of `sentences`. Sums to 1.
std::vector<double> lexrank_centrality(std::span<const std::string> sentences, const LexRankParams& params);

// Fits LexRank on the context and transfers to each statement the
// centrality of its most similar context sentence (0 when that similarity
// is below the threshold). The top summary_size statements, plus any tied
// with the last of them, are important.
std::vector<ImportanceScore> lexrank_score(std::span<const std::string> statements, std::string_view context,
                                           const LexRankParams& params);

class LexRankScorer final : public ImportanceScorer {
 public:
  explicit LexRankScorer(LexRankParams params);

  std::string name() const override { return "lexrank"; }
  ImportanceScore score(std::string_view statement, std::string_view context) const override;
  std::vector<ScoreResult> score_batch(std::span<const std::string> statements,
                                       std::string_view context) const override;

 private:
  LexRankParams params_;
};

// ---------------------------------------------------------------------------
// Remote sequence-pair classifier

struct ClassifierEndpoint {
  RemoteEndpoint remote;
  double threshold = kDefaultDecisionThreshold;
};

// POST /score {"statement", "context"} -> {"probability": p}. The service
// encodes the pair and right-truncates it.
ImportanceScore remote_classifier_score(std::string_view statement, std::string_view context,
                                        const ClassifierEndpoint& endpoint);

class RemoteClassifierScorer final : public ImportanceScorer {
 public:
  explicit RemoteClassifierScorer(ClassifierEndpoint endpoint);

  std::string name() const override { return "remote"; }
  ImportanceScore score(std::string_view statement, std::string_view context) const override;
  // Fans out with at most endpoint.remote.max_in_flight concurrent requests.
  std::vector<ScoreResult> score_batch(std::span<const std::string> statements,
                                       std::string_view context) const override;

 private:
  ClassifierEndpoint endpoint_;
};

// ---------------------------------------------------------------------------
// Chat-completion client and prompt scorer

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(std::span<const ChatMessage> messages, double temperature) const = 0;
};

// POST /chat {"messages": [...], "temperature": t} -> {"content": "..."}
class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(RemoteEndpoint endpoint);
  std::string complete(std::span<const ChatMessage> messages, double temperature) const override;

 private:
  RemoteEndpoint endpoint_;
};

class ChatSummarizer final : public Summarizer {
 public:
  explicit ChatSummarizer(const ChatClient& client) : client_(client) {}
  std::string summarize(std::string_view text, std::size_t target_words) const override;

 private:
  const ChatClient& client_;
};

struct Demonstration {
  std::string context;
  std::string statement;
  bool important = false;
};

// Template with {context}, {statement} and {demonstrations} placeholders.
std::string default_prompt_template();
std::string load_prompt_template(const std::filesystem::path& path);

std::string render_prompt(std::string_view prompt_template, std::string_view statement, std::string_view context,
                          std::span<const Demonstration> demonstrations);

// "yes"/"no" (any case, surrounding quotes or trailing punctuation allowed).
std::optional<bool> parse_yes_no(std::string_view response);

class PromptScorer final : public ImportanceScorer {
 public:
  PromptScorer(const ChatClient& client, std::vector<Demonstration> demonstrations,
               std::string prompt_template = default_prompt_template(),
               double threshold = kDefaultDecisionThreshold);

  std::string name() const override { return "prompt"; }
  // Re-asks once on an unparsable reply, then raises ScorerError.
  ImportanceScore score(std::string_view statement, std::string_view context) const override;

  std::string prompt_for(std::string_view statement, std::string_view context) const;

 private:
  const ChatClient& client_;
  std::vector<Demonstration> demonstrations_;
  std::string template_;
  double threshold_;
};

ImportanceScore prompt_score(std::string_view statement, std::string_view context,
                             std::span<const Demonstration> demonstrations, const ChatClient& client);

// Alternates positive and negative demonstrations (positives first) after
// a seeded shuffle of each pool; stops when `count` are chosen or a pool
// runs dry, then fills from the other pool.
std::vector<Demonstration> select_demonstrations(std::span<const Demonstration> pool, std::size_t count,
                                                 std::uint64_t seed);

// ---------------------------------------------------------------------------

// Looks statements up by exact text; unknown statements get probability 0.
// Stands in for a trained model where the important set is known.
class LookupScorer final : public ImportanceScorer {
 public:
  explicit LookupScorer(std::unordered_map<std::string, double> probabilities,
                        double threshold = kDefaultDecisionThreshold);

  // JSONL rows {"text": ..., "probability": ...}.
  static LookupScorer from_file(const std::filesystem::path& path, double threshold = kDefaultDecisionThreshold);

  std::string name() const override { return "lookup"; }
  ImportanceScore score(std::string_view statement, std::string_view context) const override;

 private:
  std::unordered_map<std::string, double> probabilities_;
  double threshold_;
};

}  // namespace cherry
