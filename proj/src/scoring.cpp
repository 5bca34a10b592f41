#include "cherry/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "cherry/error.hpp"
#include "cherry/json_io.hpp"
#include "http_client.hpp"

namespace cherry {

ImportanceScore make_score(double probability, double threshold) {
  if (!std::isfinite(probability) || probability < 0.0 || probability > 1.0) {
    throw ProtocolError("probability outside [0,1]: " + std::to_string(probability));
  }
  return {probability, probability >= threshold, threshold};
}

std::vector<ScoreResult> ImportanceScorer::score_batch(std::span<const std::string> statements,
                                                       std::string_view context) const {
  std::vector<ScoreResult> out(statements.size());
  for (std::size_t i = 0; i < statements.size(); ++i) {
    try {
      out[i].score = score(statements[i], context);
    } catch (const Error& e) {
      out[i].error = e.what();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Context

ContextPolicy parse_context_policy(std::string_view text) {
  if (text == "neutral" || text == "neutral_single") return ContextPolicy::kNeutralSingle;
  if (text == "biased-pair" || text == "biased_pair_summarized") return ContextPolicy::kBiasedPairSummarized;
  throw InvalidArgumentError("unknown context policy '" + std::string(text) + "'");
}

std::string_view to_string(ContextPolicy policy) {
  return policy == ContextPolicy::kNeutralSingle ? "neutral_single" : "biased_pair_summarized";
}

void ContextSpec::validate() const {
  if (max_words == 0) throw ValidationError("context max_words must be positive");
  if (summarize_to_words && *summarize_to_words < max_words) {
    throw ValidationError("summarize_to_words must be at least max_words");
  }
}

namespace {

const Article* earliest_in_band(const Event& event, const CorpusIndex& index, BiasCategory band) {
  const Article* best = nullptr;
  for (const auto& id : event.article_ids) {
    const Article* a = index.article(id);
    if (!a) continue;
    const Outlet* o = index.outlet_of(*a);
    if (!o || o->bias_category != band) continue;
    if (!best || a->published_at < best->published_at ||
        (a->published_at == best->published_at && a->id < best->id)) {
      best = a;
    }
  }
  return best;
}

}  // namespace

const Article* select_neutral_article(const Event& event, const CorpusIndex& index) {
  return earliest_in_band(event, index, BiasCategory::kCenter);
}

std::string build_context(const Event& event, const CorpusIndex& index, const ContextSpec& spec,
                          const Summarizer* summarizer) {
  spec.validate();
  if (spec.policy == ContextPolicy::kNeutralSingle) {
    const Article* neutral = select_neutral_article(event, index);
    if (!neutral) throw ContextUnavailableError("event " + event.id + " has no article from a Center outlet");
    return std::string(first_words(neutral->body, spec.max_words));
  }
  const Article* left = earliest_in_band(event, index, BiasCategory::kLeft);
  if (!left) throw ContextUnavailableError("event " + event.id + " has no article from a Left outlet");
  const Article* right = earliest_in_band(event, index, BiasCategory::kRight);
  if (!right) throw ContextUnavailableError("event " + event.id + " has no article from a Right outlet");
  if (!summarizer) throw InvalidArgumentError("biased-pair context needs a summarizer");
  const std::string joined = left->body + "\n\n" + right->body;
  const std::string summary = summarizer->summarize(joined, spec.summarize_to_words.value_or(spec.max_words));
  return std::string(first_words(summary, spec.max_words));
}

// ---------------------------------------------------------------------------
// LexRank

void LexRankParams::validate() const {
  if (!(similarity_threshold >= 0.0 && similarity_threshold <= 1.0)) {
    throw ValidationError("LexRank similarity threshold must lie in [0,1]");
  }
  if (!(damping > 0.0 && damping < 1.0)) throw ValidationError("LexRank damping must lie in (0,1)");
  if (!(tolerance > 0.0)) throw ValidationError("LexRank tolerance must be positive");
  if (max_iterations == 0) throw ValidationError("LexRank max_iterations must be positive");
}

namespace {

std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& similarity,
                                            const LexRankParams& params) {
  const std::size_t n = similarity.size();
  // Row-stochastic transition matrix over the thresholded graph. A node
  // with no edge at all jumps uniformly.
  std::vector<std::vector<double>> transition(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t degree = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (similarity[i][j] >= params.similarity_threshold && similarity[i][j] > 0.0) ++degree;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (degree == 0) {
        transition[i][j] = 1.0 / static_cast<double>(n);
      } else if (similarity[i][j] >= params.similarity_threshold && similarity[i][j] > 0.0) {
        transition[i][j] = 1.0 / static_cast<double>(degree);
      }
    }
  }

  const double teleport = params.damping / static_cast<double>(n);
  std::vector<double> p(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  for (std::size_t iter = 0; iter < params.max_iterations; ++iter) {
    std::fill(next.begin(), next.end(), teleport);
    for (std::size_t i = 0; i < n; ++i) {
      const double mass = (1.0 - params.damping) * p[i];
      for (std::size_t j = 0; j < n; ++j) next[j] += mass * transition[i][j];
    }
    const double total = std::accumulate(next.begin(), next.end(), 0.0);
    double delta = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      next[j] /= total;
      delta += std::abs(next[j] - p[j]);
    }
    p.swap(next);
    if (delta < params.tolerance) return p;
  }
  throw ConvergenceError("LexRank power iteration did not converge in " + std::to_string(params.max_iterations) +
                         " iterations");
}

}  // namespace

std::vector<double> lexrank_centrality(std::span<const std::string> sentences, const LexRankParams& params) {
  params.validate();
  if (sentences.empty()) throw InvalidArgumentError("LexRank needs at least one sentence");
  const TfidfModel tfidf = TfidfModel::fit(sentences);
  std::vector<SparseVector> vectors;
  for (const auto& s : sentences) vectors.push_back(tfidf.transform(s));
  std::vector<std::vector<double>> similarity(sentences.size(), std::vector<double>(sentences.size()));
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    for (std::size_t j = i; j < sentences.size(); ++j) {
      similarity[i][j] = similarity[j][i] = dot(vectors[i], vectors[j]);
    }
  }
  return stationary_distribution(similarity, params);
}

std::vector<ImportanceScore> lexrank_score(std::span<const std::string> statements, std::string_view context,
                                           const LexRankParams& params) {
  params.validate();
  const auto sentences = SentenceSplitter().split(context);
  if (sentences.empty()) throw InvalidArgumentError("context has no sentences");
  const auto centrality = lexrank_centrality(sentences, params);
  const TfidfModel tfidf = TfidfModel::fit(sentences);
  std::vector<SparseVector> context_vectors;
  for (const auto& s : sentences) context_vectors.push_back(tfidf.transform(s));

  std::vector<double> probability(statements.size(), 0.0);
  for (std::size_t i = 0; i < statements.size(); ++i) {
    const SparseVector v = tfidf.transform(statements[i]);
    double best = -1.0;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < context_vectors.size(); ++j) {
      const double sim = dot(v, context_vectors[j]);
      if (sim > best) {
        best = sim;
        best_j = j;
      }
    }
    if (best >= params.similarity_threshold && best > 0.0) probability[i] = centrality[best_j];
  }

  // Cut-off: probability of the summary_size-th ranked statement. Statements
  // with no similar context sentence (probability 0) never make the cut.
  std::vector<double> ranked;
  for (double p : probability) {
    if (p > 0.0) ranked.push_back(p);
  }
  std::sort(ranked.begin(), ranked.end(), std::greater<>());
  double threshold = std::nextafter(1.0, 2.0);
  if (params.summary_size > 0 && !ranked.empty()) {
    threshold = ranked[std::min(params.summary_size, ranked.size()) - 1];
  }

  std::vector<ImportanceScore> out;
  out.reserve(statements.size());
  for (double p : probability) out.push_back({p, p >= threshold, threshold});
  return out;
}

LexRankScorer::LexRankScorer(LexRankParams params) : params_(params) { params_.validate(); }

ImportanceScore LexRankScorer::score(std::string_view statement, std::string_view context) const {
  const std::string s(statement);
  return lexrank_score(std::span<const std::string>(&s, 1), context, params_).front();
}

std::vector<ScoreResult> LexRankScorer::score_batch(std::span<const std::string> statements,
                                                    std::string_view context) const {
  std::vector<ScoreResult> out(statements.size());
  const auto scores = lexrank_score(statements, context, params_);
  for (std::size_t i = 0; i < scores.size(); ++i) out[i].score = scores[i];
  return out;
}

// ---------------------------------------------------------------------------
// Remote classifier

ImportanceScore remote_classifier_score(std::string_view statement, std::string_view context,
                                        const ClassifierEndpoint& endpoint) {
  const detail::HttpJsonClient client(endpoint.remote);
  const json response = client.post("/score", json{{"statement", statement}, {"context", context}});
  if (!response.is_object() || !response.contains("probability") || !response["probability"].is_number()) {
    throw ProtocolError("classifier response lacks a numeric probability");
  }
  return make_score(response["probability"].get<double>(), endpoint.threshold);
}

RemoteClassifierScorer::RemoteClassifierScorer(ClassifierEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  if (endpoint_.remote.max_in_flight == 0) endpoint_.remote.max_in_flight = 1;
}

ImportanceScore RemoteClassifierScorer::score(std::string_view statement, std::string_view context) const {
  return remote_classifier_score(statement, context, endpoint_);
}

std::vector<ScoreResult> RemoteClassifierScorer::score_batch(std::span<const std::string> statements,
                                                             std::string_view context) const {
  std::vector<ScoreResult> out(statements.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < statements.size(); i = next++) {
      try {
        out[i].score = score(statements[i], context);
      } catch (const Error& e) {
        out[i].error = e.what();
      }
    }
  };
  const std::size_t workers = std::min(endpoint_.remote.max_in_flight, statements.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chat

HttpChatClient::HttpChatClient(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::string HttpChatClient::complete(std::span<const ChatMessage> messages, double temperature) const {
  json list = json::array();
  for (const auto& m : messages) list.push_back({{"role", m.role}, {"content", m.content}});
  const detail::HttpJsonClient client(endpoint_);
  const json response = client.post("/chat", json{{"messages", list}, {"temperature", temperature}});
  if (!response.is_object() || !response.contains("content") || !response["content"].is_string()) {
    throw ProtocolError("chat response lacks a string content field");
  }
  return response["content"].get<std::string>();
}

std::string ChatSummarizer::summarize(std::string_view text, std::size_t target_words) const {
  const ChatMessage message{"user", "Summarize the following news coverage of one event in a single text of at most " +
                                        std::to_string(target_words) +
                                        " words. Keep the factual statements that matter most.\n\n" +
                                        std::string(text)};
  return client_.complete(std::span<const ChatMessage>(&message, 1), 0.0);
}

namespace {

constexpr std::string_view kQuestion =
    "Should a news story about this event include the statement? Reply yes or no.";

constexpr std::string_view kReask = "Reply with one word: yes or no.";

constexpr std::string_view kDefaultTemplate =
    "{demonstrations}Context:\n"
    "{context}\n"
    "\n"
    "Statement: {statement}\n"
    "\n";

std::string substitute(std::string_view tmpl, std::string_view statement, std::string_view context,
                       std::string_view demonstrations) {
  std::string out;
  out.reserve(tmpl.size() + statement.size() + context.size() + demonstrations.size());
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl[i] == '{') {
      const auto rest = tmpl.substr(i);
      if (rest.starts_with("{statement}")) {
        out += statement;
        i += 11;
        continue;
      }
      if (rest.starts_with("{context}")) {
        out += context;
        i += 9;
        continue;
      }
      if (rest.starts_with("{demonstrations}")) {
        out += demonstrations;
        i += 16;
        continue;
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

}  // namespace

std::string default_prompt_template() { return std::string(kDefaultTemplate) + std::string(kQuestion) + "\n"; }

std::string load_prompt_template(const std::filesystem::path& path) {
  std::string text = read_file(path);
  for (const char* placeholder : {"{context}", "{statement}"}) {
    if (text.find(placeholder) == std::string::npos) {
      throw ValidationError(path.string() + " lacks the " + std::string(placeholder) + " placeholder");
    }
  }
  return text;
}

std::string render_prompt(std::string_view prompt_template, std::string_view statement, std::string_view context,
                          std::span<const Demonstration> demonstrations) {
  std::string demos;
  for (const auto& d : demonstrations) {
    demos += substitute(prompt_template, d.statement, d.context, "");
    demos += "Answer: ";
    demos += d.important ? "yes" : "no";
    demos += "\n\n";
  }
  return substitute(prompt_template, statement, context, demos);
}

std::optional<bool> parse_yes_no(std::string_view response) {
  const auto tokens = word_tokens(response);
  if (tokens.empty()) return std::nullopt;
  if (tokens.front() == "yes") return true;
  if (tokens.front() == "no") return false;
  return std::nullopt;
}

PromptScorer::PromptScorer(const ChatClient& client, std::vector<Demonstration> demonstrations,
                           std::string prompt_template, double threshold)
    : client_(client),
      demonstrations_(std::move(demonstrations)),
      template_(std::move(prompt_template)),
      threshold_(threshold) {}

std::string PromptScorer::prompt_for(std::string_view statement, std::string_view context) const {
  return render_prompt(template_, statement, context, demonstrations_);
}

ImportanceScore PromptScorer::score(std::string_view statement, std::string_view context) const {
  std::vector<ChatMessage> messages{{"user", prompt_for(statement, context)}};
  std::string reply = client_.complete(messages, 0.0);
  auto answer = parse_yes_no(reply);
  if (!answer) {
    messages.push_back({"assistant", reply});
    messages.push_back({"user", std::string(kReask)});
    reply = client_.complete(messages, 0.0);
    answer = parse_yes_no(reply);
  }
  if (!answer) throw ScorerError("unparsable yes/no answer from the chat model", reply);
  return make_score(*answer ? 1.0 : 0.0, threshold_);
}

ImportanceScore prompt_score(std::string_view statement, std::string_view context,
                             std::span<const Demonstration> demonstrations, const ChatClient& client) {
  return PromptScorer(client, {demonstrations.begin(), demonstrations.end()}).score(statement, context);
}

std::vector<Demonstration> select_demonstrations(std::span<const Demonstration> pool, std::size_t count,
                                                 std::uint64_t seed) {
  std::vector<Demonstration> positives;
  std::vector<Demonstration> negatives;
  for (const auto& d : pool) (d.important ? positives : negatives).push_back(d);
  seeded_shuffle(positives, seed);
  seeded_shuffle(negatives, seed + 1);
  std::vector<Demonstration> out;
  std::size_t p = 0;
  std::size_t n = 0;
  while (out.size() < count && (p < positives.size() || n < negatives.size())) {
    const bool want_positive = out.size() % 2 == 0;
    if ((want_positive && p < positives.size()) || n >= negatives.size()) {
      out.push_back(positives[p++]);
    } else {
      out.push_back(negatives[n++]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

LookupScorer::LookupScorer(std::unordered_map<std::string, double> probabilities, double threshold)
    : threshold_(threshold) {
  for (auto& [text, p] : probabilities) {
    make_score(p, threshold);  // range check
    probabilities_.emplace(normalize_whitespace(text), p);
  }
}

LookupScorer LookupScorer::from_file(const std::filesystem::path& path, double threshold) {
  std::unordered_map<std::string, double> table;
  const auto lines = split_lines(read_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const json row = parse_json(lines[i], path.string() + ":" + std::to_string(i + 1));
    try {
      table[row.at("text").get<std::string>()] = row.at("probability").get<double>();
    } catch (const json::exception& e) {
      throw InvalidArgumentError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return LookupScorer(std::move(table), threshold);
}

ImportanceScore LookupScorer::score(std::string_view statement, std::string_view) const {
  auto it = probabilities_.find(normalize_whitespace(statement));
  return make_score(it == probabilities_.end() ? 0.0 : it->second, threshold_);
}

}  // namespace cherry
