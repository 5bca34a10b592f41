#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cherry/model.hpp"

namespace cherry {

// ---------------------------------------------------------------------------
// Sentence segmentation

// Statements shorter than this take no part in statement clustering.
inline constexpr std::size_t kMinClusterWords = 4;

// Lower-cased abbreviations, each ending in '.', that never end a sentence.
std::set<std::string> default_abbreviations();
std::set<std::string> load_abbreviations(const std::filesystem::path& path);

class SentenceSplitter {
 public:
  SentenceSplitter();
  explicit SentenceSplitter(std::set<std::string> abbreviations);

  // Sentences never cross a blank line and never split inside a paired
  // double quote. Each sentence is whitespace-normalized; joining them
  // with single spaces gives normalize_whitespace(text).
  std::vector<std::string> split(std::string_view text) const;

 private:
  std::vector<std::string> split_paragraph(std::string_view paragraph) const;
  bool is_abbreviation(std::string_view token) const;

  std::set<std::string> abbreviations_;
};

std::vector<Statement> segment_statements(const Article& article, const SentenceSplitter& splitter = {});

// Headline plus the body up to its first blank line.
std::string article_vector_text(const Article& article);

// ---------------------------------------------------------------------------
// Vectors

struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;  // sorted by index
  std::size_t dimension = 0;

  double norm() const;
  bool operator==(const SparseVector&) const = default;
};

struct DenseVector {
  std::vector<double> values;

  std::size_t dimension() const { return values.size(); }
  double norm() const;
  bool operator==(const DenseVector&) const = default;
};

struct HybridVector {
  DenseVector dense;
  SparseVector sparse;
};

double dot(const SparseVector& a, const SparseVector& b);
double dot(const DenseVector& a, const DenseVector& b);
void normalize(SparseVector& v);
void normalize(DenseVector& v);

// Lower-cased word tokens: maximal runs of ASCII letters/digits, with any
// non-ASCII byte treated as a letter.
std::vector<std::string> word_tokens(std::string_view text);

// ---------------------------------------------------------------------------
// TF-IDF

class TfidfModel {
 public:
  // idf(t) = ln((1 + N) / (1 + df(t))) + 1 over a lexicographically sorted
  // vocabulary. Throws InvalidArgumentError when no document has a token.
  static TfidfModel fit(std::span<const std::string> documents);

  // Raw term frequency times idf, L2-normalized. Unknown tokens are ignored.
  SparseVector transform(std::string_view text) const;

  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  double idf(std::string_view term) const;
  std::size_t document_count() const { return document_count_; }

 private:
  std::vector<std::string> vocabulary_;
  std::vector<double> idf_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::size_t document_count_ = 0;
};

// ---------------------------------------------------------------------------
// Embedding providers

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual DenseVector embed(std::string_view text) const = 0;
  virtual std::vector<DenseVector> embed_batch(std::span<const std::string> texts) const;
};

// Signed feature hashing of lower-cased character 3- to 5-grams. Needs no
// model; identical text always yields a bit-identical vector.
class HashedNgramProvider final : public EmbeddingProvider {
 public:
  explicit HashedNgramProvider(std::size_t dimension = 256);

  std::string name() const override { return "hashed-ngram"; }
  std::size_t dimension() const override { return dimension_; }
  DenseVector embed(std::string_view text) const override;

 private:
  std::size_t dimension_;
};

struct RemoteEndpoint {
  std::string base_url;  // e.g. http://127.0.0.1:8080
  int timeout_ms = 10000;
  int max_attempts = 3;
  int backoff_base_ms = 100;
  std::size_t max_in_flight = 4;
};

// POST /embed {"texts": [...]} -> {"vectors": [[...]]}; GET /info advertises
// the dimension.
class RemoteHttpProvider final : public EmbeddingProvider {
 public:
  explicit RemoteHttpProvider(RemoteEndpoint endpoint);

  std::string name() const override { return "remote-http"; }
  std::size_t dimension() const override { return dimension_; }
  DenseVector embed(std::string_view text) const override;
  std::vector<DenseVector> embed_batch(std::span<const std::string> texts) const override;

 private:
  std::vector<DenseVector> request(std::span<const std::string> texts) const;

  RemoteEndpoint endpoint_;
  std::size_t dimension_ = 0;
};

std::unique_ptr<EmbeddingProvider> make_embedding_provider(std::string_view kind, const RemoteEndpoint& endpoint,
                                                           std::size_t dimension);

// ---------------------------------------------------------------------------
// Hybrid vectors

// Both parts unit-normalized; empty or whitespace-only text gives zeros
// without consulting the provider.
HybridVector vectorize_hybrid(std::string_view text, const TfidfModel& tfidf, const EmbeddingProvider& provider);
std::vector<HybridVector> vectorize_hybrid_batch(std::span<const std::string> texts, const TfidfModel& tfidf,
                                                 const EmbeddingProvider& provider);

// Cosine of the concatenation [dense / sqrt(2), sparse / sqrt(2)]. When both
// parts of both vectors are nonzero this is the mean of the part cosines.
// Zero vectors have similarity 0.
double cosine(const HybridVector& a, const HybridVector& b);

}  // namespace cherry
