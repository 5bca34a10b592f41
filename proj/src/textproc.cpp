#include "cherry/textproc.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "cherry/error.hpp"
#include "http_client.hpp"

namespace cherry {

// ---------------------------------------------------------------------------
// Sentence segmentation

namespace {

constexpr const char* kAbbreviations[] = {
    // titles
    "mr.", "mrs.", "ms.", "dr.", "prof.", "sen.", "rep.", "gov.", "gen.", "col.", "lt.", "sgt.", "capt.", "cmdr.",
    "adm.", "st.", "jr.", "sr.", "rev.", "pres.", "supt.", "hon.", "messrs.", "gens.", "reps.", "sens.",
    // months and days
    "jan.", "feb.", "mar.", "apr.", "jun.", "jul.", "aug.", "sep.", "sept.", "oct.", "nov.", "dec.", "mon.", "tue.",
    "tues.", "wed.", "thu.", "thur.", "thurs.", "fri.", "sat.",
    // places and organizations
    "u.s.", "u.k.", "u.n.", "e.u.", "d.c.", "u.s.a.", "calif.", "ariz.", "fla.", "mass.", "wash.", "ill.", "penn.",
    "conn.", "mich.", "minn.", "tenn.", "va.", "ga.", "ala.", "colo.", "inc.", "corp.", "co.", "ltd.", "llc.",
    "dept.", "univ.", "assn.", "ave.", "blvd.", "rd.", "mt.", "ft.",
    // time and misc
    "a.m.", "p.m.", "vs.", "v.", "etc.", "e.g.", "i.e.", "no.", "nos.", "vol.", "approx.", "est.", "al.", "fig.",
};

bool is_upper_ascii(char c) { return c >= 'A' && c <= 'Z'; }
bool is_letter_ascii(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }

constexpr std::string_view kOpenCurly = "\xE2\x80\x9C";   // left double quotation mark
constexpr std::string_view kCloseCurly = "\xE2\x80\x9D";  // right double quotation mark
constexpr std::string_view kCloseCurlySingle = "\xE2\x80\x99";

// Strips closing quotes and brackets from the end of a token.
std::string_view strip_closers(std::string_view token) {
  for (;;) {
    if (!token.empty() && (token.back() == '"' || token.back() == '\'' || token.back() == ')' ||
                           token.back() == ']')) {
      token.remove_suffix(1);
    } else if (token.ends_with(kCloseCurly) || token.ends_with(kCloseCurlySingle)) {
      token.remove_suffix(3);
    } else {
      return token;
    }
  }
}

std::string_view strip_openers(std::string_view token) {
  for (;;) {
    if (!token.empty() && (token.front() == '"' || token.front() == '\'' || token.front() == '(' ||
                           token.front() == '[')) {
      token.remove_prefix(1);
    } else if (token.starts_with(kOpenCurly)) {
      token.remove_prefix(3);
    } else {
      return token;
    }
  }
}

// "J." or "U.S."-shaped tokens: single letters each followed by a period.
bool is_initialism(std::string_view token) {
  if (token.size() < 2 || token.size() % 2 != 0) return false;
  for (std::size_t i = 0; i < token.size(); i += 2) {
    if (!is_letter_ascii(token[i]) || token[i + 1] != '.') return false;
  }
  return true;
}

// Byte ranges [open, close] of matched double quotes. Straight quotes pair
// up in order; curly quotes nest. Unmatched quotes protect nothing.
std::vector<std::pair<std::size_t, std::size_t>> quoted_spans(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::optional<std::size_t> straight_open;
  std::vector<std::size_t> curly_open;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '"') {
      if (straight_open) {
        spans.emplace_back(*straight_open, i);
        straight_open.reset();
      } else {
        straight_open = i;
      }
    } else if (text.substr(i).starts_with(kOpenCurly)) {
      curly_open.push_back(i);
      i += 2;
    } else if (text.substr(i).starts_with(kCloseCurly)) {
      if (!curly_open.empty()) {
        spans.emplace_back(curly_open.back(), i + 2);
        curly_open.pop_back();
      }
      i += 2;
    }
  }
  return spans;
}

}  // namespace

std::set<std::string> default_abbreviations() {
  return {std::begin(kAbbreviations), std::end(kAbbreviations)};
}

std::set<std::string> load_abbreviations(const std::filesystem::path& path) {
  std::set<std::string> out;
  for (const auto& line : split_lines(read_file(path))) {
    auto entry = trim(line);
    if (entry.empty() || entry.front() == '#') continue;
    out.insert(to_lower_ascii(entry));
  }
  return out;
}

SentenceSplitter::SentenceSplitter() : abbreviations_(default_abbreviations()) {}

SentenceSplitter::SentenceSplitter(std::set<std::string> abbreviations) : abbreviations_(std::move(abbreviations)) {}

bool SentenceSplitter::is_abbreviation(std::string_view token) const {
  return abbreviations_.count(to_lower_ascii(token)) > 0 || is_initialism(token);
}

std::vector<std::string> SentenceSplitter::split(std::string_view text) const {
  std::vector<std::string> sentences;
  // Paragraphs end at a line holding only whitespace.
  std::string paragraph;
  auto flush = [&] {
    for (auto& s : split_paragraph(paragraph)) sentences.push_back(std::move(s));
    paragraph.clear();
  };
  for (const auto& line : split_lines(text)) {
    if (trim(line).empty()) {
      flush();
    } else {
      paragraph += line;
      paragraph.push_back('\n');
    }
  }
  flush();
  return sentences;
}

std::vector<std::string> SentenceSplitter::split_paragraph(std::string_view raw) const {
  const std::string text = normalize_whitespace(raw);
  std::vector<std::string> out;
  if (text.empty()) return out;

  const auto spans = quoted_spans(text);
  auto inside_quotes = [&](std::size_t pos) {
    return std::any_of(spans.begin(), spans.end(), [&](const auto& s) { return s.first < pos && pos < s.second; });
  };

  std::size_t sentence_start = 0;
  std::size_t token_start = 0;
  while (token_start < text.size()) {
    std::size_t token_end = text.find(' ', token_start);
    if (token_end == std::string::npos) break;
    const std::string_view token(text.data() + token_start, token_end - token_start);
    const std::size_t next_start = token_end + 1;
    std::size_t next_end = text.find(' ', next_start);
    if (next_end == std::string::npos) next_end = text.size();
    const std::string_view next(text.data() + next_start, next_end - next_start);

    bool boundary = false;
    const std::string_view core = strip_closers(token);
    if (!core.empty() && (core.back() == '.' || core.back() == '!' || core.back() == '?')) {
      boundary = true;
      if (core.back() == '.' && is_abbreviation(strip_openers(core))) boundary = false;
      const std::string_view lead = strip_openers(next);
      if (lead.empty() || !(is_upper_ascii(lead.front()) || std::isdigit(static_cast<unsigned char>(lead.front())))) {
        boundary = false;
      }
      if (boundary && inside_quotes(token_end)) boundary = false;
    }
    if (boundary) {
      out.emplace_back(text.substr(sentence_start, token_end - sentence_start));
      sentence_start = next_start;
    }
    token_start = next_start;
  }
  out.emplace_back(text.substr(sentence_start));
  return out;
}

std::vector<Statement> segment_statements(const Article& article, const SentenceSplitter& splitter) {
  std::vector<Statement> out;
  for (auto& sentence : splitter.split(article.body)) {
    Statement s;
    s.ordinal = out.size();
    s.id = make_statement_id(article.id, s.ordinal);
    s.article_id = article.id;
    s.word_count = count_words(sentence);
    s.text = std::move(sentence);
    out.push_back(std::move(s));
  }
  return out;
}

std::string article_vector_text(const Article& article) {
  std::string first_paragraph;
  for (const auto& line : split_lines(article.body)) {
    if (trim(line).empty()) {
      if (!first_paragraph.empty()) break;
      continue;
    }
    first_paragraph += line;
    first_paragraph.push_back('\n');
  }
  return normalize_whitespace(article.headline + "\n" + first_paragraph);
}

// ---------------------------------------------------------------------------
// Vectors

double SparseVector::norm() const {
  double sum = 0.0;
  for (const auto& [_, w] : entries) sum += w * w;
  return std::sqrt(sum);
}

double DenseVector::norm() const { return std::sqrt(dot(*this, *this)); }

double dot(const SparseVector& a, const SparseVector& b) {
  double sum = 0.0;
  auto ia = a.entries.begin();
  auto ib = b.entries.begin();
  while (ia != a.entries.end() && ib != b.entries.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      sum += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return sum;
}

double dot(const DenseVector& a, const DenseVector& b) {
  if (a.dimension() != b.dimension()) {
    throw DimensionMismatchError("dense dimensions differ: " + std::to_string(a.dimension()) + " vs " +
                                 std::to_string(b.dimension()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) sum += a.values[i] * b.values[i];
  return sum;
}

void normalize(SparseVector& v) {
  const double n = v.norm();
  if (n == 0.0) {
    v.entries.clear();
    return;
  }
  for (auto& [_, w] : v.entries) w /= n;
}

void normalize(DenseVector& v) {
  const double n = v.norm();
  if (n == 0.0) return;
  for (double& x : v.values) x /= n;
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) {
      current.push_back(is_upper_ascii(c) ? static_cast<char>(c - 'A' + 'a') : c);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

// ---------------------------------------------------------------------------
// TF-IDF

TfidfModel TfidfModel::fit(std::span<const std::string> documents) {
  if (documents.empty()) throw InvalidArgumentError("TF-IDF needs at least one document");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    auto tokens = word_tokens(doc);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) ++df[std::move(t)];
  }
  if (df.empty()) throw InvalidArgumentError("empty vocabulary");

  TfidfModel model;
  model.document_count_ = documents.size();
  const double n = static_cast<double>(documents.size());
  for (const auto& [term, count] : df) {
    model.index_.emplace(term, static_cast<std::uint32_t>(model.vocabulary_.size()));
    model.vocabulary_.push_back(term);
    model.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return model;
}

double TfidfModel::idf(std::string_view term) const {
  auto it = index_.find(std::string(term));
  if (it == index_.end()) throw InvalidArgumentError("term not in vocabulary: " + std::string(term));
  return idf_[it->second];
}

SparseVector TfidfModel::transform(std::string_view text) const {
  std::map<std::uint32_t, double> tf;
  for (const auto& token : word_tokens(text)) {
    if (auto it = index_.find(token); it != index_.end()) tf[it->second] += 1.0;
  }
  SparseVector v;
  v.dimension = vocabulary_.size();
  v.entries.reserve(tf.size());
  for (const auto& [i, count] : tf) v.entries.emplace_back(i, count * idf_[i]);
  normalize(v);
  return v;
}

// ---------------------------------------------------------------------------
// Embedding providers

std::vector<DenseVector> EmbeddingProvider::embed_batch(std::span<const std::string> texts) const {
  std::vector<DenseVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

HashedNgramProvider::HashedNgramProvider(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw InvalidArgumentError("embedding dimension must be positive");
}

namespace {
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ULL ^ seed;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  // final avalanche so low bits depend on every byte
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return h;
}
}  // namespace

DenseVector HashedNgramProvider::embed(std::string_view text) const {
  DenseVector v{std::vector<double>(dimension_, 0.0)};
  const std::string padded = " " + to_lower_ascii(normalize_whitespace(text)) + " ";
  if (padded.size() <= 2) return v;
  for (std::size_t n = 3; n <= 5; ++n) {
    if (padded.size() < n) break;
    for (std::size_t i = 0; i + n <= padded.size(); ++i) {
      const std::uint64_t h = fnv1a(std::string_view(padded).substr(i, n), n);
      const double sign = (h >> 63) ? -1.0 : 1.0;
      v.values[h % dimension_] += sign;
    }
  }
  return v;
}

RemoteHttpProvider::RemoteHttpProvider(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  const detail::HttpJsonClient client(endpoint_);
  const json info = client.get("/info");
  if (!info.contains("dimension") || !info["dimension"].is_number_unsigned() || info["dimension"].get<std::size_t>() == 0) {
    throw ProtocolError("embedding service /info lacks a positive dimension");
  }
  dimension_ = info["dimension"].get<std::size_t>();
  if (endpoint_.max_in_flight == 0) endpoint_.max_in_flight = 1;
}

std::vector<DenseVector> RemoteHttpProvider::request(std::span<const std::string> texts) const {
  const detail::HttpJsonClient client(endpoint_);
  json body = {{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  json response = client.post("/embed", body);
  const json* vectors = response.contains("vectors") ? &response["vectors"] : nullptr;
  if (!vectors || !vectors->is_array() || vectors->size() != texts.size()) {
    throw ProtocolError("embedding service returned the wrong number of vectors");
  }
  std::vector<DenseVector> out;
  out.reserve(texts.size());
  for (const auto& row : *vectors) {
    if (!row.is_array() || row.size() != dimension_) {
      throw ProtocolError("embedding service returned a vector of the wrong dimension");
    }
    DenseVector v;
    v.values.reserve(dimension_);
    for (const auto& x : row) {
      if (!x.is_number() || !std::isfinite(x.get<double>())) {
        throw ProtocolError("embedding service returned a non-finite value");
      }
      v.values.push_back(x.get<double>());
    }
    out.push_back(std::move(v));
  }
  return out;
}

DenseVector RemoteHttpProvider::embed(std::string_view text) const {
  const std::string t(text);
  return request(std::span<const std::string>(&t, 1)).front();
}

std::vector<DenseVector> RemoteHttpProvider::embed_batch(std::span<const std::string> texts) const {
  // Requests go out one chunk at a time, which keeps in-flight requests
  // within any configured limit.
  constexpr std::size_t kChunk = 32;
  std::vector<DenseVector> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); i += kChunk) {
    auto part = request(texts.subspan(i, std::min(kChunk, texts.size() - i)));
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(std::string_view kind, const RemoteEndpoint& endpoint,
                                                           std::size_t dimension) {
  if (kind == "hashed-ngram") return std::make_unique<HashedNgramProvider>(dimension);
  if (kind == "remote-http") return std::make_unique<RemoteHttpProvider>(endpoint);
  throw InvalidArgumentError("unknown embedding provider '" + std::string(kind) + "'");
}

// ---------------------------------------------------------------------------
// Hybrid vectors

HybridVector vectorize_hybrid(std::string_view text, const TfidfModel& tfidf, const EmbeddingProvider& provider) {
  const std::string t(text);
  return std::move(vectorize_hybrid_batch(std::span<const std::string>(&t, 1), tfidf, provider).front());
}

std::vector<HybridVector> vectorize_hybrid_batch(std::span<const std::string> texts, const TfidfModel& tfidf,
                                                 const EmbeddingProvider& provider) {
  std::vector<HybridVector> out(texts.size());
  std::vector<std::string> to_embed;
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out[i].sparse = tfidf.transform(texts[i]);
    if (trim(texts[i]).empty()) {
      out[i].dense.values.assign(provider.dimension(), 0.0);
    } else {
      to_embed.push_back(texts[i]);
      slots.push_back(i);
    }
  }
  if (!to_embed.empty()) {
    auto dense = provider.embed_batch(to_embed);
    if (dense.size() != to_embed.size()) throw ProviderError(provider.name() + " returned too few vectors");
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (dense[k].dimension() != provider.dimension()) {
        throw ProviderError(provider.name() + " returned a vector of the wrong dimension");
      }
      for (double x : dense[k].values) {
        if (!std::isfinite(x)) throw ProviderError(provider.name() + " returned a non-finite value");
      }
      normalize(dense[k]);
      out[slots[k]].dense = std::move(dense[k]);
    }
  }
  return out;
}

double cosine(const HybridVector& a, const HybridVector& b) {
  if (a.sparse.dimension != b.sparse.dimension) {
    throw DimensionMismatchError("sparse dimensions differ: " + std::to_string(a.sparse.dimension) + " vs " +
                                 std::to_string(b.sparse.dimension));
  }
  const double numerator = dot(a.dense, b.dense) + dot(a.sparse, b.sparse);
  const double na = a.dense.norm() * a.dense.norm() + a.sparse.norm() * a.sparse.norm();
  const double nb = b.dense.norm() * b.dense.norm() + b.sparse.norm() * b.sparse.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(numerator / std::sqrt(na * nb), -1.0, 1.0);
}

}  // namespace cherry
