#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cherry/model.hpp"
#include "cherry/textproc.hpp"

namespace cherry {

struct SourceRegistry {
  std::vector<Outlet> outlets;
  TimeWindow window;

  void validate() const;
};

// {"window": {"start": ..., "end": ...}, "outlets": [<outlet record>, ...]}
SourceRegistry load_registry(const std::filesystem::path& path);

enum class ProviderKind { kGdeltLikeApi, kLocalDirectory };

ProviderKind parse_provider_kind(std::string_view text);

struct FetchSpec {
  ProviderKind provider = ProviderKind::kLocalDirectory;
  // Directory of *.jsonl provider records, or the API base URL.
  std::string source;
  double rate_limit = 5.0;  // requests per second
  int max_attempts = 3;
  int backoff_base_ms = 200;

  void validate() const;
};

struct FetchReport {
  std::size_t accepted = 0;
  std::size_t skipped = 0;  // malformed provider records
  std::size_t out_of_window = 0;
  std::size_t unknown_outlet = 0;
  std::size_t duplicates = 0;  // same outlet and URL seen before
  std::vector<std::string> skipped_reasons;
};

struct FetchResult {
  std::vector<Article> articles;  // sorted by (outlet_id, url)
  FetchReport report;
};

// Provider record, one JSON object per line:
//   {url, outlet_domain, headline, body, published_at, section?}
// The gdelt-like provider is queried once per outlet with
//   GET <source>/articles?domain=<d>&from=<rfc3339>&to=<rfc3339>
// and answers with the same line-delimited records.
FetchResult fetch_articles(const SourceRegistry& registry, const FetchSpec& spec);

// Opinion and editorial pieces are recognised from the provider's section
// field and from /opinion/, /editorial/ or /op-ed/ URL path segments.
ArticleKind infer_article_kind(std::string_view url, std::optional<std::string_view> section);

std::vector<Article> filter_news_only(std::vector<Article> articles);

}  // namespace cherry
