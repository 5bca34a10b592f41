#include "cherry/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <set>
#include <thread>

#include "cherry/error.hpp"
#include "cherry/json_io.hpp"
#include "http_client.hpp"

namespace cherry {

void SourceRegistry::validate() const {
  if (outlets.empty()) throw ValidationError("no sources configured");
  if (!(window.start < window.end)) throw ValidationError("collection window must start before it ends");
  std::set<std::string> ids;
  for (const auto& o : outlets) {
    if (!ids.insert(o.id).second) throw ValidationError("duplicate outlet id '" + o.id + "' in registry");
    if (o.domain.empty()) throw ValidationError("outlet '" + o.id + "' has no domain");
  }
}

SourceRegistry load_registry(const std::filesystem::path& path) {
  const json j = parse_json(read_file(path), path.string());
  SourceRegistry registry;
  try {
    registry.window.start = parse_timestamp(j.at("window").at("start").get<std::string>());
    registry.window.end = parse_timestamp(j.at("window").at("end").get<std::string>());
    for (const auto& o : j.at("outlets")) registry.outlets.push_back(outlet_from_json(o));
  } catch (const json::exception& e) {
    throw InvalidArgumentError(path.string() + ": " + e.what());
  }
  return registry;
}

ProviderKind parse_provider_kind(std::string_view text) {
  if (text == "local_directory" || text == "local") return ProviderKind::kLocalDirectory;
  if (text == "gdelt_like_api" || text == "gdelt") return ProviderKind::kGdeltLikeApi;
  throw InvalidArgumentError("unknown fetch provider '" + std::string(text) + "'");
}

void FetchSpec::validate() const {
  if (!(rate_limit > 0.0)) throw ValidationError("fetch rate limit must be positive");
  if (max_attempts < 1) throw ValidationError("fetch needs at least one attempt");
  if (source.empty()) throw ValidationError("fetch source is empty");
}

ArticleKind infer_article_kind(std::string_view url, std::optional<std::string_view> section) {
  if (section) {
    const std::string s = to_lower_ascii(*section);
    if (s.find("editorial") != std::string::npos) return ArticleKind::kEditorial;
    if (s.find("opinion") != std::string::npos || s.find("op-ed") != std::string::npos) return ArticleKind::kOpinion;
  }
  const std::string u = to_lower_ascii(url);
  if (u.find("/editorial/") != std::string::npos) return ArticleKind::kEditorial;
  if (u.find("/opinion/") != std::string::npos || u.find("/op-ed/") != std::string::npos) return ArticleKind::kOpinion;
  return ArticleKind::kNews;
}

std::vector<Article> filter_news_only(std::vector<Article> articles) {
  std::erase_if(articles, [](const Article& a) { return a.kind != ArticleKind::kNews; });
  return articles;
}

namespace {

std::string bare_domain(std::string_view domain) {
  std::string d = to_lower_ascii(trim(domain));
  if (d.rfind("www.", 0) == 0) d.erase(0, 4);
  return d;
}

class RecordSink {
 public:
  explicit RecordSink(const SourceRegistry& registry) : registry_(registry) {
    for (const auto& o : registry.outlets) by_domain_.emplace(bare_domain(o.domain), &o);
  }

  void consume(std::string_view line, std::string_view origin) {
    if (trim(line).empty()) return;
    Article a;
    const Outlet* outlet = nullptr;
    try {
      const json j = json::parse(line);
      a.url = j.at("url").get<std::string>();
      auto it = by_domain_.find(bare_domain(j.at("outlet_domain").get<std::string>()));
      if (it != by_domain_.end()) outlet = it->second;
      a.headline = j.at("headline").get<std::string>();
      a.body = j.at("body").get<std::string>();
      a.published_at = parse_timestamp(j.at("published_at").get<std::string>());
      std::optional<std::string> section;
      if (j.contains("section") && j["section"].is_string()) section = j["section"].get<std::string>();
      a.kind = infer_article_kind(a.url, section);
      if (a.url.empty()) throw InvalidArgumentError("empty url");
      if (a.kind == ArticleKind::kNews && trim(a.body).empty()) throw InvalidArgumentError("empty body");
    } catch (const std::exception& e) {
      ++result.report.skipped;
      result.report.skipped_reasons.push_back(std::string(origin) + ": " + e.what());
      return;
    }
    if (!outlet) {
      ++result.report.unknown_outlet;
      return;
    }
    if (!registry_.window.contains(a.published_at)) {
      ++result.report.out_of_window;
      return;
    }
    a.outlet_id = outlet->id;
    a.id = make_article_id(a.outlet_id, a.url);
    if (!seen_.insert(a.id).second) {
      ++result.report.duplicates;
      return;
    }
    result.articles.push_back(std::move(a));
  }

  FetchResult result;

 private:
  const SourceRegistry& registry_;
  std::unordered_map<std::string, const Outlet*> by_domain_;
  std::set<std::string> seen_;
};

std::string url_encode(std::string_view text) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

}  // namespace

FetchResult fetch_articles(const SourceRegistry& registry, const FetchSpec& spec) {
  registry.validate();
  spec.validate();
  RecordSink sink(registry);

  if (spec.provider == ProviderKind::kLocalDirectory) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(spec.source)) throw IoError("provider directory not readable: " + spec.source);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(spec.source)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      const auto lines = split_lines(read_file(file));
      for (std::size_t i = 0; i < lines.size(); ++i) {
        sink.consume(lines[i], file.filename().string() + ":" + std::to_string(i + 1));
      }
    }
  } else {
    RemoteEndpoint endpoint;
    endpoint.base_url = spec.source;
    endpoint.max_attempts = spec.max_attempts;
    endpoint.backoff_base_ms = spec.backoff_base_ms;
    const detail::HttpJsonClient client(endpoint);
    const auto interval = std::chrono::duration<double>(1.0 / spec.rate_limit);
    auto next_slot = std::chrono::steady_clock::now();

    std::vector<const Outlet*> outlets;
    for (const auto& o : registry.outlets) outlets.push_back(&o);
    std::sort(outlets.begin(), outlets.end(), [](const Outlet* a, const Outlet* b) { return a->id < b->id; });
    for (const Outlet* o : outlets) {
      std::this_thread::sleep_until(next_slot);
      next_slot = std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(interval);
      const std::string path = "/articles?domain=" + url_encode(o->domain) +
                               "&from=" + url_encode(format_timestamp(registry.window.start)) +
                               "&to=" + url_encode(format_timestamp(registry.window.end));
      const auto lines = split_lines(client.get_text(path));
      for (std::size_t i = 0; i < lines.size(); ++i) {
        sink.consume(lines[i], o->domain + ":" + std::to_string(i + 1));
      }
    }
  }

  auto& articles = sink.result.articles;
  std::sort(articles.begin(), articles.end(), [](const Article& a, const Article& b) {
    return a.outlet_id != b.outlet_id ? a.outlet_id < b.outlet_id : a.url < b.url;
  });
  sink.result.report.accepted = articles.size();
  return std::move(sink.result);
}

}  // namespace cherry
