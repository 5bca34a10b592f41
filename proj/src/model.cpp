#include "cherry/model.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_set>

#include "cherry/error.hpp"
#include "cherry/json_io.hpp"

namespace cherry {

int bias_ordinal(BiasCategory category) {
  switch (category) {
    case BiasCategory::kLeft: return -2;
    case BiasCategory::kLeftCenter: return -1;
    case BiasCategory::kCenter: return 0;
    case BiasCategory::kRightCenter: return 1;
    case BiasCategory::kRight: return 2;
  }
  return 0;
}

BiasCategory bias_from_ordinal(int ordinal) {
  switch (ordinal) {
    case -2: return BiasCategory::kLeft;
    case -1: return BiasCategory::kLeftCenter;
    case 0: return BiasCategory::kCenter;
    case 1: return BiasCategory::kRightCenter;
    case 2: return BiasCategory::kRight;
    default: throw InvalidArgumentError("bias ordinal out of range: " + std::to_string(ordinal));
  }
}

std::string_view to_string(BiasCategory category) {
  switch (category) {
    case BiasCategory::kLeft: return "Left";
    case BiasCategory::kLeftCenter: return "LeftCenter";
    case BiasCategory::kCenter: return "Center";
    case BiasCategory::kRightCenter: return "RightCenter";
    case BiasCategory::kRight: return "Right";
  }
  return "Center";
}

std::string_view to_string(Rater rater) {
  switch (rater) {
    case Rater::kMbfc: return "MBFC";
    case Rater::kAllSides: return "AllSides";
    case Rater::kAdFontes: return "AdFontes";
  }
  return "MBFC";
}

std::string_view to_string(ArticleKind kind) {
  switch (kind) {
    case ArticleKind::kNews: return "news";
    case ArticleKind::kOpinion: return "opinion";
    case ArticleKind::kEditorial: return "editorial";
  }
  return "news";
}

BiasCategory parse_bias_category(std::string_view text) {
  for (auto c : {BiasCategory::kLeft, BiasCategory::kLeftCenter, BiasCategory::kCenter,
                 BiasCategory::kRightCenter, BiasCategory::kRight}) {
    if (to_string(c) == text) return c;
  }
  throw InvalidArgumentError("unknown bias category '" + std::string(text) + "'");
}

Rater parse_rater(std::string_view text) {
  for (auto r : {Rater::kMbfc, Rater::kAllSides, Rater::kAdFontes}) {
    if (to_string(r) == text) return r;
  }
  throw InvalidArgumentError("unknown bias rater '" + std::string(text) + "'");
}

ArticleKind parse_article_kind(std::string_view text) {
  for (auto k : {ArticleKind::kNews, ArticleKind::kOpinion, ArticleKind::kEditorial}) {
    if (to_string(k) == text) return k;
  }
  throw InvalidArgumentError("unknown article kind '" + std::string(text) + "'");
}

std::string make_article_id(std::string_view outlet_id, std::string_view url) {
  std::string key(outlet_id);
  key.push_back('\n');
  key.append(url);
  return "a" + sha256_hex(key).substr(0, 16);
}

std::string make_statement_id(std::string_view article_id, std::size_t ordinal) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), ":%05zu", ordinal);
  return std::string(article_id) + buf;
}

std::string make_event_id(const std::vector<std::string>& sorted_article_ids) {
  std::string key;
  for (const auto& id : sorted_article_ids) {
    key += id;
    key.push_back('\n');
  }
  return "e" + sha256_hex(key).substr(0, 16);
}

// ---------------------------------------------------------------------------

CorpusIndex::CorpusIndex(const Corpus& corpus) : corpus_(corpus) {
  for (std::size_t i = 0; i < corpus.outlets.size(); ++i) outlets_.emplace(corpus.outlets[i].id, i);
  for (std::size_t i = 0; i < corpus.articles.size(); ++i) articles_.emplace(corpus.articles[i].id, i);
  for (std::size_t i = 0; i < corpus.statements.size(); ++i) {
    statements_.emplace(corpus.statements[i].id, i);
    by_article_[corpus.statements[i].article_id].push_back(i);
  }
  for (auto& [_, list] : by_article_) {
    std::sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
      return corpus.statements[a].ordinal < corpus.statements[b].ordinal;
    });
  }
  for (std::size_t i = 0; i < corpus.events.size(); ++i) events_.emplace(corpus.events[i].id, i);
  for (std::size_t i = 0; i < corpus.clusters.size(); ++i) {
    clusters_.emplace(corpus.clusters[i].id, i);
    by_event_[corpus.clusters[i].event_id].push_back(i);
  }
}

namespace {
template <typename T>
const T* lookup(const std::unordered_map<std::string_view, std::size_t>& map,
                const std::vector<T>& items, std::string_view id) {
  auto it = map.find(id);
  return it == map.end() ? nullptr : &items[it->second];
}
}  // namespace

const Outlet* CorpusIndex::outlet(std::string_view id) const { return lookup(outlets_, corpus_.outlets, id); }
const Article* CorpusIndex::article(std::string_view id) const { return lookup(articles_, corpus_.articles, id); }
const Statement* CorpusIndex::statement(std::string_view id) const {
  return lookup(statements_, corpus_.statements, id);
}
const Event* CorpusIndex::event(std::string_view id) const { return lookup(events_, corpus_.events, id); }
const StatementCluster* CorpusIndex::cluster(std::string_view id) const {
  return lookup(clusters_, corpus_.clusters, id);
}

const Outlet* CorpusIndex::outlet_of(const Article& article) const { return outlet(article.outlet_id); }

std::vector<const Statement*> CorpusIndex::statements_of(std::string_view article_id) const {
  std::vector<const Statement*> out;
  if (auto it = by_article_.find(article_id); it != by_article_.end()) {
    for (std::size_t i : it->second) out.push_back(&corpus_.statements[i]);
  }
  return out;
}

std::vector<const StatementCluster*> CorpusIndex::clusters_of(std::string_view event_id) const {
  std::vector<const StatementCluster*> out;
  if (auto it = by_event_.find(event_id); it != by_event_.end()) {
    for (std::size_t i : it->second) out.push_back(&corpus_.clusters[i]);
  }
  return out;
}

UniversalStatementSet universal_statement_set(const CorpusIndex& index, const Event& event) {
  UniversalStatementSet set{event.id, {}};
  std::unordered_set<std::string> seen;
  for (const auto& article_id : event.article_ids) {
    for (const Statement* s : index.statements_of(article_id)) {
      if (seen.insert(s->id).second) set.statement_ids.push_back(s->id);
    }
  }
  return set;
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
void check_unique_ids(const std::vector<T>& items, std::string_view type, std::vector<Violation>& out) {
  std::unordered_set<std::string_view> seen;
  for (const auto& item : items) {
    if (item.id.empty()) {
      out.push_back({item.id, std::string(type) + " with empty id"});
    } else if (!seen.insert(item.id).second) {
      out.push_back({item.id, "duplicate " + std::string(type) + " id"});
    }
  }
}

}  // namespace

std::vector<Violation> validate_corpus(const Corpus& corpus, const ValidationOptions& options) {
  std::vector<Violation> out;
  check_unique_ids(corpus.outlets, "outlet", out);
  check_unique_ids(corpus.articles, "article", out);
  check_unique_ids(corpus.statements, "statement", out);
  check_unique_ids(corpus.events, "event", out);
  check_unique_ids(corpus.clusters, "cluster", out);

  const CorpusIndex index(corpus);

  for (const auto& o : corpus.outlets) {
    if (o.bias_ratings.empty()) out.push_back({o.id, "outlet has no bias rating"});
    for (const auto& [rater, score] : o.bias_ratings) {
      if (score < -2 || score > 2) {
        out.push_back({o.id, "bias rating from " + std::string(to_string(rater)) + " outside -2..+2"});
      }
    }
  }

  for (const auto& a : corpus.articles) {
    if (!index.outlet(a.outlet_id)) out.push_back({a.id, "dangling outlet reference " + a.outlet_id});
    if (a.kind == ArticleKind::kNews && trim(a.body).empty()) out.push_back({a.id, "news article with empty body"});
    if (options.collection_window && !options.collection_window->contains(a.published_at)) {
      out.push_back({a.id, "article published outside the collection window"});
    }
  }

  std::map<std::string_view, std::vector<std::size_t>> ordinals;
  for (const auto& s : corpus.statements) {
    if (!index.article(s.article_id)) out.push_back({s.id, "dangling article reference " + s.article_id});
    if (s.word_count < 1) out.push_back({s.id, "statement with word_count below 1"});
    ordinals[s.article_id].push_back(s.ordinal);
  }
  for (auto& [article_id, list] : ordinals) {
    std::sort(list.begin(), list.end());
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i] != i) {
        out.push_back({std::string(article_id), "statement ordinals not contiguous from 0"});
        break;
      }
    }
  }

  for (const auto& e : corpus.events) {
    if (e.article_ids.size() < kMinEventSize) out.push_back({e.id, "event below min size 2"});
    if (e.window.end < e.window.start) out.push_back({e.id, "event window ends before it starts"});
    for (const auto& aid : e.article_ids) {
      const Article* a = index.article(aid);
      if (!a) {
        out.push_back({e.id, "dangling article reference " + aid});
      } else if (!e.window.contains(a->published_at)) {
        out.push_back({e.id, "member article " + aid + " outside event window"});
      }
    }
  }

  for (const auto& c : corpus.clusters) {
    const Event* e = index.event(c.event_id);
    if (!e) out.push_back({c.id, "dangling event reference " + c.event_id});
    for (const auto& sid : c.statement_ids) {
      const Statement* s = index.statement(sid);
      if (!s) {
        out.push_back({c.id, "dangling statement reference " + sid});
      } else if (e && !std::binary_search(e->article_ids.begin(), e->article_ids.end(), s->article_id)) {
        out.push_back({c.id, "member statement " + sid + " not from an event article"});
      }
    }
    if (std::find(c.statement_ids.begin(), c.statement_ids.end(), c.representative_id) == c.statement_ids.end()) {
      out.push_back({c.id, "representative not a member"});
    }
    if (c.singleton_noise ? c.statement_ids.size() != 1 : c.statement_ids.size() < 2) {
      out.push_back({c.id, "cluster size inconsistent with singleton-noise flag"});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

namespace fs = std::filesystem;

struct RecordFile {
  const char* count_key;
  const char* file_name;
};

constexpr RecordFile kFiles[] = {
    {"outlet", "outlets.jsonl"},     {"article", "articles.jsonl"}, {"statement", "statements.jsonl"},
    {"event", "events.jsonl"},       {"cluster", "clusters.jsonl"},
};

template <typename T>
std::string render_records(const std::vector<T>& items, const char* count_key) {
  std::string out = json{{"schema", std::string("cherry.") + count_key}, {"version", kSchemaVersion}}.dump();
  out.push_back('\n');
  for (const auto& item : items) {
    out += to_json(item).dump();
    out.push_back('\n');
  }
  return out;
}

template <typename T, typename Parse>
std::vector<T> parse_records(const std::string& text, const char* count_key, const fs::path& path, Parse parse) {
  auto lines = split_lines(text);
  if (lines.empty()) throw IntegrityError(path.string() + ": missing schema header");
  json header = parse_json(lines[0], path.string());
  if (header.value("schema", "") != std::string("cherry.") + count_key ||
      header.value("version", 0) != kSchemaVersion) {
    throw IntegrityError(path.string() + ": unsupported schema header");
  }
  std::vector<T> items;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    try {
      items.push_back(parse(parse_json(lines[i], path.string())));
    } catch (const json::exception& e) {
      throw IntegrityError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return items;
}

json manifest_to_json(const Manifest& m) {
  return json{{"schema_version", m.schema_version}, {"counts", m.counts}, {"sha256", m.sha256}, {"stages", m.stages}};
}

}  // namespace

Manifest save_corpus(const Corpus& corpus, const fs::path& dir, const std::vector<std::string>& stages) {
  if (auto violations = validate_corpus(corpus); !violations.empty()) {
    throw ValidationError("corpus invalid at record '" + violations.front().record_id +
                          "': " + violations.front().message);
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create corpus directory " + dir.string());

  const std::string contents[] = {
      render_records(corpus.outlets, "outlet"),     render_records(corpus.articles, "article"),
      render_records(corpus.statements, "statement"), render_records(corpus.events, "event"),
      render_records(corpus.clusters, "cluster"),
  };
  Manifest manifest;
  manifest.counts = {{"outlet", corpus.outlets.size()},
                     {"article", corpus.articles.size()},
                     {"statement", corpus.statements.size()},
                     {"event", corpus.events.size()},
                     {"cluster", corpus.clusters.size()}};
  std::string all;
  for (std::size_t i = 0; i < std::size(kFiles); ++i) {
    write_file_atomic(dir / kFiles[i].file_name, contents[i]);
    all += contents[i];
  }
  manifest.sha256 = sha256_hex(all);
  manifest.stages = stages;
  write_file_atomic(dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
  return manifest;
}

Manifest read_manifest(const fs::path& dir) {
  const auto path = dir / "manifest.json";
  if (!fs::exists(path)) throw IoError("missing manifest " + path.string());
  json j = parse_json(read_file(path), path.string());
  try {
    Manifest m;
    m.schema_version = j.at("schema_version").get<int>();
    m.counts = j.at("counts").get<std::map<std::string, std::size_t>>();
    m.sha256 = j.at("sha256").get<std::string>();
    m.stages = j.value("stages", std::vector<std::string>{});
    return m;
  } catch (const json::exception& e) {
    throw IntegrityError(path.string() + ": " + e.what());
  }
}

Corpus load_corpus(const fs::path& dir) {
  const Manifest manifest = read_manifest(dir);
  if (manifest.schema_version != kSchemaVersion) throw IntegrityError("unsupported corpus schema version");

  std::string texts[std::size(kFiles)];
  std::string all;
  for (std::size_t i = 0; i < std::size(kFiles); ++i) {
    const auto path = dir / kFiles[i].file_name;
    if (!fs::exists(path)) throw IoError("missing corpus file " + path.string());
    texts[i] = read_file(path);
    all += texts[i];
  }
  if (sha256_hex(all) != manifest.sha256) throw IntegrityError("corpus content hash does not match manifest");

  Corpus corpus;
  corpus.outlets = parse_records<Outlet>(texts[0], "outlet", dir / kFiles[0].file_name, outlet_from_json);
  corpus.articles = parse_records<Article>(texts[1], "article", dir / kFiles[1].file_name, article_from_json);
  corpus.statements = parse_records<Statement>(texts[2], "statement", dir / kFiles[2].file_name, statement_from_json);
  corpus.events = parse_records<Event>(texts[3], "event", dir / kFiles[3].file_name, event_from_json);
  corpus.clusters = parse_records<StatementCluster>(texts[4], "cluster", dir / kFiles[4].file_name, cluster_from_json);

  const std::size_t actual[] = {corpus.outlets.size(), corpus.articles.size(), corpus.statements.size(),
                                corpus.events.size(), corpus.clusters.size()};
  for (std::size_t i = 0; i < std::size(kFiles); ++i) {
    auto it = manifest.counts.find(kFiles[i].count_key);
    if (it == manifest.counts.end() || it->second != actual[i]) {
      throw IntegrityError(std::string("record count mismatch for ") + kFiles[i].count_key);
    }
  }

  for (const auto& v : validate_corpus(corpus)) {
    if (v.message.rfind("dangling", 0) == 0) {
      throw DanglingReferenceError("record '" + v.record_id + "': " + v.message);
    }
  }
  return corpus;
}

}  // namespace cherry
