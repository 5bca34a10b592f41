#include "cherry/annotate.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <set>
#include <thread>

#include "httplib.h"

#include "cherry/error.hpp"
#include "cherry/scoring.hpp"

namespace cherry {

Roster Roster::load(const std::filesystem::path& path) {
  const json j = parse_json(read_file(path), path.string());
  Roster r;
  try {
    for (const auto& a : j.at("annotators")) {
      r.annotators.push_back({a.at("id").get<std::string>(), a.at("token").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw InvalidArgumentError(path.string() + ": " + e.what());
  }
  std::set<std::string> tokens;
  for (const auto& a : r.annotators) {
    if (a.id.empty() || a.token.empty()) throw ValidationError(path.string() + ": annotator without id or token");
    if (!tokens.insert(a.token).second) throw ValidationError(path.string() + ": duplicate token");
  }
  return r;
}

std::optional<std::string> Roster::annotator_for_token(std::string_view token) const {
  for (const auto& a : annotators) {
    if (a.token == token) return a.id;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

VoteStore::VoteStore(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(*path_)) {
    // A torn last line from a crash mid-write is dropped.
    const auto lines = split_lines(read_file(*path_));
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      try {
        auto parsed = parse_votes_jsonl(lines[i]);
        votes_.insert(votes_.end(), parsed.begin(), parsed.end());
      } catch (const Error&) {
        if (i + 1 != lines.size()) throw IntegrityError(path_->string() + ": corrupt vote at line " + std::to_string(i + 1));
      }
    }
  }
}

void VoteStore::append(const VoteRecord& vote) {
  std::lock_guard lock(mutex_);
  if (path_) {
    const std::string line = render_votes_jsonl(std::span(&vote, 1));
    const int fd = ::open(path_->c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) throw IoError("cannot open vote log " + path_->string());
    const ssize_t written = ::write(fd, line.data(), line.size());
    const bool ok = written == static_cast<ssize_t>(line.size()) && ::fsync(fd) == 0;
    ::close(fd);
    if (!ok) throw IoError("cannot persist vote to " + path_->string());
  }
  votes_.push_back(vote);
}

std::vector<VoteRecord> VoteStore::log() const {
  std::lock_guard lock(mutex_);
  return votes_;
}

std::vector<VoteRecord> VoteStore::export_votes(std::optional<std::string_view> event_id) const {
  const auto all = log();
  std::map<std::pair<std::string, std::string>, std::size_t> latest;
  for (std::size_t i = 0; i < all.size(); ++i) latest[{all[i].annotator, all[i].cluster_id}] = i;
  std::vector<VoteRecord> out;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (latest[{all[i].annotator, all[i].cluster_id}] != i) continue;
    if (event_id && all[i].event_id != *event_id) continue;
    out.push_back(all[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------

json to_json(const NextResponse& r) {
  json j{{"event_id", r.event_id},
         {"context", {{"article_id", r.context_article_id}, {"headline", r.context_headline}, {"text", r.context}}},
         {"progress", {{"labeled", r.progress.labeled}, {"total", r.progress.total}}},
         {"complete", !r.cluster.has_value()}};
  if (r.cluster) {
    j["cluster"] = {{"cluster_id", r.cluster->cluster_id},
                    {"index", r.cluster->index},
                    {"statements", r.cluster->statements},
                    {"singleton_noise", r.cluster->singleton_noise}};
  } else {
    j["cluster"] = nullptr;
  }
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

Redactor::Redactor(const Corpus& corpus) {
  std::set<std::string> needles;
  auto add = [&](std::string_view s) {
    const std::string n = to_lower_ascii(trim(s));
    if (!n.empty()) needles.insert(n);
  };
  for (const auto& o : corpus.outlets) {
    add(o.name);
    add(o.domain);
    std::string d = to_lower_ascii(o.domain);
    if (d.rfind("www.", 0) == 0) add(d.substr(4));
  }
  for (const auto& a : corpus.articles) add(a.url);
  needles_.assign(needles.begin(), needles.end());
  std::stable_sort(needles_.begin(), needles_.end(),
                   [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
}

std::string Redactor::apply(std::string_view text) const {
  std::string out(text);
  for (const auto& needle : needles_) {
    std::string lower = to_lower_ascii(out);
    std::size_t pos = 0;
    std::string next;
    std::size_t last = 0;
    while ((pos = lower.find(needle, pos)) != std::string::npos) {
      next.append(out, last, pos - last);
      next += kRedaction;
      pos += needle.size();
      last = pos;
    }
    if (last == 0 && next.empty()) continue;
    next.append(out, last, std::string::npos);
    out = std::move(next);
  }
  return out;
}

AnnotationService::AnnotationService(const Corpus& corpus, VoteStore& store)
    : corpus_(corpus), index_(corpus), store_(store), redactor_(corpus) {}

std::vector<const StatementCluster*> AnnotationService::presentation_order(const std::string& event_id) const {
  auto clusters = index_.clusters_of(event_id);
  auto key = [&](const StatementCluster* c) {
    const Statement* s = index_.statement(c->representative_id);
    const Article* a = s ? index_.article(s->article_id) : nullptr;
    return std::make_tuple(a ? a->published_at : Timestamp{}, s ? s->ordinal : 0, c->id);
  };
  std::sort(clusters.begin(), clusters.end(),
            [&](const StatementCluster* x, const StatementCluster* y) { return key(x) < key(y); });
  return clusters;
}

const Article& AnnotationService::context_article(const std::string& event_id) const {
  const Event* event = index_.event(event_id);
  if (!event) throw NotFoundError("unknown event '" + event_id + "'");
  const Article* a = select_neutral_article(*event, index_);
  if (!a) throw ContextUnavailableError("event " + event_id + " has no article from a Center outlet");
  return *a;
}

std::size_t AnnotationService::first_unlabeled(const std::string& annotator, const std::string& event_id,
                                               std::size_t from) const {
  const auto order = presentation_order(event_id);
  std::set<std::string> done;
  for (const auto& v : store_.export_votes(event_id)) {
    if (v.annotator == annotator) done.insert(v.cluster_id);
  }
  std::size_t i = from;
  while (i < order.size() && done.count(order[i]->id)) ++i;
  return i;
}

NextResponse AnnotationService::respond(const std::string& annotator, const Session& session) const {
  const Article& context = context_article(session.event_id);
  const auto order = presentation_order(session.event_id);
  NextResponse r;
  r.event_id = session.event_id;
  r.context_article_id = context.id;
  r.context_headline = redactor_.apply(context.headline);
  r.context = redactor_.apply(context.body);
  r.progress.total = order.size();
  std::set<std::string> done;
  for (const auto& v : store_.export_votes(session.event_id)) {
    if (v.annotator == annotator) done.insert(v.cluster_id);
  }
  r.progress.labeled = done.size();
  if (session.cursor < order.size()) {
    const StatementCluster* c = order[session.cursor];
    ClusterView view{c->id, session.cursor, {}, c->singleton_noise};
    for (const auto& sid : c->statement_ids) {
      if (const Statement* s = index_.statement(sid)) view.statements.push_back(redactor_.apply(s->text));
    }
    r.cluster = std::move(view);
  } else {
    r.message = std::string(kCompletionMessage);
  }
  return r;
}

NextResponse AnnotationService::open_event(const std::string& annotator, const std::string& event_id) {
  if (annotator.empty()) throw InvalidArgumentError("annotator is required");
  context_article(event_id);
  std::lock_guard lock(mutex_);
  Session& s = sessions_[annotator];
  if (s.event_id != event_id) s = Session{event_id, first_unlabeled(annotator, event_id, 0)};
  return respond(annotator, s);
}

NextResponse AnnotationService::submit_label(const std::string& annotator, const std::string& cluster_id, int label,
                                             Timestamp submitted_at) {
  if (label < 1 || label > 5) throw ValidationError("label must lie in 1..5, got " + std::to_string(label));
  const StatementCluster* cluster = index_.cluster(cluster_id);
  if (!cluster) throw NotFoundError("unknown cluster '" + cluster_id + "'");
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(annotator);
  if (it == sessions_.end()) throw ConflictError("annotator '" + annotator + "' has no open event");
  Session& s = it->second;
  if (cluster->event_id != s.event_id) {
    throw ConflictError("cluster " + cluster_id + " is not part of the open event " + s.event_id);
  }
  const auto order = presentation_order(s.event_id);
  const auto pos = static_cast<std::size_t>(
      std::find_if(order.begin(), order.end(), [&](const StatementCluster* c) { return c->id == cluster_id; }) -
      order.begin());
  if (pos > s.cursor) throw ConflictError("cluster " + cluster_id + " is stale; the session is at another cluster");

  const Article& context = context_article(s.event_id);
  store_.append({annotator, cluster_id, s.event_id, context.id, label_from_int(label), submitted_at});
  if (pos == s.cursor) s.cursor = first_unlabeled(annotator, s.event_id, s.cursor);
  return respond(annotator, s);
}

std::vector<VoteRecord> AnnotationService::export_votes(std::optional<std::string_view> event_id) const {
  return store_.export_votes(event_id);
}

// ---------------------------------------------------------------------------

namespace {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kValidation: return 400;
    case ErrorCode::kUnauthorized: return 401;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict: return 409;
    case ErrorCode::kContextUnavailable: return 422;
    default: return 500;
  }
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  res.status = status;
  res.set_content(json{{"code", code}, {"message", message}}.dump(), "application/json");
}

}  // namespace

struct AnnotationServer::Impl {
  AnnotationService& service;
  std::optional<Roster> roster;
  httplib::Server server;
  std::thread thread;

  Impl(AnnotationService& s, std::optional<Roster> r) : service(s), roster(std::move(r)) {}

  void authorize(const httplib::Request& req, const std::string& annotator) const {
    if (!roster) return;
    const std::string header = req.get_header_value("Authorization");
    constexpr std::string_view kBearer = "Bearer ";
    if (header.rfind(kBearer, 0) != 0) throw UnauthorizedError("missing bearer token");
    const auto who = roster->annotator_for_token(std::string_view(header).substr(kBearer.size()));
    if (!who) throw UnauthorizedError("unknown token");
    if (*who != annotator) throw UnauthorizedError("token does not belong to annotator '" + annotator + "'");
  }

  template <typename F>
  void guarded(httplib::Response& res, F&& body) {
    try {
      body();
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), error_code_name(e.code()), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  }
};

AnnotationServer::AnnotationServer(AnnotationService& service, std::optional<Roster> roster,
                                   std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(service, std::move(roster))) {
  Impl& im = *impl_;
  im.server.Get(R"(/events/([^/]+)/next)", [&im](const httplib::Request& req, httplib::Response& res) {
    im.guarded(res, [&] {
      const std::string annotator = req.get_param_value("annotator");
      if (annotator.empty()) throw InvalidArgumentError("query parameter 'annotator' is required");
      im.authorize(req, annotator);
      res.set_content(to_json(im.service.open_event(annotator, req.matches[1])).dump(), "application/json");
    });
  });
  im.server.Post("/labels", [&im](const httplib::Request& req, httplib::Response& res) {
    im.guarded(res, [&] {
      const json body = parse_json(req.body, "label submission");
      std::string annotator, cluster_id;
      int label = 0;
      try {
        annotator = body.at("annotator").get<std::string>();
        cluster_id = body.at("cluster_id").get<std::string>();
        label = body.at("label").get<int>();
      } catch (const json::exception& e) {
        throw InvalidArgumentError(std::string("label submission: ") + e.what());
      }
      im.authorize(req, annotator);
      const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
      res.set_content(to_json(im.service.submit_label(annotator, cluster_id, label, now)).dump(), "application/json");
    });
  });
  im.server.Get("/export", [&im](const httplib::Request& req, httplib::Response& res) {
    im.guarded(res, [&] {
      if (im.roster) {
        const std::string header = req.get_header_value("Authorization");
        if (header.rfind("Bearer ", 0) != 0 || !im.roster->annotator_for_token(header.substr(7))) {
          throw UnauthorizedError("missing or unknown bearer token");
        }
      }
      std::optional<std::string> event;
      if (req.has_param("event")) event = req.get_param_value("event");
      const auto votes = im.service.export_votes(event);
      res.set_content(render_votes_jsonl(votes), "application/x-ndjson");
    });
  });
  if (static_dir) im.server.set_mount_point("/", static_dir->string());
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void AnnotationServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void AnnotationServer::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace cherry
