#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cherry/dataset.hpp"
#include "cherry/json_io.hpp"
#include "cherry/model.hpp"

namespace cherry {

struct Annotator {
  std::string id;
  std::string token;
};

// {"annotators": [{"id": "...", "token": "..."}]}
struct Roster {
  std::vector<Annotator> annotators;

  static Roster load(const std::filesystem::path& path);
  std::optional<std::string> annotator_for_token(std::string_view token) const;
};

// Append-only vote log. With a path every vote is flushed and fsynced
// before append returns, and an existing log is replayed on construction.
class VoteStore {
 public:
  VoteStore() = default;  // memory only
  explicit VoteStore(std::filesystem::path path);

  void append(const VoteRecord& vote);
  std::vector<VoteRecord> log() const;
  // Latest vote per (annotator, cluster), in the append order of those
  // latest votes, optionally restricted to one event.
  std::vector<VoteRecord> export_votes(std::optional<std::string_view> event_id = std::nullopt) const;

 private:
  std::optional<std::filesystem::path> path_;
  mutable std::mutex mutex_;
  std::vector<VoteRecord> votes_;
};

struct ClusterView {
  std::string cluster_id;
  std::size_t index = 0;  // position in presentation order
  std::vector<std::string> statements;
  bool singleton_noise = false;
};

struct AnnotationProgress {
  std::size_t labeled = 0;
  std::size_t total = 0;
};

struct NextResponse {
  std::string event_id;
  std::string context_article_id;
  std::string context_headline;
  std::string context;
  std::optional<ClusterView> cluster;  // empty once the event is complete
  AnnotationProgress progress;
  std::string message;
};

json to_json(const NextResponse& response);

inline constexpr std::string_view kRedaction = "[source]";
inline constexpr std::string_view kCompletionMessage =
    "All clusters of this event are labeled. Enter a new event ID.";

// Replaces every outlet name, domain and article URL of the corpus with
// kRedaction, ignoring ASCII case.
class Redactor {
 public:
  explicit Redactor(const Corpus& corpus);
  std::string apply(std::string_view text) const;

 private:
  std::vector<std::string> needles_;  // lower-cased, longest first
};

class AnnotationService {
 public:
  AnnotationService(const Corpus& corpus, VoteStore& store);

  // Starts or resumes the annotator's session on the event.
  NextResponse open_event(const std::string& annotator, const std::string& event_id);
  // The cluster must belong to the annotator's open event. Labeling the
  // cluster at the cursor advances it; relabeling an earlier cluster
  // replaces that vote and leaves the cursor alone; a cluster past the
  // cursor is stale.
  NextResponse submit_label(const std::string& annotator, const std::string& cluster_id, int label,
                            Timestamp submitted_at);
  std::vector<VoteRecord> export_votes(std::optional<std::string_view> event_id = std::nullopt) const;

  // Clusters of an event by representative article time, then ordinal, then id.
  std::vector<const StatementCluster*> presentation_order(const std::string& event_id) const;

 private:
  struct Session {
    std::string event_id;
    std::size_t cursor = 0;
  };

  NextResponse respond(const std::string& annotator, const Session& session) const;
  std::size_t first_unlabeled(const std::string& annotator, const std::string& event_id, std::size_t from) const;
  const Article& context_article(const std::string& event_id) const;

  const Corpus& corpus_;
  CorpusIndex index_;
  VoteStore& store_;
  Redactor redactor_;
  mutable std::mutex mutex_;
  std::map<std::string, Session> sessions_;
};

// REST front end:
//   GET  /events/{id}/next?annotator=A
//   POST /labels {"annotator", "cluster_id", "label"}
//   GET  /export[?event=E]  (JSONL)
// Errors are {"code", "message"}. With a roster every request needs
// "Authorization: Bearer <token>" naming the same annotator.
class AnnotationServer {
 public:
  AnnotationServer(AnnotationService& service, std::optional<Roster> roster = std::nullopt,
                   std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~AnnotationServer();

  // Port 0 picks a free port. Returns the bound port; serving happens on a
  // background thread until stop().
  int start(const std::string& host, int port);
  void stop();
  // Blocks until the server stops.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cherry
