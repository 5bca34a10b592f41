#include "doctest.h"

#include <fstream>

#include "httplib.h"

#include "cherry/annotate.hpp"
#include "cherry/error.hpp"
#include "cherry/json_io.hpp"
#include "test_support.hpp"

using namespace cherry;

namespace {

Timestamp at(int minute) { return parse_timestamp("2020-06-01T00:00:00Z") + std::chrono::minutes(minute); }

// Two events. The first has three clusters whose presentation order is
// c0 (center, ordinal 0), n0 (center, ordinal 1), c1 (left, 09:00).
struct Fixture {
  Corpus corpus;
  std::string event_id;
  std::string other_event;
  std::vector<std::string> order;  // expected presentation order
  std::string other_cluster;

  Fixture() {
    corpus.outlets = {testing::make_outlet("mid", BiasCategory::kCenter),
                      testing::make_outlet("left", BiasCategory::kLeft),
                      testing::make_outlet("right", BiasCategory::kRight)};
    const auto mid = testing::make_article(
        "mid", "dam", "The dam near the river failed overnight. Outlet left said repairs start soon. See mid.example for maps.",
        "2020-05-02T08:00:00Z", "Dam fails, Outlet mid reports");
    const auto left = testing::make_article(
        "left", "dam", "Water covered the valley roads. The dam near the river failed overnight. Crews from left.example arrived.",
        "2020-05-02T09:00:00Z");
    testing::add_event(corpus, {mid, left}, "Dam");
    event_id = corpus.events[0].id;

    auto cluster = [&](const std::string& suffix, const std::string& event, std::vector<std::string> ids,
                       bool noise = false) {
      StatementCluster c;
      c.id = event + "/" + suffix;
      c.event_id = event;
      c.representative_id = ids.front();
      c.statement_ids = std::move(ids);
      c.singleton_noise = noise;
      corpus.clusters.push_back(c);
      return c.id;
    };
    // Inserted out of order on purpose.
    const std::string c1 = cluster("c0001", event_id, {make_statement_id(left.id, 2)}, false);
    const std::string c0 = cluster("c0000", event_id, {make_statement_id(mid.id, 0), make_statement_id(left.id, 1)});
    const std::string n0 = cluster("n0000", event_id, {make_statement_id(mid.id, 1)}, true);
    order = {c0, n0, c1};

    const auto mid2 = testing::make_article("mid", "fire", "A warehouse fire burned for hours.", "2020-07-01T08:00:00Z");
    const auto right2 = testing::make_article("right", "fire", "A warehouse fire burned for hours. Smoke drifted east.",
                                              "2020-07-01T10:00:00Z");
    testing::add_event(corpus, {mid2, right2}, "Fire");
    other_event = corpus.events[1].id;
    other_cluster = cluster("c0000", other_event, {make_statement_id(mid2.id, 0), make_statement_id(right2.id, 0)});
  }
};

void check_redacted(const Corpus& corpus, const std::string& payload) {
  const std::string lower = to_lower_ascii(payload);
  for (const auto& o : corpus.outlets) {
    CHECK_MESSAGE(lower.find(to_lower_ascii(o.name)) == std::string::npos, o.name);
    CHECK_MESSAGE(lower.find(to_lower_ascii(o.domain)) == std::string::npos, o.domain);
  }
  for (const auto& a : corpus.articles) CHECK(lower.find(to_lower_ascii(a.url)) == std::string::npos);
}

}  // namespace

TEST_CASE("presentation order follows representative time then ordinal") {
  Fixture f;
  VoteStore store;
  AnnotationService service(f.corpus, store);
  std::vector<std::string> got;
  for (const auto* c : service.presentation_order(f.event_id)) got.push_back(c->id);
  CHECK(got == f.order);
}

TEST_CASE("walking an event cluster by cluster") {
  Fixture f;
  VoteStore store;
  AnnotationService service(f.corpus, store);

  auto r = service.open_event("ann", f.event_id);
  CHECK(r.event_id == f.event_id);
  CHECK(r.context_article_id == f.corpus.articles[0].id);
  REQUIRE(r.cluster);
  CHECK(r.cluster->cluster_id == f.order[0]);
  CHECK(r.cluster->index == 0);
  CHECK(r.cluster->statements.size() == 2);
  CHECK(r.progress.labeled == 0);
  CHECK(r.progress.total == 3);

  r = service.submit_label("ann", f.order[0], 1, at(0));
  REQUIRE(r.cluster);
  CHECK(r.cluster->cluster_id == f.order[1]);
  CHECK(r.cluster->singleton_noise);
  CHECK(r.progress.labeled == 1);

  r = service.submit_label("ann", f.order[1], 3, at(1));
  CHECK(r.cluster->cluster_id == f.order[2]);
  r = service.submit_label("ann", f.order[2], 5, at(2));
  CHECK_FALSE(r.cluster);
  CHECK(r.message == kCompletionMessage);
  CHECK(r.progress.labeled == 3);

  // Reopening a finished event says so again.
  r = service.open_event("ann", f.event_id);
  CHECK_FALSE(r.cluster);
  CHECK(r.message == kCompletionMessage);

  const auto votes = service.export_votes();
  REQUIRE(votes.size() == 3);
  CHECK(votes[0].label == ImportanceLabel::kVeryImportant);
  CHECK(votes[2].label == label_from_int(5));
  for (const auto& v : votes) {
    CHECK(v.event_id == f.event_id);
    CHECK(v.context_article_id == f.corpus.articles[0].id);
  }
}

TEST_CASE("reopening resumes at the first unlabeled cluster") {
  Fixture f;
  VoteStore store;
  {
    AnnotationService service(f.corpus, store);
    service.open_event("ann", f.event_id);
    service.submit_label("ann", f.order[0], 2, at(0));
  }
  AnnotationService fresh(f.corpus, store);
  const auto r = fresh.open_event("ann", f.event_id);
  REQUIRE(r.cluster);
  CHECK(r.cluster->cluster_id == f.order[1]);
  // Another annotator starts from the top.
  CHECK(fresh.open_event("other", f.event_id).cluster->cluster_id == f.order[0]);
}

TEST_CASE("submission errors") {
  Fixture f;
  VoteStore store;
  AnnotationService service(f.corpus, store);

  CHECK_THROWS_AS(service.open_event("ann", "no-such-event"), NotFoundError);
  CHECK_THROWS_AS(service.open_event("", f.event_id), InvalidArgumentError);
  CHECK_THROWS_AS(service.submit_label("ann", f.order[0], 1, at(0)), ConflictError);  // no session

  service.open_event("ann", f.event_id);
  for (int bad : {0, 6, 7, -1}) {
    CHECK_THROWS_AS(service.submit_label("ann", f.order[0], bad, at(0)), ValidationError);
  }
  CHECK(service.open_event("ann", f.event_id).cluster->cluster_id == f.order[0]);  // cursor unchanged
  CHECK(store.log().empty());

  CHECK_THROWS_AS(service.submit_label("ann", f.event_id + "/c9999", 1, at(0)), NotFoundError);
  CHECK_THROWS_AS(service.submit_label("ann", f.other_cluster, 1, at(0)), ConflictError);
  // Skipping ahead of the cursor.
  CHECK_THROWS_AS(service.submit_label("ann", f.order[2], 1, at(0)), ConflictError);
  CHECK(store.log().empty());
}

TEST_CASE("no center article means no context") {
  Corpus corpus;
  corpus.outlets = {testing::make_outlet("l", BiasCategory::kLeft), testing::make_outlet("r", BiasCategory::kRight)};
  testing::add_event(corpus, {testing::make_article("l", "x", "One line.", "2020-01-01T00:00:00Z"),
                              testing::make_article("r", "x", "Other line.", "2020-01-01T01:00:00Z")});
  VoteStore store;
  AnnotationService service(corpus, store);
  CHECK_THROWS_AS(service.open_event("ann", corpus.events[0].id), ContextUnavailableError);
}

TEST_CASE("resubmission keeps one effective vote") {
  Fixture f;
  VoteStore store;
  AnnotationService service(f.corpus, store);
  service.open_event("ann", f.event_id);
  service.submit_label("ann", f.order[0], 1, at(0));
  const auto r = service.submit_label("ann", f.order[0], 2, at(1));
  CHECK(r.cluster->cluster_id == f.order[1]);  // going back does not move the cursor
  CHECK(store.log().size() == 2);
  const auto votes = service.export_votes();
  REQUIRE(votes.size() == 1);
  CHECK(votes[0].label == label_from_int(2));
  CHECK(votes[0].submitted_at == at(1));
}

TEST_CASE("export counts, filters and dedups") {
  Fixture f;
  VoteStore store;
  CHECK(store.export_votes().empty());
  AnnotationService service(f.corpus, store);
  for (const std::string who : {"a", "b", "c"}) {
    service.open_event(who, f.event_id);
    service.submit_label(who, f.order[0], 1, at(0));
    service.submit_label(who, f.order[1], 4, at(1));
  }
  CHECK(service.export_votes().size() == 6);
  service.open_event("a", f.other_event);
  service.submit_label("a", f.other_cluster, 5, at(2));
  CHECK(service.export_votes().size() == 7);
  CHECK(service.export_votes(f.event_id).size() == 6);
  CHECK(service.export_votes(f.other_event).size() == 1);
  CHECK(service.export_votes("missing").empty());

  // Dedup oracle: the last log entry per (annotator, cluster), in log order.
  service.open_event("b", f.event_id);
  service.submit_label("b", f.order[0], 3, at(3));
  const auto log = store.log();
  std::vector<VoteRecord> want;
  for (std::size_t i = 0; i < log.size(); ++i) {
    bool later = false;
    for (std::size_t j = i + 1; j < log.size(); ++j) {
      later |= log[j].annotator == log[i].annotator && log[j].cluster_id == log[i].cluster_id;
    }
    if (!later) want.push_back(log[i]);
  }
  CHECK(service.export_votes() == want);
}

TEST_CASE("votes survive a restart") {
  Fixture f;
  testing::TempDir dir;
  const auto path = dir / "votes.jsonl";
  std::vector<VoteRecord> acknowledged;
  {
    VoteStore store(path);
    AnnotationService service(f.corpus, store);
    service.open_event("ann", f.event_id);
    service.submit_label("ann", f.order[0], 1, at(0));
    service.submit_label("ann", f.order[1], 2, at(1));
    acknowledged = service.export_votes();
  }
  {
    VoteStore store(path);
    CHECK(store.export_votes() == acknowledged);
  }

  SUBCASE("torn last line is dropped") {
    std::ofstream(path, std::ios::app) << "{\"annotator\":\"ann\",\"clus";
    VoteStore store(path);
    CHECK(store.export_votes() == acknowledged);
  }
  SUBCASE("corruption before the end is an integrity error") {
    const std::string content = read_file(path);
    std::ofstream(path, std::ios::trunc) << "not json\n" << content;
    CHECK_THROWS_AS(VoteStore{path}, IntegrityError);
  }
}

TEST_CASE("responses withhold outlet names, domains and urls") {
  Fixture f;
  VoteStore store;
  AnnotationService service(f.corpus, store);
  auto r = service.open_event("ann", f.event_id);
  const std::string first = to_json(r).dump();
  check_redacted(f.corpus, first);
  CHECK(first.find(std::string(kRedaction)) != std::string::npos);
  CHECK(r.context_headline == "Dam fails, [source] reports");
  while (r.cluster) {
    check_redacted(f.corpus, to_json(r).dump());
    r = service.submit_label("ann", r.cluster->cluster_id, 3, at(0));
  }

  Redactor redactor(f.corpus);
  CHECK(redactor.apply("OUTLET MID and Mid.Example") == "[source] and [source]");
  CHECK(redactor.apply("nothing here") == "nothing here");
}

TEST_CASE("roster loading") {
  testing::TempDir dir;
  std::ofstream(dir / "ok.json") << R"({"annotators":[{"id":"a","token":"t1"},{"id":"b","token":"t2"}]})";
  const auto roster = Roster::load(dir / "ok.json");
  CHECK(roster.annotator_for_token("t2") == std::optional<std::string>("b"));
  CHECK_FALSE(roster.annotator_for_token("t3"));
  std::ofstream(dir / "dup.json") << R"({"annotators":[{"id":"a","token":"t"},{"id":"b","token":"t"}]})";
  CHECK_THROWS_AS(Roster::load(dir / "dup.json"), ValidationError);
  std::ofstream(dir / "bad.json") << R"({"annotators":[{"id":"a"}]})";
  CHECK_THROWS_AS(Roster::load(dir / "bad.json"), InvalidArgumentError);
}

TEST_CASE("rest interface") {
  Fixture f;
  testing::TempDir dir;
  VoteStore store(dir / "votes.jsonl");
  AnnotationService service(f.corpus, store);
  Roster roster;
  roster.annotators = {{"ann", "secret-a"}, {"bob", "secret-b"}};
  AnnotationServer server(service, roster);
  const int port = server.start("127.0.0.1", 0);
  REQUIRE(port > 0);

  httplib::Client client("127.0.0.1", port);
  const httplib::Headers ann{{"Authorization", "Bearer secret-a"}};
  const httplib::Headers bob{{"Authorization", "Bearer secret-b"}};
  const std::string next = "/events/" + f.event_id + "/next?annotator=ann";
  auto post_label = [&](const httplib::Headers& h, const json& body) {
    return client.Post("/labels", h, body.dump(), "application/json");
  };
  auto error_code = [](const httplib::Result& res) { return json::parse(res->body).at("code").get<std::string>(); };

  SUBCASE("auth") {
    auto res = client.Get(next);
    REQUIRE(res);
    CHECK(res->status == 401);
    CHECK(json::parse(res->body).contains("message"));
    CHECK(client.Get(next, bob)->status == 401);  // someone else's token
    CHECK(client.Get(next, {{"Authorization", "Bearer nope"}})->status == 401);
    CHECK(client.Get("/export")->status == 401);
    CHECK(post_label(bob, {{"annotator", "ann"}, {"cluster_id", f.order[0]}, {"label", 1}})->status == 401);
  }

  SUBCASE("workflow and export") {
    auto res = client.Get(next, ann);
    REQUIRE(res);
    REQUIRE(res->status == 200);
    auto body = json::parse(res->body);
    check_redacted(f.corpus, res->body);
    CHECK(body["cluster"]["cluster_id"] == f.order[0]);
    CHECK(body["progress"]["total"] == 3);
    CHECK(body["complete"] == false);

    for (std::size_t i = 0; i < f.order.size(); ++i) {
      res = post_label(ann, {{"annotator", "ann"}, {"cluster_id", f.order[i]}, {"label", 2}});
      REQUIRE(res->status == 200);
    }
    body = json::parse(res->body);
    CHECK(body["complete"] == true);
    CHECK(body["cluster"].is_null());
    CHECK(body["message"] == kCompletionMessage);

    res = client.Get("/export?event=" + f.event_id, bob);
    REQUIRE(res->status == 200);
    const auto exported = parse_votes_jsonl(res->body);
    CHECK(exported == store.export_votes());
    CHECK(exported.size() == 3);
    CHECK(client.Get("/export?event=" + f.other_event, bob)->body.empty());
  }

  SUBCASE("error statuses") {
    auto res = client.Get("/events/unknown/next?annotator=ann", ann);
    CHECK(res->status == 404);
    CHECK(error_code(res) == "not_found");
    CHECK(client.Get("/events/" + f.event_id + "/next", ann)->status == 400);

    client.Get(next, ann);
    res = post_label(ann, {{"annotator", "ann"}, {"cluster_id", f.order[0]}, {"label", 7}});
    CHECK(res->status == 400);
    CHECK(error_code(res) == "validation");
    CHECK(post_label(ann, {{"annotator", "ann"}, {"cluster_id", f.order[0]}})->status == 400);
    CHECK(client.Post("/labels", ann, "{oops", "application/json")->status == 400);
    CHECK(post_label(ann, {{"annotator", "ann"}, {"cluster_id", "zz/c0000"}, {"label", 1}})->status == 404);
    res = post_label(ann, {{"annotator", "ann"}, {"cluster_id", f.other_cluster}, {"label", 1}});
    CHECK(res->status == 409);
    CHECK(error_code(res) == "conflict");
    CHECK(store.log().empty());
  }
  server.stop();
}
