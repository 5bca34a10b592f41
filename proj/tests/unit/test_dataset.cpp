#include "doctest.h"

#include <random>
#include <set>

#include "cherry/dataset.hpp"
#include "cherry/error.hpp"
#include "test_support.hpp"

using namespace cherry;

namespace {

struct Fixture {
  Corpus corpus;
  std::string event_id;
  std::string pair_cluster;
  std::string single_cluster;
  std::string context_article;

  Fixture() {
    corpus.outlets = {testing::make_outlet("mid", BiasCategory::kCenter),
                      testing::make_outlet("left", BiasCategory::kLeft)};
    testing::add_event(corpus,
                       {testing::make_article("mid", "e", "Shared fact about the dam. Extra center line here.",
                                              "2020-03-01T08:00:00Z"),
                        testing::make_article("left", "e", "Shared fact about the dam. Extra left line here.",
                                              "2020-03-01T09:00:00Z")});
    event_id = corpus.events[0].id;
    const auto& a = corpus.events[0].article_ids;
    context_article = corpus.articles[0].id;
    StatementCluster pair;
    pair.id = event_id + "/c0000";
    pair.event_id = event_id;
    pair.statement_ids = {make_statement_id(a[0], 0), make_statement_id(a[1], 0)};
    pair.representative_id = make_statement_id(corpus.articles[0].id, 0);
    StatementCluster single;
    single.id = event_id + "/n0000";
    single.event_id = event_id;
    single.statement_ids = {make_statement_id(corpus.articles[1].id, 1)};
    single.representative_id = single.statement_ids[0];
    single.singleton_noise = true;
    pair_cluster = pair.id;
    single_cluster = single.id;
    corpus.clusters = {pair, single};
  }

  VoteRecord vote(const std::string& who, int label, const std::string& cluster, int minute = 0) const {
    VoteRecord v;
    v.annotator = who;
    v.cluster_id = cluster;
    v.event_id = event_id;
    v.context_article_id = context_article;
    v.label = label_from_int(label);
    v.submitted_at = parse_timestamp("2020-04-01T00:00:00Z") + std::chrono::minutes(minute);
    return v;
  }
};

AnnotationExample example_with(std::vector<int> labels) {
  AnnotationExample e;
  std::map<int, int> counts;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    e.votes["a" + std::to_string(i)] = label_from_int(labels[i]);
    ++counts[labels[i]];
  }
  int best = 0;
  for (auto [l, c] : counts) {
    if (c > best) {
      best = c;
      e.label = label_from_int(l);
    }
  }
  e.agreement_ratio = double(best) / labels.size();
  return e;
}

}  // namespace

TEST_CASE("label wording and range") {
  CHECK(label_wording(ImportanceLabel::kVeryImportant) == "very important");
  CHECK(label_wording(ImportanceLabel::kKindOfImportant) == "kind of important");
  CHECK(label_wording(ImportanceLabel::kNotVeryImportant) == "not very important");
  CHECK(label_wording(ImportanceLabel::kExcerptsIncorrect) == "the excerpts might be incorrect");
  CHECK(label_wording(ImportanceLabel::kNotSure) == "I am not sure");
  CHECK_THROWS_AS(label_from_int(0), InvalidArgumentError);
  CHECK_THROWS_AS(label_from_int(6), InvalidArgumentError);
}

TEST_CASE("aggregation counts majority and agreement") {
  const Fixture f;
  const CorpusIndex index(f.corpus);
  SUBCASE("unanimous") {
    const std::vector<VoteRecord> v = {f.vote("A", 1, f.pair_cluster), f.vote("B", 1, f.pair_cluster),
                                       f.vote("C", 1, f.pair_cluster)};
    const auto ex = aggregate_annotations(v, index);
    REQUIRE(ex.size() == 1);
    CHECK(ex[0].label == ImportanceLabel::kVeryImportant);
    CHECK(ex[0].agreement_ratio == 1.0);
    CHECK(ex[0].cluster_id == f.pair_cluster);
    CHECK(ex[0].event_id == f.event_id);
    CHECK(ex[0].statement_id == f.corpus.clusters[0].representative_id);
  }
  SUBCASE("plurality") {
    const std::vector<VoteRecord> v = {f.vote("A", 1, f.pair_cluster), f.vote("B", 1, f.pair_cluster),
                                       f.vote("C", 2, f.pair_cluster), f.vote("D", 3, f.pair_cluster)};
    const auto ex = aggregate_annotations(v, index);
    REQUIRE(ex.size() == 1);
    CHECK(ex[0].label == ImportanceLabel::kVeryImportant);
    CHECK(ex[0].agreement_ratio == 0.5);
    CHECK(ex[0].vote_count() == 4);
  }
  SUBCASE("tie drops the example") {
    const std::vector<VoteRecord> v = {f.vote("A", 1, f.pair_cluster), f.vote("B", 2, f.pair_cluster)};
    CHECK(aggregate_annotations(v, index).empty());
  }
  SUBCASE("an annotator's last vote wins") {
    const std::vector<VoteRecord> v = {f.vote("A", 3, f.pair_cluster, 0), f.vote("B", 1, f.pair_cluster, 1),
                                       f.vote("A", 1, f.pair_cluster, 2)};
    const auto ex = aggregate_annotations(v, index);
    REQUIRE(ex.size() == 1);
    CHECK(ex[0].vote_count() == 2);
    CHECK(ex[0].agreement_ratio == 1.0);
  }
  SUBCASE("clusters aggregate separately") {
    const std::vector<VoteRecord> v = {f.vote("A", 1, f.pair_cluster), f.vote("A", 4, f.single_cluster)};
    CHECK(aggregate_annotations(v, index).size() == 2);
  }
  SUBCASE("unknown cluster") {
    const std::vector<VoteRecord> v = {f.vote("A", 1, "nope/c0000")};
    CHECK_THROWS_AS(aggregate_annotations(v, index), InvalidArgumentError);
  }
}

TEST_CASE("filter boundaries") {
  CHECK(filter_examples({example_with({1, 1, 1, 2})}).size() == 1);  // 0.75
  CHECK(filter_examples({example_with({1, 1})}).empty());             // two voters
  CHECK(filter_examples({example_with({1, 2, 3})}).empty());
  CHECK(filter_examples({example_with({1, 1, 1})}).size() == 1);
  AnnotationExample below = example_with({1, 1, 1, 2});
  below.agreement_ratio = 0.74;
  CHECK(filter_examples({below}).empty());

  std::mt19937_64 rng(1);
  std::vector<AnnotationExample> many;
  for (int i = 0; i < 200; ++i) {
    std::vector<int> labels(1 + rng() % 6);
    for (auto& l : labels) l = 1 + rng() % 3;
    many.push_back(example_with(labels));
  }
  const auto once = filter_examples(many);
  CHECK(filter_examples(once) == once);
  for (const auto& e : once) {
    CHECK(e.vote_count() >= 3);
    CHECK(e.agreement_ratio >= 0.75);
  }
}

TEST_CASE("casting labels over a cluster") {
  const Fixture f;
  const CorpusIndex index(f.corpus);
  const std::vector<VoteRecord> v = {f.vote("A", 2, f.pair_cluster), f.vote("B", 2, f.pair_cluster),
                                     f.vote("C", 2, f.pair_cluster)};
  const auto ex = aggregate_annotations(v, index);
  REQUIRE(ex.size() == 1);
  const auto cast = cast_labels(ex[0], f.corpus.clusters[0]);
  REQUIRE(cast.size() == 2);
  std::set<std::string> ids;
  for (const auto& c : cast) {
    CHECK(c.label == ImportanceLabel::kKindOfImportant);
    CHECK(c.context_article_id == f.context_article);
    CHECK(c.cluster_id == f.pair_cluster);
    ids.insert(c.statement_id);
  }
  CHECK(std::vector<std::string>(ids.begin(), ids.end()) == f.corpus.clusters[0].statement_ids);
  CHECK_THROWS_AS(cast_labels(ex[0], f.corpus.clusters[1]), InvalidArgumentError);
  const std::vector<VoteRecord> single = {f.vote("A", 3, f.single_cluster)};
  CHECK(cast_labels(aggregate_annotations(single, index).at(0), f.corpus.clusters[1]).size() == 1);
}

TEST_CASE("configuration mappings label by label") {
  using L = ImportanceLabel;
  const std::map<int, std::map<L, std::optional<int>>> want = {
      {1, {{L::kVeryImportant, 1}, {L::kKindOfImportant, 2}, {L::kNotVeryImportant, 2}, {L::kExcerptsIncorrect, 2},
           {L::kNotSure, 2}}},
      {2, {{L::kVeryImportant, 1}, {L::kKindOfImportant, 2}, {L::kNotVeryImportant, 2},
           {L::kExcerptsIncorrect, std::nullopt}, {L::kNotSure, std::nullopt}}},
      {3, {{L::kVeryImportant, 1}, {L::kKindOfImportant, 2}, {L::kNotVeryImportant, 2}, {L::kExcerptsIncorrect, 3},
           {L::kNotSure, 3}}},
      {4, {{L::kVeryImportant, 1}, {L::kKindOfImportant, 2}, {L::kNotVeryImportant, 3},
           {L::kExcerptsIncorrect, std::nullopt}, {L::kNotSure, std::nullopt}}},
  };
  for (const auto& [id, mapping] : want) {
    const auto config = classification_config(id);
    CHECK(config.id == id);
    CHECK(config.class_count == (id <= 2 ? 2 : 3));
    for (const auto& [label, cls] : mapping) CHECK(config.class_of(label) == cls);
  }
  CHECK_THROWS_AS(classification_config(5), InvalidArgumentError);
}

TEST_CASE("apply_config keeps or excludes exactly") {
  std::vector<AnnotationExample> ex;
  for (int l = 1; l <= 5; ++l) {
    for (int k = 0; k < l; ++k) {
      AnnotationExample e;
      e.id = std::to_string(l) + "-" + std::to_string(k);
      e.label = label_from_int(l);
      ex.push_back(e);
    }
  }
  CHECK(apply_config(ex, classification_config(1)).size() == 15);
  CHECK(apply_config(ex, classification_config(2)).size() == 15 - 4 - 5);
  CHECK(apply_config(ex, classification_config(3)).size() == 15);
  CHECK(apply_config(ex, classification_config(4)).size() == 15 - 4 - 5);
  for (const auto& c : apply_config(ex, classification_config(3))) {
    CHECK(c.cls == *classification_config(3).class_of(c.example.label));
  }
}

namespace {

std::vector<ClassifiedExample> random_dataset(std::mt19937_64& rng) {
  std::vector<ClassifiedExample> out;
  const std::size_t events = 2 + rng() % 30;
  for (std::size_t e = 0; e < events; ++e) {
    const std::size_t n = 1 + rng() % 12;
    for (std::size_t k = 0; k < n; ++k) {
      ClassifiedExample c;
      c.example.id = "x" + std::to_string(e) + "-" + std::to_string(k);
      c.example.event_id = "ev" + std::to_string(e);
      c.cls = 1 + static_cast<int>(rng() % 2);
      out.push_back(c);
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

}  // namespace

TEST_CASE("event split never straddles") {
  std::mt19937_64 rng(500);
  for (int trial = 0; trial < 500; ++trial) {
    const auto data = random_dataset(rng);
    const auto split = split_by_events(data, 0.85, rng());
    std::set<std::string> train(split.train_events.begin(), split.train_events.end());
    std::set<std::string> test(split.test_events.begin(), split.test_events.end());
    CHECK_FALSE(train.empty());
    CHECK_FALSE(test.empty());
    std::size_t tr = 0, te = 0;
    for (const auto& c : data) {
      const bool in_train = train.count(c.example.event_id) > 0;
      CHECK(in_train != (test.count(c.example.event_id) > 0));
      CHECK(split.is_train(c.example.event_id) == in_train);
      (in_train ? tr : te)++;
    }
    CHECK(tr == split.train_examples);
    CHECK(te == split.test_examples);
  }
}

TEST_CASE("split of equal events and determinism") {
  std::vector<ClassifiedExample> data;
  for (int e = 0; e < 10; ++e) {
    for (int k = 0; k < 5; ++k) {
      ClassifiedExample c;
      c.example.event_id = "ev" + std::to_string(e);
      data.push_back(c);
    }
  }
  const auto a = split_by_events(data, 0.85, 42);
  CHECK((a.train_events.size() == 8 || a.train_events.size() == 9));
  const auto b = split_by_events(data, 0.85, 42);
  CHECK(a.train_events == b.train_events);
  CHECK(a.test_events == b.test_events);

  std::vector<ClassifiedExample> one(3);
  for (auto& c : one) c.example.event_id = "only";
  CHECK_THROWS_AS(split_by_events(one, 0.85, 1), InvalidArgumentError);
}

TEST_CASE("dataset and vote JSONL round trip") {
  const Fixture f;
  const CorpusIndex index(f.corpus);
  const std::vector<VoteRecord> votes = {f.vote("A", 1, f.pair_cluster), f.vote("B", 5, f.single_cluster, 3)};
  CHECK(parse_votes_jsonl(render_votes_jsonl(votes)) == votes);

  std::vector<ClassifiedExample> data;
  for (const auto& c : f.corpus.clusters) {
    AnnotationExample e;
    e.id = c.id + "@" + f.context_article;
    e.event_id = f.event_id;
    e.cluster_id = c.id;
    e.statement_id = c.representative_id;
    e.context_article_id = f.context_article;
    e.label = ImportanceLabel::kVeryImportant;
    data.push_back({e, 1});
  }
  DatasetSplit split;
  split.train_events = {f.event_id};
  const auto rows = export_rows(data, split, index);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].split == "train");
  CHECK(rows[0].context_text == f.corpus.articles[0].body);
  CHECK(rows[0].statement_text == index.statement(rows[0].statement_id)->text);
  const auto back = parse_dataset_jsonl(render_jsonl(rows));
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].example_id == rows[i].example_id);
    CHECK(back[i].statement_text == rows[i].statement_text);
    CHECK(back[i].label == rows[i].label);
    CHECK(back[i].cls == rows[i].cls);
    CHECK(back[i].split == rows[i].split);
  }
}

TEST_CASE("class distribution per configuration") {
  std::vector<AnnotationExample> ex;
  const std::map<int, int> counts = {{1, 6}, {2, 2}, {3, 1}, {4, 1}};
  for (auto [label, n] : counts) {
    for (int k = 0; k < n; ++k) {
      AnnotationExample e;
      e.label = label_from_int(label);
      ex.push_back(e);
    }
  }
  const auto dist = class_distribution(ex);
  REQUIRE(dist.size() == 4);
  CHECK(dist[0].classes[0].count == 6);
  CHECK(dist[0].classes[1].count == 4);
  CHECK(dist[0].classes[0].share == doctest::Approx(0.6));
  CHECK(dist[1].classes[1].count == 3);
  CHECK(dist[1].classes[0].share == doctest::Approx(6.0 / 9.0));
  CHECK(dist[2].classes[2].count == 1);
  CHECK(dist[3].classes[2].count == 1);
  CHECK(dist[3].classes[2].labels == std::vector<ImportanceLabel>{ImportanceLabel::kNotVeryImportant});
}
