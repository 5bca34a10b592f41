#include "doctest.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "cherry/cluster.hpp"
#include "cherry/error.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace cherry;

namespace {

HybridVector dense_only(const std::vector<double>& v) {
  HybridVector h;
  h.dense.values = v;
  normalize(h.dense);
  return h;
}

std::vector<std::vector<double>> random_unit_vectors(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> out(n, std::vector<double>(dim));
  for (auto& v : out) {
    double norm = 0;
    for (auto& x : v) {
      x = g(rng);
      norm += x * x;
    }
    for (auto& x : v) x /= std::sqrt(norm);
  }
  return out;
}

std::vector<HybridVector> as_hybrid(const std::vector<std::vector<double>>& pts) {
  std::vector<HybridVector> out;
  for (const auto& p : pts) out.push_back(dense_only(p));
  return out;
}

// Dense part keyed on the first word, so texts starting alike embed alike.
class TopicProvider final : public EmbeddingProvider {
 public:
  std::string name() const override { return "topic"; }
  std::size_t dimension() const override { return 64; }
  DenseVector embed(std::string_view text) const override {
    const auto tokens = word_tokens(text);
    DenseVector v;
    v.values.assign(64, 0.0);
    v.values[std::hash<std::string>{}(tokens.empty() ? "" : tokens.front()) % 64] = 1.0;
    return v;
  }
};

}  // namespace

TEST_CASE("dbscan trivial inputs") {
  CHECK(dbscan({}, kArticleDbscan).labels.empty());
  CHECK(dbscan({}, kArticleDbscan).cluster_count == 0);
  const std::vector<HybridVector> same(3, dense_only({1, 2, 3}));
  const auto r = dbscan(same, kArticleDbscan);
  CHECK(r.cluster_count == 1);
  CHECK(r.labels == std::vector<int>{0, 0, 0});
  const std::vector<HybridVector> apart = {dense_only({1, 0}), dense_only({0, 1})};
  CHECK(dbscan(apart, kArticleDbscan).labels == std::vector<int>{-1, -1});
}

TEST_CASE("dbscan parameters are validated") {
  CHECK_THROWS_AS((DbscanParams{-0.1, 2}.validate()), InvalidArgumentError);
  CHECK_THROWS_AS((DbscanParams{0.1, 0}.validate()), InvalidArgumentError);
}

TEST_CASE("dbscan equals the brute-force oracle on random sets") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = random_unit_vectors(rng, 200, 3 + trial % 2);
    for (double eps : {0.04, 0.07}) {
      const auto got = dbscan(as_hybrid(pts), DbscanParams{eps, 2});
      CHECK(oracle::canonical(got.labels) == oracle::dbscan(pts, eps, 2));
      const int max_label = *std::max_element(got.labels.begin(), got.labels.end());
      CHECK(got.cluster_count == max_label + 1);
    }
  }
}

TEST_CASE("dbscan noise set and core partition survive permutation") {
  std::mt19937_64 rng(77);
  const auto pts = random_unit_vectors(rng, 150, 3);
  const double eps = 0.05;
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<double>> shuffled;
  for (auto i : order) shuffled.push_back(pts[i]);

  const auto a = dbscan(as_hybrid(pts), DbscanParams{eps, 2}).labels;
  const auto b_perm = dbscan(as_hybrid(shuffled), DbscanParams{eps, 2}).labels;
  std::vector<int> b(pts.size());
  for (std::size_t k = 0; k < order.size(); ++k) b[order[k]] = b_perm[k];

  std::vector<bool> core(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::size_t n = 0;
    for (std::size_t j = 0; j < pts.size(); ++j) n += oracle::cosine_distance(pts[i], pts[j]) <= eps;
    core[i] = n >= 2;
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK((a[i] == -1) == (b[i] == -1));
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (core[i] && core[j]) CHECK((a[i] == a[j]) == (b[i] == b[j]));
    }
  }
}

TEST_CASE("raising eps keeps core points together") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const auto pts = as_hybrid(random_unit_vectors(rng, 120, 3));
    const auto small = dbscan(pts, DbscanParams{0.03, 2}).labels;
    const auto large = dbscan(pts, DbscanParams{0.06, 2}).labels;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (small[i] != -1) CHECK(large[i] != -1);
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        if (small[i] != -1 && small[i] == small[j]) CHECK(large[i] == large[j]);
      }
    }
  }
}

TEST_CASE("every clustered point is within eps of a core point of its cluster") {
  std::mt19937_64 rng(31);
  const auto raw = random_unit_vectors(rng, 200, 3);
  const auto pts = as_hybrid(raw);
  const double eps = 0.07;
  const auto labels = dbscan(pts, DbscanParams{eps, 3}).labels;
  std::vector<std::size_t> degree(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (std::size_t j = 0; j < raw.size(); ++j) degree[i] += oracle::cosine_distance(raw[i], raw[j]) <= eps;
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (labels[i] == -1) {
      CHECK(degree[i] < 3);
      continue;
    }
    bool reached = false;
    for (std::size_t j = 0; j < raw.size(); ++j) {
      reached |= labels[j] == labels[i] && degree[j] >= 3 && oracle::cosine_distance(raw[i], raw[j]) <= eps;
    }
    CHECK(reached);
  }
}

TEST_CASE("cluster_articles groups near duplicates and drops noise") {
  const HashedNgramProvider provider;
  std::vector<Article> articles = {
      testing::make_article("a", "x", "Storm closes the port for two days.\n\nMore text.", "2020-01-02T08:00:00Z",
                            "Storm closes port"),
      testing::make_article("b", "x", "Storm closes the port for two days.\n\nOther text.", "2020-01-02T11:00:00Z",
                            "Storm closes port"),
      testing::make_article("c", "y", "Bakery wins a regional pastry award.", "2020-01-03T09:00:00Z",
                            "Pastry award for bakery"),
  };
  const auto events = cluster_articles(articles, provider);
  REQUIRE(events.size() == 1);
  std::vector<std::string> ids = {articles[0].id, articles[1].id};
  std::sort(ids.begin(), ids.end());
  CHECK(events[0].article_ids == ids);
  CHECK(events[0].window.start == articles[0].published_at);
  CHECK(events[0].window.end == articles[1].published_at);
  CHECK(events[0].id == make_event_id(ids));

  articles[2] = testing::make_article("c", "x", "Storm closes the port for two days.", "2020-01-02T12:00:00Z",
                                      "Storm closes port");
  const auto all = cluster_articles(articles, provider);
  REQUIRE(all.size() == 1);
  CHECK(all[0].article_ids.size() == 3);
}

TEST_CASE("cluster_statements finds planted paraphrase groups") {
  // Three planted groups repeated across articles with surface variation,
  // plus filler sentences that share nothing.
  const std::vector<std::string> groups[3] = {
      {"Harbor cranes stopped working after the outage.", "harbor cranes stopped working after the outage!",
       "HARBOR CRANES STOPPED WORKING AFTER THE OUTAGE."},
      {"Teachers demand smaller class sizes this autumn.", "Teachers demand smaller class sizes this autumn!"},
      {"Wildfire smoke delays commuter flights again today.", "wildfire smoke delays commuter flights again today.",
       "Wildfire smoke delays commuter flights again today!"},
  };
  const std::vector<std::string> filler = {
      "Quarterly exports beat every forecast by economists.", "Museums extend Sunday visiting hours downtown.",
      "Orchestra musicians rehearse a forgotten symphony.", "Volunteers planted four hundred oak saplings.",
      "Engineers tested prototype batteries overnight.", "Farmers report unusually early cherry blossoms.",
      "Referees reviewed the disputed penalty twice.", "Librarians catalogued rare maps from storage.",
      "Pilots trained with upgraded flight simulators.", "Chemists synthesized a cheaper dye compound.",
      "Sailors recovered drifting buoys near reefs.", "Bakers introduced rye loaves with walnuts.",
      "Archivists digitized handwritten ledgers successfully.", "Cyclists protested narrow bridge lanes loudly.",
      "Nurses negotiated additional night shift pay.", "Astronomers spotted a faint comet tail.",
      "Jugglers entertained crowds beside fountains.", "Zoologists tagged migrating sea turtles quickly.",
      "Potters fired glazed bowls inside kilns.", "Miners inspected ventilation shafts carefully.",
      "Dancers premiered choreography inspired by rivers.", "Gardeners pruned hedges around parliament grounds.",
  };
  std::vector<std::string> sentences;
  for (const auto& g : groups) sentences.insert(sentences.end(), g.begin(), g.end());
  sentences.insert(sentences.end(), filler.begin(), filler.end());
  REQUIRE(sentences.size() == 30);

  std::mt19937_64 rng(3);
  std::shuffle(sentences.begin(), sentences.end(), rng);
  Corpus corpus;
  std::vector<Article> articles;
  for (std::size_t a = 0; a < 5; ++a) {
    std::string body;
    for (std::size_t k = a * 6; k < a * 6 + 6; ++k) body += sentences[k] + "\n\n";
    articles.push_back(testing::make_article("o" + std::to_string(a), "e", body,
                                             "2020-01-0" + std::to_string(a + 1) + "T00:00:00Z"));
  }
  testing::add_event(corpus, articles);
  const CorpusIndex index(corpus);
  const auto clusters = cluster_statements(corpus.events[0], index, TopicProvider{});

  std::vector<std::set<std::string>> proper;
  std::size_t singletons = 0;
  for (const auto& c : clusters) {
    CHECK(c.event_id == corpus.events[0].id);
    CHECK(std::is_sorted(c.statement_ids.begin(), c.statement_ids.end()));
    if (c.singleton_noise) {
      CHECK(c.statement_ids.size() == 1);
      ++singletons;
      continue;
    }
    CHECK_FALSE(singletons);  // proper clusters first
    std::set<std::string> texts;
    for (const auto& id : c.statement_ids) texts.insert(normalize_whitespace(index.statement(id)->text));
    proper.push_back(texts);
  }
  CHECK(singletons == filler.size());
  REQUIRE(proper.size() == 3);
  for (const auto& g : groups) {
    std::set<std::string> want(g.begin(), g.end());
    CHECK(std::find(proper.begin(), proper.end(), want) != proper.end());
  }
}

TEST_CASE("representative is the lowest ordinal of the earliest article") {
  Corpus corpus;
  testing::add_event(corpus, {testing::make_article("late", "e", "Intro words are here now. Bridge repairs finish in June.",
                                                    "2020-02-02T00:00:00Z"),
                              testing::make_article("early", "e", "Bridge repairs finish in June. Other unrelated closing words.",
                                                    "2020-02-01T00:00:00Z")});
  const CorpusIndex index(corpus);
  const auto clusters = cluster_statements(corpus.events[0], index, HashedNgramProvider{});
  const StatementCluster* bridge = nullptr;
  for (const auto& c : clusters) {
    if (!c.singleton_noise) bridge = &c;
  }
  REQUIRE(bridge != nullptr);
  CHECK(bridge->statement_ids.size() == 2);
  const Statement* rep = index.statement(bridge->representative_id);
  CHECK(index.article(rep->article_id)->outlet_id == "early");
  CHECK(rep->ordinal == 0);
}

TEST_CASE("dissimilar statements are all singleton noise") {
  Corpus corpus;
  testing::add_event(corpus, {testing::make_article("a", "e", "Cats chase red laser dots. Rain fell over the northern hills.",
                                                    "2020-02-01T00:00:00Z"),
                              testing::make_article("b", "e", "Stock markets rallied on Friday. Chefs prefer copper pans for sauces.",
                                                    "2020-02-01T01:00:00Z")});
  const CorpusIndex index(corpus);
  const auto clusters = cluster_statements(corpus.events[0], index, HashedNgramProvider{});
  CHECK(clusters.size() == 4);
  for (const auto& c : clusters) CHECK(c.singleton_noise);
}

TEST_CASE("short statements take no part in statement clustering") {
  Corpus corpus;
  testing::add_event(corpus, {testing::make_article("a", "e", "Yes. The reservoir level rose sharply overnight.",
                                                    "2020-02-01T00:00:00Z"),
                              testing::make_article("b", "e", "Yes. Officials will publish figures later today.",
                                                    "2020-02-01T01:00:00Z")});
  const CorpusIndex index(corpus);
  for (const auto& c : cluster_statements(corpus.events[0], index, HashedNgramProvider{})) {
    for (const auto& id : c.statement_ids) CHECK(index.statement(id)->word_count >= kMinClusterWords);
  }
}

TEST_CASE("short paraphrases need a wider radius under hybrid vectors") {
  // Even with a dense part that sees the four sentences as identical, the
  // unit TF-IDF half keeps pairwise distances near 0.3.
  const std::vector<std::string> texts = {
      "President-elect Joe Biden plans to release nearly all available doses of the COVID-19 vaccines after he "
      "takes office.",
      "President-elect Joe Biden plans to release almost all vaccine doses immediately.",
      "President-elect Joe Biden will aim to release every available dose of the coronavirus vaccine when he takes "
      "office.",
      "Joe Biden will release most available Covid-19 vaccine doses to speed delivery to more people when he takes "
      "office.",
  };
  const auto tfidf = TfidfModel::fit(texts);
  class Same final : public EmbeddingProvider {
   public:
    std::string name() const override { return "same"; }
    std::size_t dimension() const override { return 2; }
    DenseVector embed(std::string_view) const override { return DenseVector{{1.0, 0.0}}; }
  } same;
  std::vector<HybridVector> v;
  for (const auto& t : texts) v.push_back(vectorize_hybrid(t, tfidf, same));
  const auto narrow = dbscan(v, kStatementDbscan);
  CHECK(narrow.cluster_count == 0);
  const auto wide = dbscan(v, DbscanParams{0.4, 2});
  CHECK(wide.cluster_count == 1);
  CHECK(wide.labels == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("event allow-list keeps listed ids only") {
  testing::TempDir dir;
  std::vector<Event> events(3);
  events[0].id = "e1";
  events[1].id = "e2";
  events[2].id = "e3";
  {
    std::ofstream out(dir / "allow.txt");
    out << "e3\n\ne1\n";
  }
  const auto kept = apply_event_allow_list(events, dir / "allow.txt");
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].id == "e1");
  CHECK(kept[1].id == "e3");
}
