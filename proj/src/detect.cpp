#include "cherry/detect.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "cherry/error.hpp"

namespace cherry {

Presence check_presence(const HybridVector& statement, std::span<const HybridVector> document, double threshold) {
  Presence p;
  for (const auto& v : document) p.best_similarity = std::max(p.best_similarity, std::min(1.0, cosine(statement, v)));
  p.present = !document.empty() && p.best_similarity >= threshold;
  return p;
}

Presence check_presence(std::string_view statement, std::span<const std::string> document, const TfidfModel& tfidf,
                        const EmbeddingProvider& provider, double threshold) {
  if (document.empty()) return {};
  const std::string needle = normalize_whitespace(statement);
  for (const auto& s : document) {
    if (normalize_whitespace(s) == needle) return {threshold <= 1.0, 1.0};
  }
  const HybridVector v = vectorize_hybrid(statement, tfidf, provider);
  const auto doc = vectorize_hybrid_batch(document, tfidf, provider);
  return check_presence(v, doc, threshold);
}

const DocumentReport* CherryReport::document(std::string_view article_id) const {
  for (const auto& d : documents) {
    if (d.article_id == article_id) return &d;
  }
  return nullptr;
}

void DetectOptions::validate() const {
  context.validate();
  if (!(presence_threshold >= 0.0 && presence_threshold <= 1.0)) {
    throw ValidationError("presence threshold must lie in [0,1]");
  }
  if (!(failure_budget >= 0.0 && failure_budget <= 1.0)) throw ValidationError("failure budget must lie in [0,1]");
}

CherryReport detect_cherry_picking(const Event& event, const CorpusIndex& index, const ImportanceScorer& scorer,
                                   const DetectOptions& options, const EmbeddingProvider& provider,
                                   const Summarizer* summarizer) {
  options.validate();
  const auto universe = universal_statement_set(index, event);
  const std::string context = build_context(event, index, options.context, summarizer);

  std::vector<const Statement*> statements;
  std::vector<std::string> texts;
  for (const auto& id : universe.statement_ids) {
    const Statement* s = index.statement(id);
    statements.push_back(s);
    texts.push_back(s->text);
  }

  CherryReport report;
  report.event_id = event.id;
  report.universal_size = statements.size();

  const auto results = scorer.score_batch(texts, context);
  std::vector<double> probability(statements.size(), 0.0);
  std::vector<std::size_t> important;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].score) {
      report.failures.push_back({statements[i]->id, results[i].error});
      continue;
    }
    probability[i] = results[i].score->probability;
    if (results[i].score->important) important.push_back(i);
  }
  if (static_cast<double>(report.failures.size()) > options.failure_budget * static_cast<double>(statements.size())) {
    throw ScorerError("event " + event.id + ": " + std::to_string(report.failures.size()) + " of " +
                          std::to_string(statements.size()) + " statements failed to score",
                      report.failures.front().error);
  }
  for (std::size_t i : important) report.important.push_back(statements[i]->id);
  std::sort(report.important.begin(), report.important.end());

  // Fit on distinct texts so that repeating a sentence leaves the weights alone.
  std::set<std::string> distinct;
  for (const auto& t : texts) {
    if (!trim(t).empty()) distinct.insert(normalize_whitespace(t));
  }
  std::vector<HybridVector> vectors;
  std::optional<TfidfModel> tfidf;
  if (!important.empty() && !distinct.empty()) {
    const std::vector<std::string> corpus(distinct.begin(), distinct.end());
    tfidf = TfidfModel::fit(corpus);
    vectors = vectorize_hybrid_batch(texts, *tfidf, provider);
  }

  std::vector<std::string> article_ids = event.article_ids;
  std::sort(article_ids.begin(), article_ids.end());
  for (const auto& aid : article_ids) {
    const Article* article = index.article(aid);
    DocumentReport doc;
    doc.article_id = aid;
    doc.outlet_id = article ? article->outlet_id : "";

    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < statements.size(); ++i) {
      if (statements[i]->article_id == aid) members.push_back(i);
    }
    for (std::size_t i : important) {
      Presence best;
      const std::string needle = normalize_whitespace(texts[i]);
      for (std::size_t j : members) {
        const double sim = normalize_whitespace(texts[j]) == needle ? 1.0
                           : vectors.empty()                         ? 0.0
                                                                     : std::min(1.0, cosine(vectors[i], vectors[j]));
        best.best_similarity = std::max(best.best_similarity, sim);
      }
      best.present = !members.empty() && best.best_similarity >= options.presence_threshold;
      if (!best.present) {
        doc.cherry_picked.push_back({statements[i]->id, texts[i], probability[i], best.best_similarity});
      }
    }
    std::sort(doc.cherry_picked.begin(), doc.cherry_picked.end(),
              [](const CherryPick& a, const CherryPick& b) { return a.statement_id < b.statement_id; });
    report.documents.push_back(std::move(doc));
  }
  return report;
}

json to_json(const CherryReport& report) {
  json docs = json::array();
  for (const auto& d : report.documents) {
    json picks = json::array();
    for (const auto& p : d.cherry_picked) {
      picks.push_back({{"statement_id", p.statement_id},
                       {"text", p.text},
                       {"probability", p.probability},
                       {"best_similarity", p.best_similarity}});
    }
    docs.push_back({{"article_id", d.article_id}, {"outlet_id", d.outlet_id}, {"cherry_picked", picks}});
  }
  json failures = json::array();
  for (const auto& f : report.failures) failures.push_back({{"statement_id", f.statement_id}, {"error", f.error}});
  return {{"event_id", report.event_id},
          {"universal_size", report.universal_size},
          {"important", report.important},
          {"documents", docs},
          {"failures", failures}};
}

CherryReport cherry_report_from_json(const json& j) {
  try {
    CherryReport r;
    r.event_id = j.at("event_id").get<std::string>();
    r.universal_size = j.value("universal_size", std::size_t{0});
    r.important = j.at("important").get<std::vector<std::string>>();
    for (const auto& d : j.at("documents")) {
      DocumentReport doc;
      doc.article_id = d.at("article_id").get<std::string>();
      doc.outlet_id = d.at("outlet_id").get<std::string>();
      for (const auto& p : d.at("cherry_picked")) {
        doc.cherry_picked.push_back({p.at("statement_id").get<std::string>(), p.value("text", ""),
                                     p.at("probability").get<double>(), p.at("best_similarity").get<double>()});
      }
      r.documents.push_back(std::move(doc));
    }
    if (j.contains("failures")) {
      for (const auto& f : j["failures"]) {
        r.failures.push_back({f.at("statement_id").get<std::string>(), f.value("error", "")});
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw InvalidArgumentError(std::string("malformed cherry-picking report: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

std::vector<OutletScore> outlet_scores(std::span<const CherryReport> reports, const CorpusIndex& index) {
  if (reports.empty()) throw InvalidArgumentError("outlet scores need at least one report");
  struct Acc {
    std::size_t total = 0;
    std::size_t documents = 0;
    std::set<std::string> events;
  };
  std::map<std::string, Acc> acc;
  for (const auto& r : reports) {
    for (const auto& d : r.documents) {
      std::string outlet = d.outlet_id;
      if (outlet.empty()) {
        if (const Article* a = index.article(d.article_id)) outlet = a->outlet_id;
      }
      auto& a = acc[outlet];
      a.total += d.cherry_picked.size();
      ++a.documents;
      a.events.insert(r.event_id);
    }
  }
  std::vector<OutletScore> out;
  for (const auto& [id, a] : acc) {
    out.push_back({id, static_cast<double>(a.total) / static_cast<double>(a.documents), a.events.size(), a.documents});
  }
  return out;
}

std::vector<BiasBandRow> bias_band_summary(std::span<const OutletScore> scores, const CorpusIndex& index) {
  static constexpr BiasCategory kOrder[] = {BiasCategory::kLeft, BiasCategory::kLeftCenter, BiasCategory::kRight,
                                            BiasCategory::kRightCenter, BiasCategory::kCenter};
  std::map<BiasCategory, std::vector<double>> bands;
  for (const auto& s : scores) {
    const Outlet* o = index.outlet(s.outlet_id);
    if (!o) throw DanglingReferenceError("outlet score names unknown outlet '" + s.outlet_id + "'");
    bands[o->bias_category].push_back(s.mean);
  }
  std::vector<BiasBandRow> rows;
  for (BiasCategory c : kOrder) {
    auto it = bands.find(c);
    if (it == bands.end()) continue;
    const auto& v = it->second;
    BiasBandRow row;
    row.category = c;
    row.sample_size = v.size();
    row.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() >= 2) {
      double ss = 0.0;
      for (double x : v) ss += (x - row.mean) * (x - row.mean);
      row.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgumentError("pearson: length mismatch");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw InvalidArgumentError("correlation undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgumentError("spearman: length mismatch");
  if (x.size() < 3) throw InvalidArgumentError("spearman needs at least 3 pairs");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  SpearmanResult res;
  res.n = x.size();
  res.r = pearson(rx, ry);

  if (res.n <= 10) {
    // r is affine in sum(rx * ry_perm), so compare dot products instead.
    const double observed = std::inner_product(rx.begin(), rx.end(), ry.begin(), 0.0);
    const double mean = std::accumulate(rx.begin(), rx.end(), 0.0) * std::accumulate(ry.begin(), ry.end(), 0.0) /
                        static_cast<double>(res.n);
    const double dev = std::abs(observed - mean) - 1e-9;
    std::vector<double> perm = ry;
    std::sort(perm.begin(), perm.end());
    std::size_t hits = 0, total = 0;
    do {
      const double d = std::inner_product(rx.begin(), rx.end(), perm.begin(), 0.0);
      if (std::abs(d - mean) >= dev) ++hits;
      ++total;
    } while (std::next_permutation(perm.begin(), perm.end()));
    // With ties every distinct arrangement stands for the same number of
    // permutations, so counting arrangements is enough.
    res.p_value = static_cast<double>(hits) / static_cast<double>(total);
  } else {
    const double df = static_cast<double>(res.n - 2);
    if (std::abs(res.r) >= 1.0) {
      res.p_value = 0.0;
    } else {
      const double t = res.r * std::sqrt(df / (1.0 - res.r * res.r));
      boost::math::students_t dist(df);
      res.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    }
  }
  return res;
}

MetricReport evaluate(std::span<const int> predictions, std::span<const int> gold, std::span<const int> classes) {
  if (predictions.size() != gold.size()) {
    throw InvalidArgumentError("evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                               std::to_string(gold.size()) + " gold labels");
  }
  if (gold.empty()) throw InvalidArgumentError("evaluate: no examples");
  MetricReport m;
  m.classes.assign(classes.begin(), classes.end());
  std::sort(m.classes.begin(), m.classes.end());
  m.classes.erase(std::unique(m.classes.begin(), m.classes.end()), m.classes.end());
  if (m.classes.empty()) throw InvalidArgumentError("evaluate: no classes");
  auto pos = [&](int c) {
    auto it = std::lower_bound(m.classes.begin(), m.classes.end(), c);
    if (it == m.classes.end() || *it != c) throw InvalidArgumentError("evaluate: label " + std::to_string(c) + " not in classes");
    return static_cast<std::size_t>(it - m.classes.begin());
  };
  const std::size_t k = m.classes.size();
  m.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const std::size_t g = pos(gold[i]);
    const std::size_t p = pos(predictions[i]);
    ++m.confusion[g][p];
    correct += g == p ? 1 : 0;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t tp = m.confusion[c][c], predicted = 0, actual = 0;
    for (std::size_t o = 0; o < k; ++o) {
      predicted += m.confusion[o][c];
      actual += m.confusion[c][o];
    }
    ClassMetrics cm;
    cm.cls = m.classes[c];
    cm.support = actual;
    cm.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    cm.recall = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
    cm.f1 = (cm.precision + cm.recall) > 0.0 ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall) : 0.0;
    f1_sum += cm.f1;
    m.per_class.push_back(cm);
  }
  m.macro_f1 = f1_sum / static_cast<double>(k);
  return m;
}

json to_json(const MetricReport& report) {
  json per_class = json::array();
  for (const auto& c : report.per_class) {
    per_class.push_back(
        {{"class", c.cls}, {"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support}});
  }
  return {{"accuracy", report.accuracy},
          {"macro_f1", report.macro_f1},
          {"classes", report.classes},
          {"per_class", per_class},
          {"confusion", report.confusion}};
}

}  // namespace cherry
