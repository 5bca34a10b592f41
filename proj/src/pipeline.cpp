#include "cherry/pipeline.hpp"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include "cherry/dataset.hpp"
#include "cherry/error.hpp"
#include "cherry/ingest.hpp"
#include "cherry/report.hpp"
#include "cherry/textproc.hpp"

namespace fs = std::filesystem;

namespace cherry {

namespace {

// Stages that rewrite corpus records, in order. Re-running one of them
// discards what the later ones produced.
constexpr const char* kChain[] = {"ingest", "segment", "cluster-events", "cluster-statements"};

const char* produced_file(std::string_view stage) {
  if (stage == "ingest") return "articles.jsonl";
  if (stage == "segment") return "statements.jsonl";
  if (stage == "cluster-events") return "events.jsonl";
  if (stage == "cluster-statements") return "clusters.jsonl";
  if (stage == "detect") return kReportsFile;
  return "manifest.json";
}

int chain_index(std::string_view stage) {
  for (int i = 0; i < 4; ++i) {
    if (stage == kChain[i]) return i;
  }
  return -1;
}

std::vector<std::string> requirements(std::string_view stage) {
  if (stage == "segment") return {"ingest"};
  if (stage == "cluster-events") return {"segment"};
  if (stage == "cluster-statements") return {"segment", "cluster-events"};
  if (stage == "detect") return {"segment", "cluster-events"};
  if (stage == "build-dataset" || stage == "dataset-stats" || stage == "serve-annotator") {
    return {"segment", "cluster-events", "cluster-statements"};
  }
  if (stage == "correlate") return {"detect"};
  return {};
}

void check_prerequisites(std::string_view stage, const RunConfig& config) {
  const auto needs = requirements(stage);
  if (needs.empty()) return;
  if (!fs::exists(config.corpus_dir / "manifest.json")) {
    throw PrerequisiteError(std::string(stage) + " needs " + produced_file(needs.front()) + " in " +
                            config.corpus_dir.string() + "; run " + needs.front() + " first");
  }
  const Manifest m = read_manifest(config.corpus_dir);
  for (const auto& need : needs) {
    if (std::find(m.stages.begin(), m.stages.end(), need) == m.stages.end()) {
      throw PrerequisiteError(std::string(stage) + " needs " + produced_file(need) + " from the " + need +
                              " stage; run " + need + " first");
    }
  }
}

std::vector<std::string> stages_after(const fs::path& dir, std::string_view stage) {
  std::vector<std::string> kept;
  if (fs::exists(dir / "manifest.json")) {
    const int idx = chain_index(stage);
    for (const auto& s : read_manifest(dir).stages) {
      if (s == stage) continue;
      const int si = chain_index(s);
      if (idx >= 0 && (si < 0 || si > idx)) continue;
      kept.push_back(s);
    }
  }
  kept.emplace_back(stage);
  return kept;
}

std::unique_ptr<EmbeddingProvider> make_provider(const RunConfig& config) {
  RemoteEndpoint endpoint;
  endpoint.base_url = config.embedding_url;
  endpoint.timeout_ms = config.remote_timeout_ms;
  endpoint.max_in_flight = config.max_in_flight;
  return make_embedding_provider(config.embedding, endpoint, config.embedding_dimension);
}

RemoteEndpoint endpoint_for(const std::string& url, const RunConfig& config) {
  RemoteEndpoint e;
  e.base_url = url;
  e.timeout_ms = config.remote_timeout_ms;
  e.max_in_flight = config.max_in_flight;
  return e;
}

bool looks_like_url(std::string_view url) { return url.rfind("http://", 0) == 0 || url.rfind("https://", 0) == 0; }

Timestamp parse_bound(const std::string& text, bool end_of_day) {
  Timestamp t = parse_timestamp(text);
  if (end_of_day && text.find('T') == std::string::npos) t += std::chrono::seconds(86399);
  return t;
}

std::vector<Demonstration> load_demonstrations(const fs::path& path) {
  std::vector<Demonstration> out;
  const auto lines = split_lines(read_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const json j = parse_json(lines[i], path.string() + ":" + std::to_string(i + 1));
    try {
      out.push_back({j.at("context").get<std::string>(), j.at("statement").get<std::string>(),
                     j.at("important").get<bool>()});
    } catch (const json::exception& e) {
      throw InvalidArgumentError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ExportRow> rows_for_split(const fs::path& dataset, std::string_view split) {
  auto rows = parse_dataset_jsonl(read_file(dataset));
  if (split != "all") std::erase_if(rows, [&](const ExportRow& r) { return r.split != split; });
  if (rows.empty()) throw InvalidArgumentError("dataset " + dataset.string() + " has no " + std::string(split) + " rows");
  return rows;
}

std::vector<int> class_list(const RunConfig& config, std::span<const ExportRow> rows) {
  int k = classification_config(config.label_config).class_count;
  for (const auto& r : rows) k = std::max(k, r.cls);
  std::vector<int> classes;
  for (int c = 1; c <= k; ++c) classes.push_back(c);
  return classes;
}

struct ScoredEvaluation {
  MetricReport metrics;
  std::size_t failures = 0;
};

// Important maps to class 1, everything else to class 2.
ScoredEvaluation evaluate_with_scorer(const ImportanceScorer& scorer, std::span<const ExportRow> rows,
                                      std::size_t max_words, std::span<const int> classes) {
  if (classes.size() != 2) throw ValidationError("scorer evaluation needs a two-class label configuration");
  std::map<std::string, std::vector<std::size_t>> by_context;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string ctx(first_words(rows[i].context_text, max_words));
    auto [it, fresh] = by_context.try_emplace(ctx);
    if (fresh) order.push_back(ctx);
    it->second.push_back(i);
  }
  std::vector<int> predictions(rows.size(), 2);
  std::vector<int> gold;
  for (const auto& r : rows) gold.push_back(r.cls);
  ScoredEvaluation out;
  for (const auto& ctx : order) {
    const auto& idx = by_context[ctx];
    std::vector<std::string> statements;
    for (std::size_t i : idx) statements.push_back(rows[i].statement_text);
    const auto results = scorer.score_batch(statements, ctx);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (!results[k].score) {
        ++out.failures;
        continue;
      }
      predictions[idx[k]] = results[k].score->important ? 1 : 2;
    }
  }
  out.metrics = evaluate(predictions, gold, classes);
  return out;
}

std::vector<AnnotationExample> cast_dataset(const RunConfig& config, const CorpusIndex& index,
                                            std::size_t& aggregated, std::size_t& kept) {
  const auto votes = parse_votes_jsonl(read_file(*config.votes));
  const auto examples = aggregate_annotations(votes, index);
  aggregated = examples.size();
  const auto filtered = filter_examples(examples, config.min_annotators, config.min_agreement);
  kept = filtered.size();
  std::vector<AnnotationExample> cast;
  for (const auto& e : filtered) {
    for (auto& c : cast_labels(e, *index.cluster(e.cluster_id))) cast.push_back(std::move(c));
  }
  return cast;
}

struct Ratings {
  std::vector<std::string> raters;
  std::map<std::string, std::map<std::string, double>> by_rater;  // rater -> outlet -> value
};

Ratings load_ratings(const RunConfig& config, const Corpus& corpus) {
  Ratings r;
  if (config.ratings) {
    const auto lines = split_lines(read_file(*config.ratings));
    auto cells = [](std::string_view line) {
      std::vector<std::string> out;
      std::size_t start = 0;
      while (true) {
        const auto comma = line.find(',', start);
        out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      return out;
    };
    if (lines.empty()) throw InvalidArgumentError(config.ratings->string() + " is empty");
    const auto header = cells(lines[0]);
    if (header.size() < 2 || header[0] != "outlet_id") {
      throw InvalidArgumentError(config.ratings->string() + ": header must be outlet_id,<rater>,...");
    }
    r.raters.assign(header.begin() + 1, header.end());
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      const auto row = cells(lines[i]);
      for (std::size_t c = 1; c < row.size() && c < header.size(); ++c) {
        if (row[c].empty()) continue;
        try {
          std::size_t used = 0;
          const double v = std::stod(row[c], &used);
          if (used != row[c].size()) throw std::invalid_argument(row[c]);
          r.by_rater[header[c]][row[0]] = v;
        } catch (const std::logic_error&) {
          throw InvalidArgumentError(config.ratings->string() + ":" + std::to_string(i + 1) + ": bad rating '" +
                                     row[c] + "'");
        }
      }
    }
    return r;
  }
  for (Rater rater : {Rater::kMbfc, Rater::kAllSides, Rater::kAdFontes}) {
    const std::string name(to_string(rater));
    for (const auto& o : corpus.outlets) {
      auto it = o.bias_ratings.find(rater);
      if (it != o.bias_ratings.end()) r.by_rater[name][o.id] = it->second;
    }
    if (r.by_rater.count(name)) r.raters.push_back(name);
  }
  return r;
}

std::vector<CherryReport> read_reports(const fs::path& path) {
  std::vector<CherryReport> out;
  const auto lines = split_lines(read_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    out.push_back(cherry_report_from_json(parse_json(lines[i], path.string() + ":" + std::to_string(i + 1))));
  }
  return out;
}

json outlet_rows(std::span<const OutletScore> scores) {
  json rows = json::array();
  for (const auto& s : scores) {
    rows.push_back({{"outlet_id", s.outlet_id},
                    {"mean", s.mean},
                    {"events_covered", s.events_covered},
                    {"documents", s.documents}});
  }
  return rows;
}

// ---------------------------------------------------------------------------

StageReport run_ingest(const RunConfig& config) {
  SourceRegistry registry = load_registry(*config.registry);
  if (config.from) registry.window.start = parse_bound(*config.from, false);
  if (config.to) registry.window.end = parse_bound(*config.to, true);
  FetchSpec spec;
  spec.provider = parse_provider_kind(config.provider);
  spec.source = config.source;
  spec.rate_limit = config.rate_limit;
  spec.max_attempts = config.fetch_attempts;
  FetchResult fetched = fetch_articles(registry, spec);
  const std::size_t fetched_count = fetched.articles.size();

  Corpus corpus;
  corpus.outlets = registry.outlets;
  std::sort(corpus.outlets.begin(), corpus.outlets.end(),
            [](const Outlet& a, const Outlet& b) { return a.id < b.id; });
  corpus.articles = filter_news_only(std::move(fetched.articles));
  fs::create_directories(config.corpus_dir);
  save_corpus(corpus, config.corpus_dir, {"ingest"});

  StageReport r;
  r.counts = {{"fetched", fetched_count},
              {"articles", corpus.articles.size()},
              {"opinion_or_editorial", fetched_count - corpus.articles.size()},
              {"skipped", fetched.report.skipped},
              {"out_of_window", fetched.report.out_of_window},
              {"unknown_outlet", fetched.report.unknown_outlet},
              {"duplicates", fetched.report.duplicates}};
  r.output = {{"skipped_reasons", fetched.report.skipped_reasons}};
  return r;
}

StageReport run_segment(const RunConfig& config) {
  Corpus corpus = load_corpus(config.corpus_dir);
  const SentenceSplitter splitter =
      config.abbreviations ? SentenceSplitter(load_abbreviations(*config.abbreviations)) : SentenceSplitter();
  corpus.statements.clear();
  corpus.events.clear();
  corpus.clusters.clear();
  for (const auto& a : corpus.articles) {
    for (auto& s : segment_statements(a, splitter)) corpus.statements.push_back(std::move(s));
  }
  save_corpus(corpus, config.corpus_dir, stages_after(config.corpus_dir, "segment"));
  StageReport r;
  r.counts = {{"articles", corpus.articles.size()}, {"statements", corpus.statements.size()}};
  return r;
}

StageReport run_cluster_events(const RunConfig& config) {
  Corpus corpus = load_corpus(config.corpus_dir);
  const auto provider = make_provider(config);
  auto events = corpus.articles.size() >= 2 ? cluster_articles(corpus.articles, *provider, config.article_dbscan)
                                            : std::vector<Event>{};
  const std::size_t found = events.size();
  if (config.event_allow_list) events = apply_event_allow_list(std::move(events), *config.event_allow_list);
  corpus.events = std::move(events);
  corpus.clusters.clear();
  save_corpus(corpus, config.corpus_dir, stages_after(config.corpus_dir, "cluster-events"));
  std::size_t clustered = 0;
  for (const auto& e : corpus.events) clustered += e.article_ids.size();
  StageReport r;
  r.counts = {{"articles", corpus.articles.size()},
              {"events_found", found},
              {"events", corpus.events.size()},
              {"clustered_articles", clustered}};
  return r;
}

StageReport run_cluster_statements(const RunConfig& config) {
  Corpus corpus = load_corpus(config.corpus_dir);
  const auto provider = make_provider(config);
  std::vector<StatementCluster> clusters;
  {
    const CorpusIndex index(corpus);
    for (const auto& e : corpus.events) {
      for (auto& c : cluster_statements(e, index, *provider, config.statement_dbscan)) clusters.push_back(std::move(c));
    }
  }
  corpus.clusters = std::move(clusters);
  save_corpus(corpus, config.corpus_dir, stages_after(config.corpus_dir, "cluster-statements"));
  std::size_t singletons = 0;
  for (const auto& c : corpus.clusters) singletons += c.singleton_noise ? 1 : 0;
  StageReport r;
  r.counts = {{"events", corpus.events.size()},
              {"clusters", corpus.clusters.size() - singletons},
              {"singleton_noise", singletons}};
  return r;
}

StageReport run_build_dataset(const RunConfig& config) {
  const Corpus corpus = load_corpus(config.corpus_dir);
  const CorpusIndex index(corpus);
  std::size_t aggregated = 0, kept = 0;
  const auto cast = cast_dataset(config, index, aggregated, kept);
  const auto classified = apply_config(cast, classification_config(config.label_config));
  const auto split = split_by_events(classified, config.train_ratio, config.split_seed);
  const auto rows = export_rows(classified, split, index);
  write_file_atomic(config.dataset_path(), render_jsonl(rows));

  StageReport r;
  r.counts = {{"cluster_examples", aggregated},
              {"kept_after_filter", kept},
              {"statement_examples", cast.size()},
              {"in_config", classified.size()},
              {"train", split.train_examples},
              {"test", split.test_examples}};
  r.output = {{"dataset", config.dataset_path().string()},
              {"train_events", split.train_events},
              {"test_events", split.test_events},
              {"class_distribution", config_distribution_table(class_distribution(cast)).to_json()}};
  return r;
}

StageReport run_dataset_stats(const RunConfig& config) {
  const Corpus corpus = load_corpus(config.corpus_dir);
  const CorpusIndex index(corpus);
  std::size_t aggregated = 0, kept = 0;
  const auto cast = cast_dataset(config, index, aggregated, kept);
  const Table table = config_distribution_table(class_distribution(cast));
  StageReport r;
  r.counts = {{"cluster_examples", aggregated}, {"kept_after_filter", kept}, {"statement_examples", cast.size()}};
  r.output = {{"table", table.to_json()}, {"text", table.render()}};
  return r;
}

StageReport run_detect(const RunConfig& config) {
  const Corpus corpus = load_corpus(config.corpus_dir);
  const CorpusIndex index(corpus);
  const auto provider = make_provider(config);
  const ScorerBundle bundle = make_scorer(config.scorer, config);
  std::unique_ptr<HttpChatClient> summary_client;
  std::unique_ptr<ChatSummarizer> summarizer;
  if (config.context.policy == ContextPolicy::kBiasedPairSummarized) {
    summary_client = std::make_unique<HttpChatClient>(endpoint_for(config.chat_url, config));
    summarizer = std::make_unique<ChatSummarizer>(*summary_client);
  }
  DetectOptions options;
  options.context = config.context;
  options.presence_threshold = config.presence_threshold;

  std::vector<const Event*> events;
  for (const auto& e : corpus.events) events.push_back(&e);
  std::sort(events.begin(), events.end(), [](const Event* a, const Event* b) { return a->id < b->id; });

  std::vector<CherryReport> reports;
  json skipped = json::array();
  std::size_t picked = 0, important = 0, failures = 0;
  for (const Event* e : events) {
    try {
      reports.push_back(detect_cherry_picking(*e, index, *bundle.scorer, options, *provider, summarizer.get()));
    } catch (const ContextUnavailableError& err) {
      skipped.push_back({{"event_id", e->id}, {"code", error_code_name(err.code())}, {"message", err.what()}});
      continue;
    } catch (const ScorerError& err) {
      skipped.push_back({{"event_id", e->id}, {"code", error_code_name(err.code())}, {"message", err.what()}});
      continue;
    }
    important += reports.back().important.size();
    failures += reports.back().failures.size();
    for (const auto& d : reports.back().documents) picked += d.cherry_picked.size();
  }

  std::string lines;
  for (const auto& rep : reports) lines += to_json(rep).dump() + "\n";
  write_file_atomic(config.corpus_dir / kReportsFile, lines);
  save_corpus(corpus, config.corpus_dir, stages_after(config.corpus_dir, "detect"));

  StageReport r;
  r.counts = {{"events", events.size()},
              {"reported", reports.size()},
              {"skipped", skipped.size()},
              {"important", important},
              {"cherry_picked", picked},
              {"scoring_failures", failures}};
  r.output = {{"reports", (config.corpus_dir / kReportsFile).string()}, {"skipped", skipped}};
  if (!reports.empty()) {
    const auto scores = outlet_scores(reports, index);
    r.output["outlet_scores"] = outlet_rows(scores);
    r.output["bias_bands"] = bias_band_table(bias_band_summary(scores, index)).to_json();
  }
  return r;
}

StageReport run_evaluate(const RunConfig& config) {
  const auto rows = rows_for_split(config.dataset_path(), config.eval_split);
  const auto classes = class_list(config, rows);
  StageReport r;
  std::vector<int> gold;
  for (const auto& row : rows) gold.push_back(row.cls);
  if (config.predictions) {
    std::map<std::string, int> predicted;
    const auto lines = split_lines(read_file(*config.predictions));
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      const json j = parse_json(lines[i], config.predictions->string() + ":" + std::to_string(i + 1));
      try {
        predicted[j.at("example_id").get<std::string>()] = j.at("class").get<int>();
      } catch (const json::exception& e) {
        throw InvalidArgumentError(config.predictions->string() + ":" + std::to_string(i + 1) + ": " + e.what());
      }
    }
    std::vector<int> preds;
    for (const auto& row : rows) {
      auto it = predicted.find(row.example_id);
      if (it == predicted.end()) throw InvalidArgumentError("no prediction for example " + row.example_id);
      preds.push_back(it->second);
    }
    r.output = {{"metrics", to_json(evaluate(preds, gold, classes))}, {"source", "predictions"}};
  } else {
    const ScorerBundle bundle = make_scorer(config.scorer, config);
    const auto scored = evaluate_with_scorer(*bundle.scorer, rows, config.context.max_words, classes);
    r.output = {{"metrics", to_json(scored.metrics)}, {"source", bundle.scorer->name()}};
    r.counts["scoring_failures"] = scored.failures;
  }
  r.counts["examples"] = rows.size();
  return r;
}

StageReport run_correlate(const RunConfig& config) {
  const Corpus corpus = load_corpus(config.corpus_dir);
  const CorpusIndex index(corpus);
  const auto reports = read_reports(config.corpus_dir / kReportsFile);
  if (reports.empty()) throw PrerequisiteError(std::string(kReportsFile) + " holds no reports; run detect first");
  const auto scores = outlet_scores(reports, index);
  const Ratings ratings = load_ratings(config, corpus);

  std::vector<std::pair<std::string, SpearmanResult>> results;
  json errors = json::array();
  for (const auto& rater : ratings.raters) {
    std::vector<double> x, y;
    const auto& values = ratings.by_rater.at(rater);
    for (const auto& s : scores) {
      auto it = values.find(s.outlet_id);
      if (it == values.end()) continue;
      x.push_back(s.mean);
      y.push_back(it->second);
    }
    try {
      results.emplace_back(rater, spearman(x, y));
    } catch (const InvalidArgumentError& e) {
      errors.push_back({{"source", rater}, {"message", e.what()}});
    }
  }
  const Table table = correlation_table(results);
  const Table bands = bias_band_table(bias_band_summary(scores, index));
  StageReport r;
  r.counts = {{"outlets", scores.size()}, {"sources", results.size()}};
  r.output = {{"correlation", table.to_json()},
              {"bias_bands", bands.to_json()},
              {"outlet_scores", outlet_rows(scores)},
              {"errors", errors},
              {"text", table.render() + "\n" + bands.render()}};
  return r;
}

StageReport run_sweep(const RunConfig& config) {
  const auto rows = rows_for_split(config.dataset_path(), config.eval_split);
  const auto classes = class_list(config, rows);
  std::vector<std::string> scorers = config.sweep_scorers;
  if (scorers.empty()) scorers.push_back(config.scorer);
  std::vector<SweepCell> cells;
  for (std::size_t length : config.sweep_lengths) {
    for (const auto& kind : scorers) {
      SweepCell cell{length, kind, std::nullopt, {}};
      try {
        const ScorerBundle bundle = make_scorer(kind, config);
        cell.metrics = evaluate_with_scorer(*bundle.scorer, rows, length, classes).metrics;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
  }
  const Table table = sweep_table(cells);
  StageReport r;
  std::size_t failed = 0;
  for (const auto& c : cells) failed += c.metrics ? 0 : 1;
  r.counts = {{"cells", cells.size()}, {"failed_cells", failed}, {"examples", rows.size()}};
  r.output = {{"table", table.to_json()}, {"text", table.render()}};
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

fs::path RunConfig::dataset_path() const { return dataset ? *dataset : corpus_dir / "dataset.jsonl"; }
fs::path RunConfig::vote_log_path() const { return vote_log ? *vote_log : corpus_dir / "votes.jsonl"; }

bool is_stage(std::string_view name) {
  return std::find(std::begin(kStages), std::end(kStages), name) != std::end(kStages);
}

std::vector<std::string> RunConfig::validate(std::string_view stage) const {
  std::vector<std::string> v;
  auto check = [&](auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      v.emplace_back(e.what());
    }
  };
  auto need_file = [&](const std::optional<fs::path>& p, std::string_view what) {
    if (!p) {
      v.push_back(std::string(what) + " is required");
    } else if (!fs::exists(*p)) {
      v.push_back(std::string(what) + " not found: " + p->string());
    }
  };
  auto need_url = [&](const std::string& url, std::string_view what) {
    if (url.empty()) {
      v.push_back(std::string(what) + " is required");
    } else if (!looks_like_url(url)) {
      v.push_back(std::string(what) + " must be an http(s) URL: " + url);
    }
  };
  auto check_scorer = [&](const std::string& kind) {
    if (kind == "lexrank") {
      check([&] { lexrank.validate(); });
    } else if (kind == "remote") {
      need_url(classifier_url, "classifier URL");
    } else if (kind == "prompt") {
      need_url(chat_url, "chat URL");
      if (demonstrations && !fs::exists(*demonstrations)) v.push_back("demonstrations not found: " + demonstrations->string());
      if (prompt_template && !fs::exists(*prompt_template)) v.push_back("prompt template not found: " + prompt_template->string());
    } else if (kind == "lookup") {
      need_file(lookup, "lookup table");
    } else {
      v.push_back("unknown scorer '" + kind + "' (lexrank, remote, prompt, lookup)");
    }
  };

  if (!is_stage(stage)) v.push_back("unknown stage '" + std::string(stage) + "'");
  if (corpus_dir.empty()) v.push_back("corpus directory is required");
  check([&] { context.validate(); });
  if (!(decision_threshold >= 0.0 && decision_threshold <= 1.0)) v.push_back("decision threshold must lie in [0,1]");
  if (!(presence_threshold >= 0.0 && presence_threshold <= 1.0)) v.push_back("presence threshold must lie in [0,1]");
  check([&] { article_dbscan.validate(); });
  check([&] { statement_dbscan.validate(); });
  if (label_config < 1 || label_config > 4) v.push_back("label config must be 1..4");
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) v.push_back("train ratio must lie in (0,1)");
  if (!(min_agreement >= 0.0 && min_agreement <= 1.0)) v.push_back("min agreement must lie in [0,1]");
  if (min_annotators == 0) v.push_back("min annotators must be positive");
  if (embedding_dimension == 0) v.push_back("embedding dimension must be positive");
  if (embedding != "hashed-ngram" && embedding != "remote-http") {
    v.push_back("unknown embedding provider '" + embedding + "' (hashed-ngram, remote-http)");
  } else if (embedding == "remote-http" &&
             (stage == "cluster-events" || stage == "cluster-statements" || stage == "detect")) {
    need_url(embedding_url, "embedding URL");
  }
  if (eval_split != "test" && eval_split != "train" && eval_split != "all") v.push_back("split must be test, train or all");
  if (abbreviations && !fs::exists(*abbreviations)) v.push_back("abbreviations not found: " + abbreviations->string());
  if (event_allow_list && !fs::exists(*event_allow_list)) {
    v.push_back("event allow-list not found: " + event_allow_list->string());
  }

  if (stage == "ingest") {
    need_file(registry, "registry");
    check([&] { parse_provider_kind(provider); });
    if (source.empty()) {
      v.push_back("provider source is required");
    } else if (provider == "gdelt" || provider == "gdelt_like_api") {
      if (!looks_like_url(source)) v.push_back("provider source must be an http(s) URL: " + source);
    } else if (!fs::is_directory(source)) {
      v.push_back("provider directory not found: " + source);
    }
    if (!(rate_limit > 0.0)) v.push_back("rate limit must be positive");
    if (fetch_attempts < 1) v.push_back("fetch attempts must be at least 1");
    if (from) check([&] { parse_timestamp(*from); });
    if (to) check([&] { parse_timestamp(*to); });
  }
  if (stage == "build-dataset" || stage == "dataset-stats") need_file(votes, "votes file");
  if (stage == "detect") {
    check_scorer(scorer);
    if (context.policy == ContextPolicy::kBiasedPairSummarized) need_url(chat_url, "chat URL (summarizer)");
  }
  if (stage == "evaluate") {
    if (predictions) {
      if (!fs::exists(*predictions)) v.push_back("predictions not found: " + predictions->string());
    } else {
      check_scorer(scorer);
    }
  }
  if (stage == "sweep-context") {
    if (sweep_lengths.empty()) v.push_back("sweep needs at least one context length");
    for (std::size_t l : sweep_lengths) {
      if (l == 0) v.push_back("context lengths must be positive");
    }
    if (sweep_scorers.empty()) {
      check_scorer(scorer);
    } else {
      for (const auto& s : sweep_scorers) check_scorer(s);
    }
  }
  if (stage == "correlate" && ratings && !fs::exists(*ratings)) v.push_back("ratings not found: " + ratings->string());
  if (stage == "serve-annotator") {
    if (port < 0 || port > 65535) v.push_back("port must lie in 0..65535");
    if (roster && !fs::exists(*roster)) v.push_back("roster not found: " + roster->string());
    if (static_dir && !fs::is_directory(*static_dir)) v.push_back("static directory not found: " + static_dir->string());
  }
  return v;
}

json RunConfig::to_json() const {
  auto opt = [](const auto& o) -> json {
    if (!o) return nullptr;
    if constexpr (std::is_same_v<std::decay_t<decltype(*o)>, fs::path>) {
      return o->string();
    } else {
      return *o;
    }
  };
  return {{"corpus", corpus_dir.string()},
          {"registry", opt(registry)},
          {"provider", provider},
          {"source", source},
          {"from", opt(from)},
          {"to", opt(to)},
          {"rate_limit", rate_limit},
          {"fetch_attempts", fetch_attempts},
          {"abbreviations", opt(abbreviations)},
          {"embedding", embedding},
          {"embedding_dimension", embedding_dimension},
          {"embedding_url", embedding_url},
          {"article_eps", article_dbscan.eps},
          {"article_min_points", article_dbscan.min_points},
          {"statement_eps", statement_dbscan.eps},
          {"statement_min_points", statement_dbscan.min_points},
          {"event_allow_list", opt(event_allow_list)},
          {"votes", opt(votes)},
          {"dataset", dataset_path().string()},
          {"label_config", label_config},
          {"min_annotators", min_annotators},
          {"min_agreement", min_agreement},
          {"train_ratio", train_ratio},
          {"split_seed", split_seed},
          {"scorer", scorer},
          {"decision_threshold", decision_threshold},
          {"lexrank",
           {{"similarity_threshold", lexrank.similarity_threshold},
            {"damping", lexrank.damping},
            {"tolerance", lexrank.tolerance},
            {"max_iterations", lexrank.max_iterations},
            {"summary_size", lexrank.summary_size}}},
          {"classifier_url", classifier_url},
          {"chat_url", chat_url},
          {"lookup", opt(lookup)},
          {"prompt_template", opt(prompt_template)},
          {"demonstrations", opt(demonstrations)},
          {"demonstration_count", demonstration_count},
          {"demonstration_seed", demonstration_seed},
          {"context",
           {{"policy", to_string(context.policy)},
            {"max_words", context.max_words},
            {"summarize_to_words", opt(context.summarize_to_words)}}},
          {"presence_threshold", presence_threshold},
          {"predictions", opt(predictions)},
          {"split", eval_split},
          {"sweep_lengths", sweep_lengths},
          {"sweep_scorers", sweep_scorers},
          {"ratings", opt(ratings)},
          {"host", host},
          {"port", port},
          {"roster", opt(roster)},
          {"static_dir", opt(static_dir)},
          {"vote_log", vote_log_path().string()}};
}

json StageReport::to_json() const {
  return {{"stage", stage},
          {"status", "ok"},
          {"counts", counts},
          {"output", output},
          {"duration_ms", duration_ms},
          {"parameters", parameters}};
}

ScorerBundle make_scorer(std::string_view kind, const RunConfig& config) {
  ScorerBundle b;
  if (kind == "lexrank") {
    b.scorer = std::make_unique<LexRankScorer>(config.lexrank);
  } else if (kind == "remote") {
    b.scorer = std::make_unique<RemoteClassifierScorer>(
        ClassifierEndpoint{endpoint_for(config.classifier_url, config), config.decision_threshold});
  } else if (kind == "prompt") {
    b.chat = std::make_unique<HttpChatClient>(endpoint_for(config.chat_url, config));
    std::vector<Demonstration> demos;
    if (config.demonstrations) {
      const auto pool = load_demonstrations(*config.demonstrations);
      demos = select_demonstrations(pool, config.demonstration_count, config.demonstration_seed);
    }
    const std::string tmpl =
        config.prompt_template ? load_prompt_template(*config.prompt_template) : default_prompt_template();
    b.scorer = std::make_unique<PromptScorer>(*b.chat, std::move(demos), tmpl, config.decision_threshold);
  } else if (kind == "lookup") {
    if (!config.lookup) throw ValidationError("lookup scorer needs a lookup table");
    b.scorer = std::make_unique<LookupScorer>(LookupScorer::from_file(*config.lookup, config.decision_threshold));
  } else {
    throw ValidationError("unknown scorer '" + std::string(kind) + "'");
  }
  return b;
}

CorpusLock::CorpusLock(const fs::path& corpus_dir) : path_(corpus_dir / kLockFile) {
  fs::create_directories(corpus_dir);
  for (int attempt = 0; attempt < 2; ++attempt) {
    const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_EXCL, 0644);
    if (fd >= 0) {
      const std::string pid = std::to_string(::getpid()) + "\n";
      [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
      ::close(fd);
      return;
    }
    long holder = 0;
    try {
      holder = std::stol(read_file(path_));
    } catch (const std::exception&) {
    }
    if (holder > 0 && (::kill(static_cast<pid_t>(holder), 0) == 0 || errno == EPERM)) break;
    std::error_code ec;
    fs::remove(path_, ec);
  }
  path_.clear();
  throw ConflictError("corpus directory " + corpus_dir.string() + " is locked by another pipeline (" + kLockFile + ")");
}

CorpusLock::~CorpusLock() {
  if (path_.empty()) return;
  std::error_code ec;
  fs::remove(path_, ec);
}

StageReport run_stage(std::string_view stage, const RunConfig& config) {
  const auto violations = config.validate(stage);
  if (!violations.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw ValidationError(msg);
  }
  if (stage == "serve-annotator") throw InvalidArgumentError("serve-annotator runs from the command line only");
  check_prerequisites(stage, config);

  const CorpusLock lock(config.corpus_dir);
  const auto start = std::chrono::steady_clock::now();
  StageReport r;
  if (stage == "ingest") r = run_ingest(config);
  else if (stage == "segment") r = run_segment(config);
  else if (stage == "cluster-events") r = run_cluster_events(config);
  else if (stage == "cluster-statements") r = run_cluster_statements(config);
  else if (stage == "build-dataset") r = run_build_dataset(config);
  else if (stage == "dataset-stats") r = run_dataset_stats(config);
  else if (stage == "detect") r = run_detect(config);
  else if (stage == "evaluate") {
    if (!fs::exists(config.dataset_path())) {
      throw PrerequisiteError("evaluate needs " + config.dataset_path().string() + "; run build-dataset first");
    }
    r = run_evaluate(config);
  } else if (stage == "correlate") r = run_correlate(config);
  else if (stage == "sweep-context") {
    if (!fs::exists(config.dataset_path())) {
      throw PrerequisiteError("sweep-context needs " + config.dataset_path().string() + "; run build-dataset first");
    }
    r = run_sweep(config);
  }
  r.stage = std::string(stage);
  r.duration_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  r.parameters = config.to_json();
  return r;
}

void check_stage_prerequisites(std::string_view stage, const RunConfig& config) {
  check_prerequisites(stage, config);
}

int exit_code_for(const std::exception& error) {
  if (const auto* e = dynamic_cast<const Error*>(&error)) {
    switch (e->code()) {
      case ErrorCode::kValidation:
      case ErrorCode::kInvalidArgument: return 2;
      case ErrorCode::kPrerequisite: return 3;
      default: return 4;
    }
  }
  return 4;
}

}  // namespace cherry
