#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "cherry/annotate.hpp"
#include "cherry/error.hpp"
#include "cherry/pipeline.hpp"

using namespace cherry;

namespace {

void print_human(const StageReport& r) {
  std::cout << r.stage << ": ok (" << r.duration_ms << " ms)\n";
  for (const auto& [k, v] : r.counts.items()) std::cout << "  " << k << ": " << v.dump() << "\n";
  if (r.output.contains("text")) std::cout << "\n" << r.output["text"].get<std::string>();
  if (r.output.contains("metrics")) std::cout << r.output["metrics"].dump(2) << "\n";
}

int report_error(const std::string& stage, const std::exception& e, bool as_json) {
  const int code = exit_code_for(e);
  const auto* err = dynamic_cast<const Error*>(&e);
  const std::string name = err ? error_code_name(err->code()) : "internal";
  if (as_json) {
    std::cout << json{{"stage", stage}, {"status", "error"}, {"code", name}, {"message", e.what()}, {"exit_code", code}}
                     .dump(2)
              << "\n";
  } else {
    std::cerr << "cherry " << stage << ": " << name << ": " << e.what() << "\n";
  }
  return code;
}

int serve(const RunConfig& config, bool as_json) {
  const auto violations = config.validate("serve-annotator");
  if (!violations.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw ValidationError(msg);
  }
  check_stage_prerequisites("serve-annotator", config);
  const Corpus corpus = load_corpus(config.corpus_dir);
  VoteStore store(config.vote_log_path());
  AnnotationService service(corpus, store);
  std::optional<Roster> roster;
  if (config.roster) roster = Roster::load(*config.roster);
  AnnotationServer server(service, roster, config.static_dir);
  const int port = server.start(config.host, config.port);
  if (as_json) {
    std::cout << json{{"stage", "serve-annotator"}, {"status", "listening"}, {"host", config.host}, {"port", port}}.dump()
              << std::endl;
  } else {
    std::cout << "annotation service on http://" << config.host << ":" << port << std::endl;
  }
  server.wait();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cherry: cherry-picking detection over multi-outlet news coverage"};
  app.set_config("--config", "", "structured config file (key = value, [sections] allowed)");
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig c;
  bool as_json = false;
  std::string context_policy = "neutral";
  std::optional<std::size_t> summarize_to;
  std::string corpus;

  app.add_flag("--json", as_json, "print stage reports as JSON");
  app.add_option("--corpus,--out", corpus, "corpus directory");

  app.add_option("--registry", c.registry, "source registry JSON");
  app.add_option("--provider", c.provider, "local_directory | gdelt_like_api");
  app.add_option("--source", c.source, "provider directory or base URL");
  app.add_option("--from", c.from, "window start (overrides registry)");
  app.add_option("--to", c.to, "window end (overrides registry)");
  app.add_option("--rate-limit", c.rate_limit, "provider requests per second");
  app.add_option("--fetch-attempts", c.fetch_attempts);

  app.add_option("--abbreviations", c.abbreviations, "abbreviation list, one per line");
  app.add_option("--embedding", c.embedding, "hashed-ngram | remote-http");
  app.add_option("--embedding-dim", c.embedding_dimension);
  app.add_option("--embedding-url", c.embedding_url);
  app.add_option("--article-eps", c.article_dbscan.eps);
  app.add_option("--article-min-points", c.article_dbscan.min_points);
  app.add_option("--statement-eps", c.statement_dbscan.eps);
  app.add_option("--statement-min-points", c.statement_dbscan.min_points);
  app.add_option("--event-allow-list", c.event_allow_list);

  app.add_option("--votes", c.votes, "vote records (JSONL)");
  app.add_option("--dataset", c.dataset, "dataset JSONL (default <corpus>/dataset.jsonl)");
  app.add_option("--label-config", c.label_config, "label grouping 1..4");
  app.add_option("--min-annotators", c.min_annotators);
  app.add_option("--min-agreement", c.min_agreement);
  app.add_option("--train-ratio", c.train_ratio);
  app.add_option("--split-seed", c.split_seed);

  app.add_option("--scorer", c.scorer, "lexrank | remote | prompt | lookup");
  app.add_option("--threshold", c.decision_threshold, "classification threshold");
  app.add_option("--lexrank-threshold", c.lexrank.similarity_threshold);
  app.add_option("--lexrank-damping", c.lexrank.damping);
  app.add_option("--summary-size", c.lexrank.summary_size);
  app.add_option("--classifier-url", c.classifier_url);
  app.add_option("--chat-url", c.chat_url);
  app.add_option("--lookup", c.lookup, "JSONL of {text, probability}");
  app.add_option("--prompt-template", c.prompt_template);
  app.add_option("--demonstrations", c.demonstrations, "JSONL of {context, statement, important}");
  app.add_option("--demo-count", c.demonstration_count);
  app.add_option("--demo-seed", c.demonstration_seed);
  app.add_option("--timeout-ms", c.remote_timeout_ms);
  app.add_option("--max-in-flight", c.max_in_flight);

  app.add_option("--context", context_policy, "neutral | biased-pair");
  app.add_option("--max-words", c.context.max_words);
  app.add_option("--summarize-to", summarize_to);
  app.add_option("--presence-threshold", c.presence_threshold);

  app.add_option("--predictions", c.predictions, "JSONL of {example_id, class}");
  app.add_option("--split", c.eval_split, "test | train | all");
  app.add_option("--lengths", c.sweep_lengths, "context lengths for sweep-context");
  app.add_option("--scorers", c.sweep_scorers, "scorers for sweep-context");
  app.add_option("--ratings", c.ratings, "CSV outlet_id,<rater>,...");

  app.add_option("--host", c.host);
  app.add_option("--port", c.port);
  app.add_option("--roster", c.roster);
  app.add_option("--static-dir", c.static_dir);
  app.add_option("--vote-log", c.vote_log);

  std::optional<double> eps;
  std::optional<std::size_t> min_points;
  for (const char* stage : kStages) {
    auto* sub = app.add_subcommand(stage);
    if (std::string_view(stage) == "cluster-events" || std::string_view(stage) == "cluster-statements") {
      sub->add_option("--eps", eps, "DBSCAN radius on 1 - cosine");
      sub->add_option("--min-points", min_points, "DBSCAN core size");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; every other usage error counts as a validation failure.
    return app.exit(e) == 0 ? 0 : 2;
  }
  const std::string stage = app.get_subcommands().front()->get_name();

  try {
    c.corpus_dir = corpus;
    c.context.policy = parse_context_policy(context_policy);
    c.context.summarize_to_words = summarize_to;
    DbscanParams& target = stage == "cluster-events" ? c.article_dbscan : c.statement_dbscan;
    if (eps) target.eps = *eps;
    if (min_points) target.min_points = *min_points;

    if (stage == "serve-annotator") return serve(c, as_json);
    const StageReport report = run_stage(stage, c);
    if (as_json) {
      std::cout << report.to_json().dump(2) << "\n";
    } else {
      print_human(report);
    }
    return 0;
  } catch (const std::exception& e) {
    return report_error(stage, e, as_json);
  }
}
