#include "cherry/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cherry/error.hpp"
#include "cherry/json_io.hpp"

namespace cherry {

ImportanceLabel label_from_int(int value) {
  if (value < 1 || value > 5) throw InvalidArgumentError("label out of range 1..5: " + std::to_string(value));
  return static_cast<ImportanceLabel>(value);
}

std::string_view label_wording(ImportanceLabel label) {
  switch (label) {
    case ImportanceLabel::kVeryImportant: return "very important";
    case ImportanceLabel::kKindOfImportant: return "kind of important";
    case ImportanceLabel::kNotVeryImportant: return "not very important";
    case ImportanceLabel::kExcerptsIncorrect: return "the excerpts might be incorrect";
    case ImportanceLabel::kNotSure: return "I am not sure";
  }
  return "";
}

std::vector<AnnotationExample> aggregate_annotations(std::span<const VoteRecord> votes, const CorpusIndex& index) {
  struct Group {
    const StatementCluster* cluster = nullptr;
    std::string context_article_id;
    std::map<std::string, ImportanceLabel> latest;
  };
  std::map<std::string, Group> groups;
  for (const auto& v : votes) {
    const StatementCluster* cluster = index.cluster(v.cluster_id);
    if (!cluster) throw InvalidArgumentError("vote references unknown cluster '" + v.cluster_id + "'");
    if (v.annotator.empty()) throw InvalidArgumentError("vote without annotator on cluster '" + v.cluster_id + "'");
    auto& g = groups[v.cluster_id + "@" + v.context_article_id];
    g.cluster = cluster;
    g.context_article_id = v.context_article_id;
    g.latest[v.annotator] = v.label;
  }

  std::vector<AnnotationExample> out;
  for (auto& [key, g] : groups) {
    std::map<ImportanceLabel, std::size_t> counts;
    for (const auto& [_, label] : g.latest) ++counts[label];
    std::size_t best = 0;
    std::size_t holders = 0;
    ImportanceLabel majority = ImportanceLabel::kNotSure;
    for (const auto& [label, count] : counts) {
      if (count > best) {
        best = count;
        holders = 1;
        majority = label;
      } else if (count == best) {
        ++holders;
      }
    }
    if (holders != 1) continue;  // tie

    AnnotationExample e;
    e.id = key;
    e.event_id = g.cluster->event_id;
    e.cluster_id = g.cluster->id;
    e.statement_id = g.cluster->representative_id;
    e.context_article_id = g.context_article_id;
    e.label = majority;
    e.votes = std::move(g.latest);
    e.agreement_ratio = static_cast<double>(best) / static_cast<double>(e.votes.size());
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<AnnotationExample> filter_examples(std::vector<AnnotationExample> examples, std::size_t min_annotators,
                                               double min_agreement) {
  std::erase_if(examples, [&](const AnnotationExample& e) {
    return e.vote_count() < min_annotators || e.agreement_ratio < min_agreement;
  });
  return examples;
}

std::vector<AnnotationExample> cast_labels(const AnnotationExample& cluster_example, const StatementCluster& cluster) {
  if (cluster_example.cluster_id != cluster.id) {
    throw InvalidArgumentError("example " + cluster_example.id + " does not belong to cluster " + cluster.id);
  }
  std::vector<AnnotationExample> out;
  out.reserve(cluster.statement_ids.size());
  for (const auto& sid : cluster.statement_ids) {
    AnnotationExample e = cluster_example;
    e.id = cluster_example.id + "#" + sid;
    e.statement_id = sid;
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::optional<int> ClassificationConfig::class_of(ImportanceLabel label) const {
  auto it = classes.find(label);
  if (it == classes.end()) return std::nullopt;
  return it->second;
}

std::vector<ImportanceLabel> ClassificationConfig::labels_of(int cls) const {
  std::vector<ImportanceLabel> out;
  for (const auto& [label, c] : classes) {
    if (c == cls) out.push_back(label);
  }
  return out;
}

ClassificationConfig classification_config(int id) {
  using L = ImportanceLabel;
  ClassificationConfig c;
  c.id = id;
  switch (id) {
    case 1:
      c.classes = {{L::kVeryImportant, 1}, {L::kKindOfImportant, 2}, {L::kNotVeryImportant, 2},
                   {L::kExcerptsIncorrect, 2}, {L::kNotSure, 2}};
      c.class_count = 2;
      break;
    case 2:
      c.classes = {{L::kVeryImportant, 1}, {L::kKindOfImportant, 2}, {L::kNotVeryImportant, 2}};
      c.class_count = 2;
      break;
    case 3:
      c.classes = {{L::kVeryImportant, 1}, {L::kKindOfImportant, 2}, {L::kNotVeryImportant, 2},
                   {L::kExcerptsIncorrect, 3}, {L::kNotSure, 3}};
      c.class_count = 3;
      break;
    case 4:
      c.classes = {{L::kVeryImportant, 1}, {L::kKindOfImportant, 2}, {L::kNotVeryImportant, 3}};
      c.class_count = 3;
      break;
    default:
      throw InvalidArgumentError("classification config must be 1..4, got " + std::to_string(id));
  }
  return c;
}

std::vector<ClassifiedExample> apply_config(std::span<const AnnotationExample> examples,
                                            const ClassificationConfig& config) {
  std::vector<ClassifiedExample> out;
  for (const auto& e : examples) {
    if (auto cls = config.class_of(e.label)) out.push_back({e, *cls});
  }
  return out;
}

bool DatasetSplit::is_train(std::string_view event_id) const {
  return std::binary_search(train_events.begin(), train_events.end(), event_id);
}

DatasetSplit split_by_events(std::span<const ClassifiedExample> dataset, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgumentError("split ratio must lie in (0,1)");
  std::map<std::string, std::size_t> per_event;
  for (const auto& e : dataset) ++per_event[e.example.event_id];
  if (per_event.size() < 2) throw InvalidArgumentError("splitting by events needs at least 2 events");

  std::vector<std::string> order;
  for (const auto& [id, _] : per_event) order.push_back(id);
  seeded_shuffle(order, seed);

  const double target = ratio * static_cast<double>(dataset.size());
  std::size_t best_k = 1;
  double best_gap = std::numeric_limits<double>::infinity();
  std::size_t running = 0;
  for (std::size_t k = 1; k < order.size(); ++k) {
    running += per_event[order[k - 1]];
    const double gap = std::abs(static_cast<double>(running) - target);
    if (gap < best_gap) {
      best_gap = gap;
      best_k = k;
    }
  }

  DatasetSplit split;
  split.ratio = ratio;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k < best_k) {
      split.train_events.push_back(order[k]);
      split.train_examples += per_event[order[k]];
    } else {
      split.test_events.push_back(order[k]);
      split.test_examples += per_event[order[k]];
    }
  }
  std::sort(split.train_events.begin(), split.train_events.end());
  std::sort(split.test_events.begin(), split.test_events.end());
  return split;
}

// ---------------------------------------------------------------------------

std::vector<ExportRow> export_rows(std::span<const ClassifiedExample> dataset, const DatasetSplit& split,
                                   const CorpusIndex& index) {
  std::vector<ExportRow> rows;
  rows.reserve(dataset.size());
  for (const auto& c : dataset) {
    const Statement* s = index.statement(c.example.statement_id);
    if (!s) throw DanglingReferenceError("example " + c.example.id + " names unknown statement");
    const Article* context = index.article(c.example.context_article_id);
    if (!context) throw DanglingReferenceError("example " + c.example.id + " names unknown context article");
    rows.push_back({c.example.id, s->id, s->text, context->body, to_int(c.example.label), c.cls, c.example.event_id,
                    split.is_train(c.example.event_id) ? "train" : "test"});
  }
  return rows;
}

std::string render_jsonl(std::span<const ExportRow> rows) {
  std::string out;
  for (const auto& r : rows) {
    out += json{{"example_id", r.example_id},
                {"statement_id", r.statement_id},
                {"statement_text", r.statement_text},
                {"context_text", r.context_text},
                {"label", r.label},
                {"class", r.cls},
                {"event_id", r.event_id},
                {"split", r.split}}
               .dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<ExportRow> parse_dataset_jsonl(std::string_view text) {
  std::vector<ExportRow> rows;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const json j = parse_json(lines[i], "dataset line " + std::to_string(i + 1));
    try {
      rows.push_back({j.value("example_id", ""), j.value("statement_id", ""),
                      j.at("statement_text").get<std::string>(), j.at("context_text").get<std::string>(),
                      j.at("label").get<int>(), j.at("class").get<int>(), j.at("event_id").get<std::string>(),
                      j.at("split").get<std::string>()});
    } catch (const json::exception& e) {
      throw InvalidArgumentError("dataset line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<VoteRecord> parse_votes_jsonl(std::string_view text) {
  std::vector<VoteRecord> votes;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const json j = parse_json(lines[i], "vote line " + std::to_string(i + 1));
    try {
      VoteRecord v;
      v.annotator = j.at("annotator").get<std::string>();
      v.cluster_id = j.at("cluster_id").get<std::string>();
      v.event_id = j.value("event_id", "");
      v.context_article_id = j.value("context_article_id", "");
      v.label = label_from_int(j.at("label").get<int>());
      v.submitted_at = parse_timestamp(j.at("submitted_at").get<std::string>());
      votes.push_back(std::move(v));
    } catch (const json::exception& e) {
      throw InvalidArgumentError("vote line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return votes;
}

std::string render_votes_jsonl(std::span<const VoteRecord> votes) {
  std::string out;
  for (const auto& v : votes) {
    out += json{{"annotator", v.annotator},
                {"cluster_id", v.cluster_id},
                {"event_id", v.event_id},
                {"context_article_id", v.context_article_id},
                {"label", to_int(v.label)},
                {"submitted_at", format_timestamp(v.submitted_at)}}
               .dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<ConfigDistribution> class_distribution(std::span<const AnnotationExample> examples) {
  std::vector<ConfigDistribution> out;
  for (int id = 1; id <= 4; ++id) {
    const auto config = classification_config(id);
    const auto classified = apply_config(examples, config);
    ConfigDistribution dist{id, {}};
    for (int cls = 1; cls <= config.class_count; ++cls) {
      ClassCount cc{config.labels_of(cls), 0, 0.0};
      for (const auto& c : classified) cc.count += c.cls == cls ? 1 : 0;
      cc.share = classified.empty() ? 0.0 : static_cast<double>(cc.count) / static_cast<double>(classified.size());
      dist.classes.push_back(std::move(cc));
    }
    out.push_back(std::move(dist));
  }
  return out;
}

}  // namespace cherry
