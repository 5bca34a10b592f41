#include "cherry/cluster.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <set>

#include "cherry/error.hpp"

namespace cherry {

void DbscanParams::validate() const {
  if (!(eps > 0.0 && eps <= 2.0)) throw InvalidArgumentError("DBSCAN eps must lie in (0, 2]");
  if (min_points < 1) throw InvalidArgumentError("DBSCAN min_points must be at least 1");
}

namespace {

std::vector<std::vector<std::size_t>> neighbourhoods(std::span<const HybridVector> points, double eps) {
  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].push_back(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (1.0 - cosine(points[i], points[j]) <= eps) {
        out[i].push_back(j);
        out[j].push_back(i);
      }
    }
  }
  for (auto& list : out) std::sort(list.begin(), list.end());
  return out;
}

}  // namespace

ClusterAssignment dbscan(std::span<const HybridVector> points, const DbscanParams& params) {
  params.validate();
  constexpr int kUnvisited = -2;
  ClusterAssignment result;
  result.labels.assign(points.size(), kUnvisited);
  if (points.empty()) return result;

  const auto neighbours = neighbourhoods(points, params.eps);
  auto is_core = [&](std::size_t i) { return neighbours[i].size() >= params.min_points; };

  for (std::size_t i = 0; i < points.size(); ++i) {
    if (result.labels[i] != kUnvisited) continue;
    if (!is_core(i)) {
      result.labels[i] = ClusterAssignment::kNoise;
      continue;
    }
    const int cluster = result.cluster_count++;
    result.labels[i] = cluster;
    std::deque<std::size_t> frontier(neighbours[i].begin(), neighbours[i].end());
    while (!frontier.empty()) {
      const std::size_t q = frontier.front();
      frontier.pop_front();
      if (result.labels[q] == ClusterAssignment::kNoise) {
        result.labels[q] = cluster;  // border point
        continue;
      }
      if (result.labels[q] != kUnvisited) continue;
      result.labels[q] = cluster;
      if (is_core(q)) frontier.insert(frontier.end(), neighbours[q].begin(), neighbours[q].end());
    }
  }
  return result;
}

std::vector<Event> cluster_articles(std::span<const Article> articles, const EmbeddingProvider& provider,
                                    const DbscanParams& params) {
  if (articles.size() < 2) throw InvalidArgumentError("clustering articles needs at least 2 articles");
  std::vector<const Article*> sorted;
  for (const auto& a : articles) sorted.push_back(&a);
  std::sort(sorted.begin(), sorted.end(), [](const Article* a, const Article* b) { return a->id < b->id; });

  std::vector<std::string> texts;
  for (const Article* a : sorted) texts.push_back(article_vector_text(*a));
  const TfidfModel tfidf = TfidfModel::fit(texts);
  const auto vectors = vectorize_hybrid_batch(texts, tfidf, provider);
  const auto assignment = dbscan(vectors, params);

  std::vector<std::vector<const Article*>> members(assignment.cluster_count);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (assignment.labels[i] != ClusterAssignment::kNoise) members[assignment.labels[i]].push_back(sorted[i]);
  }

  std::vector<Event> events;
  for (const auto& group : members) {
    Event e;
    for (const Article* a : group) e.article_ids.push_back(a->id);
    std::sort(e.article_ids.begin(), e.article_ids.end());
    e.id = make_event_id(e.article_ids);
    const auto [earliest, latest] = std::minmax_element(
        group.begin(), group.end(), [](const Article* a, const Article* b) {
          return a->published_at != b->published_at ? a->published_at < b->published_at : a->id < b->id;
        });
    e.title = (*earliest)->headline;
    e.window = {(*earliest)->published_at, (*latest)->published_at};
    events.push_back(std::move(e));
  }
  return events;
}

std::vector<StatementCluster> cluster_statements(const Event& event, const CorpusIndex& index,
                                                 const EmbeddingProvider& provider, const DbscanParams& params) {
  std::vector<const Statement*> candidates;
  for (const auto& aid : event.article_ids) {
    for (const Statement* s : index.statements_of(aid)) {
      if (s->word_count >= kMinClusterWords) candidates.push_back(s);
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Statement* a, const Statement* b) { return a->id < b->id; });
  if (candidates.empty()) return {};

  std::vector<std::string> texts;
  for (const Statement* s : candidates) texts.push_back(s->text);
  const TfidfModel tfidf = TfidfModel::fit(texts);
  const auto vectors = vectorize_hybrid_batch(texts, tfidf, provider);
  const auto assignment = dbscan(vectors, params);

  // Representative: lowest ordinal within the earliest-published article.
  auto earlier = [&](const Statement* a, const Statement* b) {
    const Article* aa = index.article(a->article_id);
    const Article* ab = index.article(b->article_id);
    if (aa->published_at != ab->published_at) return aa->published_at < ab->published_at;
    if (aa->id != ab->id) return aa->id < ab->id;
    return a->ordinal < b->ordinal;
  };

  std::vector<std::vector<const Statement*>> members(assignment.cluster_count);
  std::vector<const Statement*> noise;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (assignment.labels[i] == ClusterAssignment::kNoise) {
      noise.push_back(candidates[i]);
    } else {
      members[assignment.labels[i]].push_back(candidates[i]);
    }
  }

  std::vector<StatementCluster> out;
  char suffix[32];
  for (const auto& group : members) {
    StatementCluster c;
    std::snprintf(suffix, sizeof(suffix), "/c%04zu", out.size());
    c.id = event.id + suffix;
    c.event_id = event.id;
    for (const Statement* s : group) c.statement_ids.push_back(s->id);
    std::sort(c.statement_ids.begin(), c.statement_ids.end());
    c.representative_id = (*std::min_element(group.begin(), group.end(), earlier))->id;
    out.push_back(std::move(c));
  }
  for (std::size_t k = 0; k < noise.size(); ++k) {
    StatementCluster c;
    std::snprintf(suffix, sizeof(suffix), "/n%04zu", k);
    c.id = event.id + suffix;
    c.event_id = event.id;
    c.statement_ids = {noise[k]->id};
    c.representative_id = noise[k]->id;
    c.singleton_noise = true;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Event> apply_event_allow_list(std::vector<Event> events, const std::filesystem::path& allow_list) {
  std::set<std::string> allowed;
  for (const auto& line : split_lines(read_file(allow_list))) {
    auto id = trim(line);
    if (!id.empty() && id.front() != '#') allowed.emplace(id);
  }
  std::erase_if(events, [&](const Event& e) { return allowed.count(e.id) == 0; });
  return events;
}

}  // namespace cherry
