#pragma once

#include <span>
#include <string>
#include <vector>

#include "cherry/model.hpp"
#include "cherry/textproc.hpp"

namespace cherry {

struct DbscanParams {
  double eps = 0.04;  // radius on 1 - cosine
  std::size_t min_points = 2;

  void validate() const;
};

inline constexpr DbscanParams kArticleDbscan{0.04, 2};
inline constexpr DbscanParams kStatementDbscan{0.07, 2};

struct ClusterAssignment {
  static constexpr int kNoise = -1;

  std::vector<int> labels;  // one per input point, kNoise or 0..cluster_count-1
  int cluster_count = 0;
};

// Standard DBSCAN on distance 1 - cosine, where the neighbourhood of a point
// includes the point itself. Points are visited in input order and a border
// point joins the first cluster that reaches it, so callers that sort their
// inputs by id get reproducible labels.
ClusterAssignment dbscan(std::span<const HybridVector> points, const DbscanParams& params);

// Events from the non-noise article clusters. Articles are vectorized from
// headline plus first paragraph against a TF-IDF model fit on those texts.
std::vector<Event> cluster_articles(std::span<const Article> articles, const EmbeddingProvider& provider,
                                    const DbscanParams& params = kArticleDbscan);

// Statement clusters for one event. Proper clusters come first, followed by
// one singleton-noise pseudo-cluster per unclustered statement. Statements
// under kMinClusterWords words are left out entirely.
std::vector<StatementCluster> cluster_statements(const Event& event, const CorpusIndex& index,
                                                 const EmbeddingProvider& provider,
                                                 const DbscanParams& params = kStatementDbscan);

// Keeps events whose id appears in the allow-list (one id per line).
std::vector<Event> apply_event_allow_list(std::vector<Event> events, const std::filesystem::path& allow_list);

}  // namespace cherry
