#pragma once

#include "json.hpp"

#include "cherry/model.hpp"

namespace cherry {

using nlohmann::json;

json to_json(const Outlet& outlet);
json to_json(const Article& article);
json to_json(const Statement& statement);
json to_json(const Event& event);
json to_json(const StatementCluster& cluster);

Outlet outlet_from_json(const json& j);
Article article_from_json(const json& j);
Statement statement_from_json(const json& j);
Event event_from_json(const json& j);
StatementCluster cluster_from_json(const json& j);

// Parses a JSON object, raising InvalidArgumentError with `what` on failure.
json parse_json(std::string_view text, std::string_view what);

}  // namespace cherry
