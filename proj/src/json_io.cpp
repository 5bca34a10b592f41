#include "cherry/json_io.hpp"

#include "cherry/error.hpp"

namespace cherry {

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgumentError(std::string(what) + ": malformed JSON: " + e.what());
  }
}

json to_json(const Outlet& o) {
  json ratings = json::object();
  for (const auto& [rater, score] : o.bias_ratings) ratings[std::string(to_string(rater))] = score;
  return json{{"id", o.id},
              {"name", o.name},
              {"domain", o.domain},
              {"bias_category", to_string(o.bias_category)},
              {"bias_ratings", ratings}};
}

json to_json(const Article& a) {
  return json{{"id", a.id},
              {"outlet_id", a.outlet_id},
              {"url", a.url},
              {"headline", a.headline},
              {"body", a.body},
              {"published_at", format_timestamp(a.published_at)},
              {"kind", to_string(a.kind)}};
}

json to_json(const Statement& s) {
  return json{{"id", s.id}, {"article_id", s.article_id}, {"ordinal", s.ordinal}, {"text", s.text},
              {"word_count", s.word_count}};
}

json to_json(const Event& e) {
  return json{{"id", e.id},
              {"title", e.title},
              {"article_ids", e.article_ids},
              {"window", {{"start", format_timestamp(e.window.start)}, {"end", format_timestamp(e.window.end)}}}};
}

json to_json(const StatementCluster& c) {
  return json{{"id", c.id},
              {"event_id", c.event_id},
              {"statement_ids", c.statement_ids},
              {"representative_id", c.representative_id},
              {"singleton_noise", c.singleton_noise}};
}

Outlet outlet_from_json(const json& j) {
  Outlet o;
  o.id = j.at("id").get<std::string>();
  o.name = j.at("name").get<std::string>();
  o.domain = j.at("domain").get<std::string>();
  o.bias_category = parse_bias_category(j.at("bias_category").get<std::string>());
  for (const auto& [rater, score] : j.at("bias_ratings").items()) {
    o.bias_ratings[parse_rater(rater)] = score.get<int>();
  }
  return o;
}

Article article_from_json(const json& j) {
  Article a;
  a.id = j.at("id").get<std::string>();
  a.outlet_id = j.at("outlet_id").get<std::string>();
  a.url = j.at("url").get<std::string>();
  a.headline = j.at("headline").get<std::string>();
  a.body = j.at("body").get<std::string>();
  a.published_at = parse_timestamp(j.at("published_at").get<std::string>());
  a.kind = parse_article_kind(j.at("kind").get<std::string>());
  return a;
}

Statement statement_from_json(const json& j) {
  Statement s;
  s.id = j.at("id").get<std::string>();
  s.article_id = j.at("article_id").get<std::string>();
  s.ordinal = j.at("ordinal").get<std::size_t>();
  s.text = j.at("text").get<std::string>();
  s.word_count = j.at("word_count").get<std::size_t>();
  return s;
}

Event event_from_json(const json& j) {
  Event e;
  e.id = j.at("id").get<std::string>();
  e.title = j.at("title").get<std::string>();
  e.article_ids = j.at("article_ids").get<std::vector<std::string>>();
  e.window.start = parse_timestamp(j.at("window").at("start").get<std::string>());
  e.window.end = parse_timestamp(j.at("window").at("end").get<std::string>());
  return e;
}

StatementCluster cluster_from_json(const json& j) {
  StatementCluster c;
  c.id = j.at("id").get<std::string>();
  c.event_id = j.at("event_id").get<std::string>();
  c.statement_ids = j.at("statement_ids").get<std::vector<std::string>>();
  c.representative_id = j.at("representative_id").get<std::string>();
  c.singleton_noise = j.at("singleton_noise").get<bool>();
  return c;
}

}  // namespace cherry
