#include "http_client.hpp"

#include <httplib.h>

#include <chrono>
#include <thread>

#include "cherry/error.hpp"

namespace cherry::detail {

HttpJsonClient::HttpJsonClient(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  if (endpoint_.base_url.empty()) throw InvalidArgumentError("remote endpoint has no base URL");
  if (endpoint_.max_attempts < 1) throw InvalidArgumentError("remote endpoint needs at least one attempt");
}

std::string HttpJsonClient::send(std::string_view method, std::string_view path, const std::string* body) const {
  httplib::Client client(endpoint_.base_url);
  const auto timeout = std::chrono::milliseconds(endpoint_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  std::string last_error;
  for (int attempt = 0; attempt < endpoint_.max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(endpoint_.backoff_base_ms << (attempt - 1)));
    }
    const std::string p(path);
    auto result = method == "POST" ? client.Post(p, *body, "application/json") : client.Get(p);
    if (!result) {
      last_error = httplib::to_string(result.error());
      continue;
    }
    if (result->status >= 500) {
      last_error = "HTTP " + std::to_string(result->status);
      continue;
    }
    if (result->status < 200 || result->status >= 300) {
      throw ProtocolError(endpoint_.base_url + p + " answered HTTP " + std::to_string(result->status));
    }
    return result->body;
  }
  throw ProviderError(endpoint_.base_url + std::string(path) + " unreachable after " +
                      std::to_string(endpoint_.max_attempts) + " attempts: " + last_error);
}

json HttpJsonClient::post(std::string_view path, const json& body) const {
  const std::string payload = body.dump();
  const std::string response = send("POST", path, &payload);
  try {
    return json::parse(response);
  } catch (const json::parse_error&) {
    throw ProtocolError(endpoint_.base_url + std::string(path) + " returned malformed JSON");
  }
}

json HttpJsonClient::get(std::string_view path) const {
  const std::string response = send("GET", path, nullptr);
  try {
    return json::parse(response);
  } catch (const json::parse_error&) {
    throw ProtocolError(endpoint_.base_url + std::string(path) + " returned malformed JSON");
  }
}

std::string HttpJsonClient::get_text(std::string_view path) const { return send("GET", path, nullptr); }

}  // namespace cherry::detail
