#pragma once

// JSON-over-HTTP with retry, shared by every remote client.

#include <string>
#include <string_view>

#include "cherry/json_io.hpp"
#include "cherry/textproc.hpp"

namespace cherry::detail {

class HttpJsonClient {
 public:
  explicit HttpJsonClient(RemoteEndpoint endpoint);

  // Transport failures and 5xx responses are retried with exponential
  // backoff; exhausting the attempts raises ProviderError. Other non-2xx
  // statuses and unparsable bodies raise ProtocolError immediately.
  json post(std::string_view path, const json& body) const;
  json get(std::string_view path) const;
  // Raw body of a GET, for line-delimited payloads.
  std::string get_text(std::string_view path) const;

  const RemoteEndpoint& endpoint() const { return endpoint_; }

 private:
  std::string send(std::string_view method, std::string_view path, const std::string* body) const;

  RemoteEndpoint endpoint_;
};

}  // namespace cherry::detail
