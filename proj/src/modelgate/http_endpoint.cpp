#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include "figforge/common/error.hpp"
#include "figforge/modelgate/endpoint.hpp"

namespace figforge::modelgate {

namespace {

// Splits "scheme://host[:port]/path" into the client base and the request path.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::ConfigInvalid, "endpoint url needs a scheme: " + url);
  }
  const std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpEndpoint::HttpEndpoint(HttpEndpointConfig cfg) : cfg_(std::move(cfg)) {
  std::tie(scheme_host_port_, path_) = split_url(cfg_.url);
}

std::string HttpEndpoint::complete(const ChatRequest& req) {
  ChatRequest wire = req;
  if (wire.model.empty()) wire.model = cfg_.model;

  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(cfg_.timeout);
  client.set_write_timeout(cfg_.timeout);
  httplib::Headers headers;
  if (!cfg_.api_key_env.empty()) {
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  auto res = client.Post(path_, headers, to_wire_json(wire).dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::EndpointUnreachable,
                cfg_.url + ": " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::EndpointUnreachable, cfg_.url + ": HTTP " + std::to_string(res->status));
  }
  const auto body = nlohmann::json::parse(res->body, nullptr, false);
  if (body.is_discarded()) throw Error(ErrorCode::MalformedResponse, "response body is not JSON");
  return parse_chat_response(body);
}

}  // namespace figforge::modelgate
