#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "figforge/modelgate/types.hpp"

namespace figforge::modelgate {

struct EncodedImage {
  std::string mime_type;  // "image/png" or "image/jpeg"
  std::vector<std::uint8_t> bytes;
};

// What actually goes on the wire for one attempt.
struct ChatRequest {
  TemplateId template_id = TemplateId::Img2Tikz;
  std::string model;
  std::string system_text;
  std::string user_text;
  std::optional<EncodedImage> image;
  double temperature = 0.0;
  std::uint32_t max_tokens = 4096;
};

/// Chat-completions body. The user text is split at the image marker and the
/// image goes in as a base64 data URI content part at that position (or last
/// when the marker is absent).
nlohmann::json to_wire_json(const ChatRequest& req);
/// Reverse of to_wire_json, for stubs and servers that receive wire bodies.
ChatRequest chat_request_from_wire(const nlohmann::json& body);
/// choices[0].message.content; throws Error(MalformedResponse).
std::string parse_chat_response(const nlohmann::json& body);

// One model endpoint. complete() performs a single attempt: transport problems
// throw Error(EndpointUnreachable), unusable payloads Error(MalformedResponse).
class Endpoint {
 public:
  virtual ~Endpoint() = default;
  virtual std::string complete(const ChatRequest& req) = 0;
};

struct HttpEndpointConfig {
  std::string url;            // e.g. http://localhost:8000/v1/chat/completions
  std::string model;
  std::string api_key_env;    // name of the variable holding a bearer token; may be empty
  std::chrono::seconds timeout{300};
};

class HttpEndpoint : public Endpoint {
 public:
  explicit HttpEndpoint(HttpEndpointConfig cfg);
  std::string complete(const ChatRequest& req) override;

 private:
  HttpEndpointConfig cfg_;
  std::string scheme_host_port_;
  std::string path_;
};

// Deterministic in-process endpoint. Fixture rules are tried in order; the
// first rule whose template and substring match answers. Rules may be told to
// fail a number of times first. Requests that no rule matches go to the
// fallback handler (the built-in generator unless replaced).
class StubEndpoint : public Endpoint {
 public:
  using Handler = std::function<std::string(const ChatRequest&)>;

  struct Rule {
    std::optional<TemplateId> template_id;
    std::string contains;     // substring of system+user text; empty matches all
    std::string response;
    std::uint32_t fail_first = 0;
  };

  StubEndpoint();
  explicit StubEndpoint(Handler fallback);

  void add_rule(Rule rule);
  std::string complete(const ChatRequest& req) override;

  std::size_t call_count() const { return calls_.load(); }
  /// Every request seen, in arrival order.
  std::vector<ChatRequest> captured() const;

 private:
  struct RuleState {
    Rule rule;
    std::uint32_t failures_left;
  };

  Handler fallback_;
  mutable std::mutex mu_;
  std::vector<RuleState> rules_;
  std::vector<ChatRequest> captured_;
  std::atomic<std::size_t> calls_{0};
};

/// Fixture rules from JSON: [{"template": "IMG2TIKZ", "contains": "...",
/// "response": "...", "fail_first": 0}, ...].
std::vector<StubEndpoint::Rule> stub_rules_from_json(const nlohmann::json& j);

/// The built-in generator behind stub mode. Output depends only on the request
/// contents: image-to-code requests yield a small figure whose geometry is
/// derived from the image digest, question requests ask about that geometry,
/// solver requests answer from the question, and K12 requests echo the input
/// problem in the three-section response layout.
std::string default_stub_response(const ChatRequest& req);

}  // namespace figforge::modelgate
