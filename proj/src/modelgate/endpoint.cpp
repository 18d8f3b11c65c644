#include "figforge/modelgate/endpoint.hpp"

#include <cstdlib>

#include "figforge/common/digest.hpp"
#include "figforge/common/error.hpp"
#include "figforge/modelgate/templates.hpp"

namespace figforge::modelgate {

using nlohmann::json;

json to_wire_json(const ChatRequest& req) {
  json messages = json::array();
  if (!req.system_text.empty()) {
    messages.push_back({{"role", "system"},
                        {"content", json::array({{{"type", "text"}, {"text", req.system_text}}})}});
  }
  json parts = json::array();
  auto add_text = [&](std::string_view t) {
    if (!t.empty()) parts.push_back({{"type", "text"}, {"text", std::string(t)}});
  };
  auto add_image = [&] {
    const std::string uri = "data:" + req.image->mime_type + ";base64," + base64_encode(req.image->bytes);
    parts.push_back({{"type", "image_url"}, {"image_url", {{"url", uri}}}});
  };
  const std::size_t at = req.user_text.find(kImageMarker);
  if (req.image && at != std::string::npos) {
    add_text(std::string_view(req.user_text).substr(0, at));
    add_image();
    add_text(std::string_view(req.user_text).substr(at + kImageMarker.size()));
  } else {
    add_text(req.user_text);
    if (req.image) add_image();
  }
  messages.push_back({{"role", "user"}, {"content", std::move(parts)}});
  return json{{"model", req.model},
              {"messages", std::move(messages)},
              {"temperature", req.temperature},
              {"max_tokens", req.max_tokens}};
}

ChatRequest chat_request_from_wire(const json& body) {
  ChatRequest req;
  try {
    req.model = body.value("model", "");
    req.temperature = body.at("temperature").get<double>();
    req.max_tokens = body.at("max_tokens").get<std::uint32_t>();
    for (const auto& m : body.at("messages")) {
      std::string text;
      const std::string role = m.at("role").get<std::string>();
      for (const auto& part : m.at("content")) {
        const std::string type = part.at("type").get<std::string>();
        if (type == "text") {
          text += part.at("text").get<std::string>();
        } else if (type == "image_url") {
          const std::string uri = part.at("image_url").at("url").get<std::string>();
          const std::size_t semi = uri.find(';');
          const std::size_t comma = uri.find(',');
          if (uri.rfind("data:", 0) != 0 || semi == std::string::npos || comma == std::string::npos) {
            throw Error(ErrorCode::MalformedResponse, "image part is not a base64 data URI");
          }
          const std::string raw = base64_decode(std::string_view(uri).substr(comma + 1));
          req.image = EncodedImage{uri.substr(5, semi - 5), std::vector<std::uint8_t>(raw.begin(), raw.end())};
          text += kImageMarker;
        }
      }
      if (role == "system") {
        req.system_text = std::move(text);
      } else {
        req.user_text = std::move(text);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("bad chat request body: ") + e.what());
  }
  return req;
}

std::string parse_chat_response(const json& body) {
  try {
    const auto& content = body.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    // Some servers return content as a list of parts.
    std::string out;
    for (const auto& part : content) out += part.at("text").get<std::string>();
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("no choices[0].message.content: ") + e.what());
  }
}

// ---- stub ----

StubEndpoint::StubEndpoint() : fallback_(default_stub_response) {}

StubEndpoint::StubEndpoint(Handler fallback) : fallback_(std::move(fallback)) {}

void StubEndpoint::add_rule(Rule rule) {
  std::lock_guard lock(mu_);
  const auto n = rule.fail_first;
  rules_.push_back(RuleState{std::move(rule), n});
}

std::string StubEndpoint::complete(const ChatRequest& req) {
  ++calls_;
  std::optional<std::string> fixed;
  {
    std::lock_guard lock(mu_);
    captured_.push_back(req);
    const std::string haystack = req.system_text + "\n" + req.user_text;
    for (auto& state : rules_) {
      const Rule& r = state.rule;
      if (r.template_id && *r.template_id != req.template_id) continue;
      if (!r.contains.empty() && haystack.find(r.contains) == std::string::npos) continue;
      if (state.failures_left > 0) {
        --state.failures_left;
        throw Error(ErrorCode::EndpointUnreachable, "stub rule configured to fail");
      }
      fixed = r.response;
      break;
    }
  }
  if (fixed) return *fixed;
  return fallback_(req);
}

std::vector<ChatRequest> StubEndpoint::captured() const {
  std::lock_guard lock(mu_);
  return captured_;
}

std::vector<StubEndpoint::Rule> stub_rules_from_json(const json& j) {
  std::vector<StubEndpoint::Rule> rules;
  for (const auto& r : j) {
    StubEndpoint::Rule rule;
    if (r.contains("template")) rule.template_id = parse_template_id(r.at("template").get<std::string>());
    rule.contains = r.value("contains", "");
    rule.response = r.at("response").get<std::string>();
    rule.fail_first = r.value("fail_first", 0u);
    rules.push_back(std::move(rule));
  }
  return rules;
}

}  // namespace figforge::modelgate
