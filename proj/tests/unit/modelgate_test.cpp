#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <doctest.h>

#include <thread>

#include "figforge/common/error.hpp"
#include "figforge/common/fileio.hpp"
#include "figforge/corpus/asset.hpp"
#include "figforge/modelgate/extract.hpp"
#include "figforge/modelgate/gateway.hpp"
#include "figforge/modelgate/templates.hpp"
#include "support.hpp"

using namespace figforge;
using namespace figforge::modelgate;
using testsupport::TempDir;

namespace {

std::string golden(const std::string& name) {
  std::string s = read_text_file(fs::path(FIGFORGE_GOLDEN_DIR) / "prompts" / name);
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

std::map<std::string, std::string> identity_slots(TemplateId id) {
  std::map<std::string, std::string> m;
  for (const auto& s : prompt_template(id).slots) m[std::string(s.name)] = std::string(s.marker);
  return m;
}

corpus::ImageAsset asset_on_disk(const TempDir& t, std::uint32_t salt) {
  const auto path = t / ("seed" + std::to_string(salt) + ".png");
  const Image img = testsupport::figure_image(90, 90, salt);
  testsupport::write_png(path, img);
  return corpus::make_asset(img, corpus::SourceTag::DatikzSeed, path.string(), {});
}

}  // namespace

TEST_CASE("templates match the transcribed goldens") {
  for (TemplateId id : all_templates()) {
    const std::string name(to_string(id));
    CAPTURE(name);
    const RenderedPrompt p = render_prompt(id, identity_slots(id));
    CHECK(p.user_text == golden(name + ".user.txt"));
    const fs::path sys = fs::path(FIGFORGE_GOLDEN_DIR) / "prompts" / (name + ".system.txt");
    if (fs::exists(sys)) {
      CHECK(p.system_text == golden(name + ".system.txt"));
    } else {
      CHECK(p.system_text.empty());
    }
  }
  CHECK(std::string(response_template(Dialect::Tikz)) == golden("IMG2TIKZ.response.txt"));
  CHECK(std::string(response_template(Dialect::PlotScript)) == golden("IMG2PLOT.response.txt"));
}

TEST_CASE("slot filling") {
  SUBCASE("TIKZ2PLOT code goes inside the latex fence") {
    const auto p = render_prompt(TemplateId::Tikz2Plot, {{"code", "X"}});
    CHECK(p.user_text.find("```latex\nX\n```") != std::string::npos);
    CHECK(p.user_text.find("[TiKZ Code]") == std::string::npos);
  }
  SUBCASE("QUESTION_SYNTH keeps the four criteria") {
    const auto p = render_prompt(TemplateId::QuestionSynth, {{"dialect_name", "TikZ"}, {"fence", "tikz"}, {"code", "C"}});
    for (const char* k : {"1. **Image Engaging**", "2. **Single Question**", "3. **Self-Sufficiency**",
                          "4. **Solvability**", "can be solved using only the visible information"}) {
      CHECK(p.user_text.find(k) != std::string::npos);
    }
    CHECK(p.user_text.find("following TikZ code") != std::string::npos);
    CHECK(p.user_text.find("```tikz\nC\n```") != std::string::npos);
  }
  SUBCASE("slotless template is unchanged") {
    CHECK(render_prompt(TemplateId::Img2Plot, {}).user_text == prompt_template(TemplateId::Img2Plot).user_text);
  }
  SUBCASE("slot values are not rescanned") {
    const auto p = render_prompt(TemplateId::Tikz2Plot, {{"code", "[your python code here] [TiKZ Code]"}});
    CHECK(p.user_text.find("```latex\n[your python code here] [TiKZ Code]\n```") != std::string::npos);
  }
  SUBCASE("missing slot") {
    try {
      render_prompt(TemplateId::Tikz2Plot, {});
      FAIL("expected MissingSlot");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingSlot);
    }
  }
}

TEST_CASE("fenced block extraction") {
  CHECK(extract_code_block("intro\n```tikz\n\\draw (0,0);\n```\n", Dialect::Tikz) == "\\draw (0,0);");
  CHECK(extract_code_block("```latex\nA\n```", Dialect::Tikz) == "A");
  CHECK_FALSE(extract_code_block("```python\nA\n```", Dialect::Tikz).has_value());
  CHECK(extract_code_block("```tikz\n\n```\n```tikz\nB\n```", Dialect::Tikz) == "B");
  CHECK_FALSE(extract_code_block("just prose", Dialect::PlotScript).has_value());
  CHECK_FALSE(extract_code_block("```python\nunterminated", Dialect::PlotScript).has_value());
}

TEST_CASE("format/parse response round trip over 500 random strings") {
  std::mt19937_64 rng(500);
  for (int i = 0; i < 500; ++i) {
    const std::string code = testsupport::random_code_text(rng);
    const Dialect d = i % 2 ? Dialect::Tikz : Dialect::PlotScript;
    REQUIRE(parse_response(d, format_response(d, code)) == code);
  }
}

TEST_CASE("image_to_code through the stub") {
  TempDir t;
  auto stub = std::make_shared<StubEndpoint>();
  stub->add_rule({TemplateId::Img2Tikz, "", "Here:\n```tikz\n\\draw (0,0) -- (1,1);\n```", 0});
  auto gw = testsupport::stub_gateway(stub);
  const auto asset = asset_on_disk(t, 1);
  const auto r = gw->image_to_code(asset, Dialect::Tikz, 0.0, "default", 2);
  REQUIRE(r.extracted_code.has_value());
  CHECK(r.extracted_code->dialect == Dialect::Tikz);
  CHECK(r.extracted_code->text == "\\draw (0,0) -- (1,1);");
  CHECK(r.extracted_code->provenance.seed_asset_id == asset.asset_id);
  CHECK(r.extracted_code->provenance.round_index == 2);
  const auto seen = stub->captured();
  REQUIRE(seen.size() == 1);
  REQUIRE(seen[0].image.has_value());
  CHECK(seen[0].image->mime_type == "image/png");
}

TEST_CASE("prose without a fence is flagged") {
  TempDir t;
  auto stub = std::make_shared<StubEndpoint>();
  stub->add_rule({std::nullopt, "", "I cannot draw this.", 0});
  auto gw = testsupport::stub_gateway(stub);
  const auto r = gw->image_to_code(asset_on_disk(t, 2), Dialect::PlotScript, 0.0, "default");
  CHECK(r.no_code_block);
  CHECK_FALSE(r.extracted_code.has_value());
  CHECK(r.raw_text == "I cannot draw this.");
}

TEST_CASE("translate_code") {
  auto stub = std::make_shared<StubEndpoint>();
  stub->add_rule({TemplateId::Tikz2Plot, "rectangle",
                  "```python\nimport matplotlib.pyplot as plt\nplt.plot([0,1,1,0,0],[0,0,1,1,0])\n```", 0});
  auto gw = testsupport::stub_gateway(stub);
  const auto src = testsupport::code(Dialect::Tikz, "\\draw (0,0) rectangle (1,1);", "img-square", 3);
  const auto r = gw->translate_code(src, "default");
  REQUIRE(r.extracted_code.has_value());
  CHECK(r.extracted_code->dialect == Dialect::PlotScript);
  CHECK(r.extracted_code->provenance.seed_asset_id == "img-square");
  CHECK(r.extracted_code->provenance.round_index == 3);
  CHECK(r.extracted_code->provenance.parent_code_id == src.code_id);
  CHECK(stub->captured().at(0).user_text.find("\\draw (0,0) rectangle (1,1);") != std::string::npos);

  try {
    gw->translate_code(testsupport::python("plt.plot([1])"), "default");
    FAIL("expected PreconditionViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PreconditionViolation);
  }
}

TEST_CASE("retry budget") {
  SUBCASE("fails twice then succeeds within budget 3") {
    auto stub = std::make_shared<StubEndpoint>();
    stub->add_rule({std::nullopt, "", "```python\nx = 1\n```", 2});
    ModelGateway gw(GatewayConfig{3, std::chrono::milliseconds(5), 4096});
    std::vector<std::chrono::milliseconds> waits;
    gw.set_sleeper([&](std::chrono::milliseconds d) { waits.push_back(d); });
    gw.add_endpoint({"e", stub, "m", 2, 0.0, 1.0});
    GenerationRequest req;
    req.template_id = TemplateId::Img2Plot;
    req.endpoint_id = "e";
    const auto r = gw.complete(req);
    CHECK(r.attempt_count == 3);
    CHECK(waits == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(5), std::chrono::milliseconds(10)});
  }
  SUBCASE("budget 1 with a failing endpoint") {
    auto stub = std::make_shared<StubEndpoint>();
    stub->add_rule({std::nullopt, "", "never", 1000});
    ModelGateway gw(GatewayConfig{1, std::chrono::milliseconds(1), 4096});
    gw.set_sleeper([](std::chrono::milliseconds) {});
    gw.add_endpoint({"e", stub, "m", 2, 0.0, 1.0});
    GenerationRequest req;
    req.template_id = TemplateId::Img2Plot;
    req.endpoint_id = "e";
    try {
      gw.complete(req);
      FAIL("expected EndpointUnreachable");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EndpointUnreachable);
    }
    CHECK(stub->call_count() == 1);
  }
  SUBCASE("unknown endpoint id") {
    ModelGateway gw;
    GenerationRequest req;
    req.endpoint_id = "ghost";
    CHECK_THROWS_AS(gw.complete(req), Error);
  }
}

TEST_CASE("max in-flight is respected") {
  auto stub = std::make_shared<StubEndpoint>([](const ChatRequest&) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    return std::string("```python\nx = 1\n```");
  });
  auto gw = testsupport::stub_gateway(stub, "busy", 3);
  std::vector<std::jthread> threads;
  for (int i = 0; i < 12; ++i) {
    threads.emplace_back([&] {
      for (int k = 0; k < 3; ++k) {
        GenerationRequest req;
        req.template_id = TemplateId::Img2Plot;
        req.endpoint_id = "busy";
        gw->complete(req);
      }
    });
  }
  threads.clear();
  CHECK(stub->call_count() == 36);
  CHECK(gw->peak_in_flight("busy") <= 3);
  CHECK(gw->peak_in_flight("busy") >= 1);
}

TEST_CASE("wire format carries temperature 0.7 verbatim") {
  httplib::Server server;
  std::string body;
  std::mutex mu;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard lock(mu);
      body = req.body;
    }
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"```tikz\n\\draw (0,0);\n```"}}]})",
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::jthread loop([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  TempDir t;
  ModelGateway gw;
  gw.set_sleeper([](std::chrono::milliseconds) {});
  auto http = std::make_shared<HttpEndpoint>(
      HttpEndpointConfig{"http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions", "wire-model", "",
                         std::chrono::seconds(10)});
  gw.add_endpoint({"http", http, "wire-model", 2, 0.0, 1.0});
  const auto r = gw.image_to_code(asset_on_disk(t, 3), Dialect::Tikz, 0.7, "http");
  server.stop();

  CHECK(r.extracted_code.has_value());
  std::lock_guard lock(mu);
  CHECK(body.find("\"temperature\":0.7") != std::string::npos);
  const auto j = nlohmann::json::parse(body);
  CHECK(j.at("temperature").get<double>() == 0.7);
  CHECK(j.at("model") == "wire-model");
  const auto back = chat_request_from_wire(j);
  CHECK(back.temperature == 0.7);
  REQUIRE(back.image.has_value());
  CHECK(back.user_text.find(std::string(kImageMarker)) != std::string::npos);
}

TEST_CASE("stub generator is deterministic and varies with temperature") {
  ChatRequest req;
  req.template_id = TemplateId::Img2Tikz;
  req.image = EncodedImage{"image/png", {1, 2, 3, 4}};
  const std::string a = default_stub_response(req);
  CHECK(a == default_stub_response(req));
  CHECK(extract_code_block(a, Dialect::Tikz).has_value());
  req.temperature = 0.7;
  CHECK(default_stub_response(req) != a);
}

TEST_CASE("stub rules from JSON") {
  const auto rules = stub_rules_from_json(nlohmann::json::parse(
      R"([{"template": "IMG2PLOT", "contains": "reproduce", "response": "ok", "fail_first": 1}])"));
  REQUIRE(rules.size() == 1);
  CHECK(rules[0].template_id == TemplateId::Img2Plot);
  CHECK(rules[0].fail_first == 1);
}
