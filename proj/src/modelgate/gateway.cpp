#include "figforge/modelgate/gateway.hpp"

#include <cmath>
#include <thread>

#include "figforge/common/error.hpp"
#include "figforge/common/image.hpp"
#include "figforge/modelgate/extract.hpp"
#include "figforge/modelgate/templates.hpp"

namespace figforge::modelgate {

ModelGateway::ModelGateway(GatewayConfig cfg)
    : cfg_(cfg), sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {}

void ModelGateway::add_endpoint(EndpointSettings settings) {
  auto s = std::make_unique<Slot>();
  s->gate = std::make_unique<ConcurrencyGate>(settings.max_in_flight);
  s->tokens = std::max(1.0, settings.burst);
  s->last_refill = std::chrono::steady_clock::now();
  const std::string id = settings.id;
  s->settings = std::move(settings);
  std::lock_guard lock(mu_);
  slots_[id] = std::move(s);
}

bool ModelGateway::has_endpoint(const std::string& id) const {
  std::lock_guard lock(mu_);
  return slots_.count(id) != 0;
}

ModelGateway::Slot& ModelGateway::slot(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = slots_.find(id);
  if (it == slots_.end()) throw Error(ErrorCode::EndpointUnreachable, "no endpoint configured with id '" + id + "'");
  return *it->second;
}

std::size_t ModelGateway::peak_in_flight(const std::string& id) const { return slot(id).gate->peak(); }

void ModelGateway::take_token(Slot& s) {
  if (s.settings.rate_per_sec <= 0.0) return;
  const double capacity = std::max(1.0, s.settings.burst);
  while (true) {
    std::chrono::milliseconds wait{0};
    {
      std::lock_guard lock(s.bucket_mu);
      const auto now = std::chrono::steady_clock::now();
      const double elapsed = std::chrono::duration<double>(now - s.last_refill).count();
      s.tokens = std::min(capacity, s.tokens + elapsed * s.settings.rate_per_sec);
      s.last_refill = now;
      if (s.tokens >= 1.0) {
        s.tokens -= 1.0;
        return;
      }
      wait = std::chrono::milliseconds(
          static_cast<long long>(std::ceil((1.0 - s.tokens) / s.settings.rate_per_sec * 1000.0)));
    }
    sleeper_(std::max(wait, std::chrono::milliseconds(1)));
  }
}

GenerationResult ModelGateway::complete(const GenerationRequest& req) {
  if (!std::isfinite(req.temperature) || req.temperature < 0.0) {
    throw Error(ErrorCode::PreconditionViolation, "temperature must be finite and non-negative");
  }
  Slot& s = slot(req.endpoint_id);
  const RenderedPrompt prompt = render_prompt(req.template_id, req.slots);

  ChatRequest chat;
  chat.template_id = req.template_id;
  chat.model = s.settings.model;
  chat.system_text = prompt.system_text;
  chat.user_text = prompt.user_text;
  chat.temperature = req.temperature;
  chat.max_tokens = req.max_tokens;
  if (req.image) {
    std::vector<std::uint8_t> bytes;
    try {
      bytes = read_file_bytes(req.image->storage_ref);
    } catch (const Error& e) {
      throw Error(ErrorCode::PreconditionViolation, std::string("asset not retrievable: ") + e.what());
    }
    const std::string mime = sniff_format(bytes) == ImageFormat::Jpeg ? "image/jpeg" : "image/png";
    chat.image = EncodedImage{mime, std::move(bytes)};
  }

  const std::uint32_t budget = std::max<std::uint32_t>(1, cfg_.retry_budget);
  const auto started = std::chrono::steady_clock::now();
  std::string last_error;
  for (std::uint32_t attempt = 1; attempt <= budget; ++attempt) {
    try {
      take_token(s);
      std::string raw;
      {
        ConcurrencyGate::Hold hold(*s.gate);
        raw = s.settings.endpoint->complete(chat);
      }
      GenerationResult result;
      result.raw_text = std::move(raw);
      result.endpoint_id = req.endpoint_id;
      result.attempt_count = attempt;
      result.latency_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
      if (req.expect) {
        if (auto code = extract_code_block(result.raw_text, req.expect->dialect)) {
          result.extracted_code = make_code_sample(req.expect->dialect, std::move(*code), req.expect->provenance);
        } else {
          result.no_code_block = true;
        }
      }
      return result;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EndpointUnreachable) throw;
      last_error = e.what();
    }
    if (attempt < budget) sleeper_(cfg_.backoff_base * (1LL << (attempt - 1)));
  }
  throw Error(ErrorCode::EndpointUnreachable,
              req.endpoint_id + " failed " + std::to_string(budget) + " attempt(s); last: " + last_error);
}

GenerationResult ModelGateway::image_to_code(const corpus::ImageAsset& asset, Dialect dialect,
                                             double temperature, const std::string& endpoint_id,
                                             std::uint32_t round_index) {
  GenerationRequest req;
  req.template_id = dialect == Dialect::Tikz ? TemplateId::Img2Tikz : TemplateId::Img2Plot;
  req.image = asset;
  req.temperature = temperature;
  req.max_tokens = cfg_.max_tokens;
  req.endpoint_id = endpoint_id;
  req.expect = ExtractionSpec{dialect, Provenance{asset.asset_id, round_index, endpoint_id, temperature, ""}};
  return complete(req);
}

GenerationResult ModelGateway::translate_code(const CodeSample& src, const std::string& endpoint_id,
                                              double temperature) {
  if (src.dialect != Dialect::Tikz) {
    throw Error(ErrorCode::PreconditionViolation, "translate_code needs a TIKZ sample, got " +
                                                      std::string(to_string(src.dialect)));
  }
  GenerationRequest req;
  req.template_id = TemplateId::Tikz2Plot;
  req.slots = {{"code", src.text}};
  req.temperature = temperature;
  req.max_tokens = cfg_.max_tokens;
  req.endpoint_id = endpoint_id;
  req.expect = ExtractionSpec{Dialect::PlotScript,
                              Provenance{src.provenance.seed_asset_id, src.provenance.round_index,
                                         endpoint_id, temperature, src.code_id}};
  return complete(req);
}

}  // namespace figforge::modelgate
