#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "figforge/common/parallel.hpp"
#include "figforge/modelgate/endpoint.hpp"
#include "figforge/modelgate/types.hpp"

namespace figforge::modelgate {

struct EndpointSettings {
  std::string id;
  std::shared_ptr<Endpoint> endpoint;
  std::string model;
  std::size_t max_in_flight = 4;
  double rate_per_sec = 0.0;  // token-bucket refill rate; 0 disables rate limiting
  double burst = 1.0;
};

struct GatewayConfig {
  std::uint32_t retry_budget = 3;
  std::chrono::milliseconds backoff_base{1000};
  std::uint32_t max_tokens = 4096;
};

// Thread-safe front door to all model endpoints. Each endpoint gets its own
// in-flight gate and token bucket.
class ModelGateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit ModelGateway(GatewayConfig cfg = {});

  void add_endpoint(EndpointSettings settings);
  bool has_endpoint(const std::string& id) const;
  const GatewayConfig& config() const { return cfg_; }

  /// Replaces the sleep used for backoff and rate limiting (tests pass a no-op).
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

  /// Up to retry_budget attempts; attempt k waits backoff_base * 2^(k-1) after
  /// failing. Throws Error(EndpointUnreachable) once the budget is spent and
  /// passes Error(MalformedResponse) through without retrying.
  GenerationResult complete(const GenerationRequest& req);

  /// IMG2TIKZ or IMG2PLOT with the image attached. The asset is read from its
  /// storage_ref.
  GenerationResult image_to_code(const corpus::ImageAsset& asset, Dialect dialect, double temperature,
                                 const std::string& endpoint_id, std::uint32_t round_index = 0);

  /// TIKZ2PLOT. The extracted sample inherits src's seed and round and records
  /// src as its parent. Throws Error(PreconditionViolation) unless src is TIKZ.
  GenerationResult translate_code(const CodeSample& src, const std::string& endpoint_id,
                                  double temperature = 0.0);

  /// Peak concurrent calls observed on an endpoint.
  std::size_t peak_in_flight(const std::string& id) const;

 private:
  struct Slot {
    EndpointSettings settings;
    std::unique_ptr<ConcurrencyGate> gate;
    std::mutex bucket_mu;
    double tokens = 0.0;
    std::chrono::steady_clock::time_point last_refill;
  };

  Slot& slot(const std::string& id) const;
  void take_token(Slot& s);

  GatewayConfig cfg_;
  Sleeper sleeper_;
  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<Slot>> slots_;
};

}  // namespace figforge::modelgate
