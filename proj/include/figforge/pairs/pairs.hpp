#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "figforge/corpus/asset.hpp"
#include "figforge/filters/verdict.hpp"
#include "figforge/modelgate/types.hpp"
#include "figforge/render/types.hpp"

namespace figforge::pairs {

using modelgate::CodeSample;
using modelgate::Dialect;

struct PairRecord {
  std::string pair_id;
  CodeSample code;
  corpus::ImageAsset image;  // the render of `code`
  std::string outcome_id;
  std::uint32_t round_index = 0;
  std::optional<std::string> seed_asset_id;
  /// For translated samples: the pair whose code was translated.
  std::optional<std::string> ancestor_pair_id;
  /// Encoded PNG; may be empty when image.storage_ref points at the file.
  std::vector<std::uint8_t> png;
};

struct PairMeta {
  std::uint32_t round_index = 0;
  std::optional<std::string> seed_asset_id;
  std::optional<std::string> ancestor_pair_id;
};

/// Deterministic over (digest of the code, round).
std::string pair_id_for(const CodeSample& code, std::uint32_t round_index);

/// Throws Error(PreconditionViolation) unless the outcome is a SUCCESS render of
/// this very code and the chain verdict passed.
PairRecord assemble_pair(const CodeSample& code, const render::RenderOutcome& outcome,
                         const filters::FilterVerdict& verdict, const PairMeta& meta);

/// Full record for journals; the PNG bytes are not included.
nlohmann::json to_json(const PairRecord& pair);
PairRecord pair_from_json(const nlohmann::json& j);

struct TrainingSample {
  std::string prompt_text;  // carries the "<image>" marker
  std::string response_text;
  std::string image_ref;    // relative path under the dataset directory
  Dialect dialect = Dialect::Tikz;
};

std::string image_file_name(const corpus::ImageAsset& image);
TrainingSample format_training_sample(const PairRecord& pair);

using HoldoutKeys = std::unordered_set<ContentDigest>;

/// REJECT(DUPLICATE) iff the pair's dedup key is a holdout key.
filters::FilterVerdict holdout_guard(const PairRecord& pair, const HoldoutKeys& holdout_keys);

/// NDJSON with either {"dialect", "text"} (a held-out code sample) or {"key"}
/// (a dedup key in hex) per line.
HoldoutKeys load_holdout_keys(const std::filesystem::path& path);

enum class Split { Train, Holdout };
std::string_view to_string(Split s);
Split parse_split(std::string_view name);

enum class EmissionOrder { InterleavedByHash, GroupedByDialect, AsGiven };
std::string_view to_string(EmissionOrder o);
EmissionOrder parse_emission_order(std::string_view name);

struct DatasetManifest {
  std::string name;
  Split split = Split::Train;
  std::size_t record_count = 0;
  std::map<std::string, std::size_t> per_dialect;
  std::string config_digest;
  std::vector<std::string> files;  // relative to the dataset directory

  bool operator==(const DatasetManifest&) const = default;
};

nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);

/// One dataset record: {pair_id, dialect, prompt, response, image_file, round, seed_asset_id}.
nlohmann::json dataset_record(const PairRecord& pair);

/// Applies the emission order; deterministic for a given set of pairs.
std::vector<const PairRecord*> emission_order(const std::vector<PairRecord>& pairs, EmissionOrder order);

/// Writes <dir>/<name>.<split>.jsonl, digest-named PNGs under <dir>/images and
/// <dir>/<name>.<split>.manifest.json. Every file goes through temp + rename.
/// The record count is re-read from the temp file before it is published.
/// Throws Error(IoFailure) or Error(CountMismatch).
DatasetManifest write_dataset(const std::vector<PairRecord>& pairs, DatasetManifest manifest,
                              const std::filesystem::path& dir,
                              EmissionOrder order = EmissionOrder::InterleavedByHash);

}  // namespace figforge::pairs
