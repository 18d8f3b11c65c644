#include "figforge/pairs/pairs.hpp"

#include <algorithm>
#include <fstream>
#include <unistd.h>

#include "figforge/common/error.hpp"
#include "figforge/common/fileio.hpp"
#include "figforge/common/image.hpp"
#include "figforge/filters/filters.hpp"
#include "figforge/modelgate/templates.hpp"

namespace figforge::pairs {

namespace fs = std::filesystem;

std::string pair_id_for(const CodeSample& code, std::uint32_t round_index) {
  const ContentDigest code_digest = sha256(std::string(modelgate::to_string(code.dialect)) + "\n" + code.text);
  return "pair-" + sha256(code_digest.hex + "|" + std::to_string(round_index)).prefix(24);
}

PairRecord assemble_pair(const CodeSample& code, const render::RenderOutcome& outcome,
                         const filters::FilterVerdict& verdict, const PairMeta& meta) {
  if (outcome.status != render::RenderStatus::Success || !outcome.image) {
    throw Error(ErrorCode::PreconditionViolation,
                "cannot pair a " + std::string(render::to_string(outcome.status)) + " render");
  }
  if (!verdict.passed()) throw Error(ErrorCode::PreconditionViolation, "cannot pair a rejected sample");
  if (outcome.code_id != code.code_id) {
    throw Error(ErrorCode::PreconditionViolation, "render " + outcome.outcome_id + " is not of " + code.code_id);
  }
  PairRecord p;
  p.pair_id = pair_id_for(code, meta.round_index);
  p.code = code;
  p.image = *outcome.image;
  p.image.source = corpus::SourceTag::Synthesized;
  p.image.kind = corpus::AssetKind::Figure;
  p.outcome_id = outcome.outcome_id;
  p.round_index = meta.round_index;
  p.seed_asset_id = meta.seed_asset_id;
  p.ancestor_pair_id = meta.ancestor_pair_id;
  p.png = outcome.png;
  return p;
}

nlohmann::json to_json(const PairRecord& pair) {
  nlohmann::json j{{"pair_id", pair.pair_id},
                   {"code", modelgate::to_json(pair.code)},
                   {"image", corpus::to_json(pair.image)},
                   {"outcome_id", pair.outcome_id},
                   {"round", pair.round_index}};
  j["seed_asset_id"] = pair.seed_asset_id ? nlohmann::json(*pair.seed_asset_id) : nlohmann::json(nullptr);
  if (pair.ancestor_pair_id) j["ancestor_pair_id"] = *pair.ancestor_pair_id;
  return j;
}

PairRecord pair_from_json(const nlohmann::json& j) {
  PairRecord p;
  p.pair_id = j.at("pair_id").get<std::string>();
  p.code = modelgate::code_sample_from_json(j.at("code"));
  p.image = corpus::asset_from_json(j.at("image"));
  p.outcome_id = j.value("outcome_id", std::string());
  p.round_index = j.at("round").get<std::uint32_t>();
  if (j.contains("seed_asset_id") && !j["seed_asset_id"].is_null()) p.seed_asset_id = j["seed_asset_id"].get<std::string>();
  if (j.contains("ancestor_pair_id")) p.ancestor_pair_id = j["ancestor_pair_id"].get<std::string>();
  return p;
}

std::string image_file_name(const corpus::ImageAsset& image) { return "images/" + image.digest.hex + ".png"; }

TrainingSample format_training_sample(const PairRecord& pair) {
  const auto tid = pair.code.dialect == Dialect::Tikz ? modelgate::TemplateId::Img2Tikz : modelgate::TemplateId::Img2Plot;
  TrainingSample s;
  s.prompt_text = modelgate::render_prompt(tid, {}).user_text;
  s.response_text = modelgate::format_response(pair.code.dialect, pair.code.text);
  s.image_ref = image_file_name(pair.image);
  s.dialect = pair.code.dialect;
  return s;
}

filters::FilterVerdict holdout_guard(const PairRecord& pair, const HoldoutKeys& holdout_keys) {
  if (holdout_keys.empty()) return filters::FilterVerdict::pass();
  const ContentDigest key = filters::dedup_key(pair.code);
  if (holdout_keys.count(key)) return filters::FilterVerdict::reject(filters::RejectReason::Duplicate, "holdout " + key.prefix(16));
  return filters::FilterVerdict::pass();
}

HoldoutKeys load_holdout_keys(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::IoFailure, "holdout file not found: " + path.string());
  HoldoutKeys keys;
  for_each_line(
      path,
      [&](std::string_view line) {
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw Error(ErrorCode::ConfigInvalid, "bad holdout line in " + path.string());
        if (j.contains("key")) {
          keys.insert(ContentDigest{"sha256", j["key"].get<std::string>()});
        } else {
          keys.insert(filters::dedup_key(modelgate::parse_dialect(j.at("dialect").get<std::string>()),
                                         j.at("text").get<std::string>()));
        }
      },
      true);
  return keys;
}

std::string_view to_string(Split s) { return s == Split::Train ? "TRAIN" : "HOLDOUT"; }

Split parse_split(std::string_view name) {
  if (name == "TRAIN") return Split::Train;
  if (name == "HOLDOUT") return Split::Holdout;
  throw Error(ErrorCode::ConfigInvalid, "unknown split '" + std::string(name) + "'");
}

std::string_view to_string(EmissionOrder o) {
  switch (o) {
    case EmissionOrder::InterleavedByHash: return "interleaved";
    case EmissionOrder::GroupedByDialect: return "grouped";
    case EmissionOrder::AsGiven: return "as_given";
  }
  return "interleaved";
}

EmissionOrder parse_emission_order(std::string_view name) {
  for (auto o : {EmissionOrder::InterleavedByHash, EmissionOrder::GroupedByDialect, EmissionOrder::AsGiven}) {
    if (to_string(o) == name) return o;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown emission order '" + std::string(name) + "'");
}

nlohmann::json to_json(const DatasetManifest& m) {
  return {{"name", m.name},
          {"split", to_string(m.split)},
          {"record_count", m.record_count},
          {"per_dialect", m.per_dialect},
          {"config_digest", m.config_digest},
          {"files", m.files}};
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  m.name = j.at("name").get<std::string>();
  m.split = parse_split(j.at("split").get<std::string>());
  m.record_count = j.at("record_count").get<std::size_t>();
  m.per_dialect = j.at("per_dialect").get<std::map<std::string, std::size_t>>();
  m.config_digest = j.at("config_digest").get<std::string>();
  m.files = j.at("files").get<std::vector<std::string>>();
  return m;
}

nlohmann::json dataset_record(const PairRecord& pair) {
  const TrainingSample s = format_training_sample(pair);
  nlohmann::json j{{"pair_id", pair.pair_id},
                   {"dialect", modelgate::to_string(pair.code.dialect)},
                   {"prompt", s.prompt_text},
                   {"response", s.response_text},
                   {"image_file", s.image_ref},
                   {"round", pair.round_index}};
  j["seed_asset_id"] = pair.seed_asset_id ? nlohmann::json(*pair.seed_asset_id) : nlohmann::json(nullptr);
  return j;
}

std::vector<const PairRecord*> emission_order(const std::vector<PairRecord>& pairs, EmissionOrder order) {
  std::vector<const PairRecord*> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(&p);
  if (order == EmissionOrder::AsGiven) return out;
  std::vector<std::pair<std::string, const PairRecord*>> keyed;
  keyed.reserve(out.size());
  for (const auto* p : out) {
    std::string k = sha256(p->pair_id).hex + p->pair_id;
    if (order == EmissionOrder::GroupedByDialect) k = std::string(modelgate::to_string(p->code.dialect)) + "/" + k;
    keyed.emplace_back(std::move(k), p);
  }
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < keyed.size(); ++i) out[i] = keyed[i].second;
  return out;
}

namespace {

std::vector<std::uint8_t> png_bytes(const PairRecord& p) {
  if (!p.png.empty()) return p.png;
  if (p.image.storage_ref.empty()) throw Error(ErrorCode::IoFailure, "pair " + p.pair_id + " has no image bytes");
  try {
    return read_file_bytes(p.image.storage_ref);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::IoFailure, "reading image for " + p.pair_id + ": " + e.what());
  }
}

}  // namespace

DatasetManifest write_dataset(const std::vector<PairRecord>& pairs, DatasetManifest manifest, const fs::path& dir,
                              EmissionOrder order) {
  std::error_code ec;
  fs::create_directories(dir / "images", ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());

  std::string split = std::string(to_string(manifest.split));
  std::transform(split.begin(), split.end(), split.begin(), [](unsigned char c) { return std::tolower(c); });
  const std::string data_name = manifest.name + "." + split + ".jsonl";
  const fs::path data_path = dir / data_name;
  const fs::path tmp_path = dir / (data_name + ".tmp." + std::to_string(::getpid()));

  manifest.record_count = 0;
  manifest.per_dialect.clear();
  manifest.files.clear();
  std::vector<std::string> image_files;
  try {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + tmp_path.string());
    for (const PairRecord* p : emission_order(pairs, order)) {
      const std::string image_file = image_file_name(p->image);
      const fs::path image_path = dir / image_file;
      if (!fs::exists(image_path)) atomic_write_file(image_path, png_bytes(*p));
      image_files.push_back(image_file);
      out << dataset_record(*p).dump() << '\n';
      ++manifest.record_count;
      ++manifest.per_dialect[std::string(modelgate::to_string(p->code.dialect))];
    }
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + tmp_path.string());
  } catch (...) {
    fs::remove(tmp_path, ec);
    throw;
  }

  const std::size_t written = count_lines(tmp_path);
  if (written != manifest.record_count) {
    fs::remove(tmp_path, ec);
    throw Error(ErrorCode::CountMismatch, data_name + ": " + std::to_string(written) + " lines written, " +
                                              std::to_string(manifest.record_count) + " records emitted");
  }
  fs::rename(tmp_path, data_path, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot publish " + data_path.string() + ": " + ec.message());

  std::sort(image_files.begin(), image_files.end());
  image_files.erase(std::unique(image_files.begin(), image_files.end()), image_files.end());
  manifest.files.push_back(data_name);
  manifest.files.insert(manifest.files.end(), image_files.begin(), image_files.end());
  atomic_write_file(dir / (manifest.name + "." + split + ".manifest.json"), to_json(manifest).dump(2) + "\n");
  return manifest;
}

}  // namespace figforge::pairs
