#include <doctest.h>

#include <set>

#include "figforge/common/error.hpp"
#include "figforge/filters/filters.hpp"
#include "figforge/modelgate/templates.hpp"
#include "figforge/pairs/pairs.hpp"
#include "support.hpp"

using namespace figforge;
using namespace figforge::pairs;
using testsupport::TempDir;

namespace {

PairRecord make_pair(const std::string& text, Dialect d = Dialect::Tikz, std::uint32_t round = 0,
                     std::uint32_t salt = 1) {
  const auto c = testsupport::code(d, text, "img-" + std::to_string(salt), round);
  const auto o = testsupport::success_outcome(c, testsupport::figure_image(40, 40, salt));
  return assemble_pair(c, o, filters::FilterVerdict::pass(), {round, c.provenance.seed_asset_id, std::nullopt});
}

std::vector<std::string> dir_listing(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) out.push_back(fs::relative(e.path(), dir).string());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("assemble_pair") {
  const auto c = testsupport::tikz("\\draw (0,0) circle (1);");
  const auto img = testsupport::figure_image(32, 32, 2);
  const auto ok = testsupport::success_outcome(c, img);
  const auto p = assemble_pair(c, ok, filters::FilterVerdict::pass(), {4, std::string("img-seed"), std::nullopt});
  CHECK(p.pair_id == pair_id_for(c, 4));
  CHECK(p.code == c);
  CHECK(p.image.source == corpus::SourceTag::Synthesized);
  CHECK(p.image.kind == corpus::AssetKind::Figure);
  CHECK(p.outcome_id == ok.outcome_id);
  CHECK(p.seed_asset_id == "img-seed");

  render::RenderOutcome bad = ok;
  bad.status = render::RenderStatus::CompileFail;
  CHECK_THROWS_AS(assemble_pair(c, bad, filters::FilterVerdict::pass(), {}), Error);
  CHECK_THROWS_AS(assemble_pair(c, ok, filters::FilterVerdict::reject(filters::RejectReason::Blank), {}), Error);
  const auto other = testsupport::tikz("\\draw (0,0) circle (2);");
  CHECK_THROWS_AS(assemble_pair(other, ok, filters::FilterVerdict::pass(), {}), Error);
}

TEST_CASE("pair ids") {
  const auto c = testsupport::tikz("\\draw (0,0) -- (1,0);");
  CHECK(pair_id_for(c, 0) != pair_id_for(c, 1));
  CHECK(pair_id_for(c, 0) == pair_id_for(c, 0));
  CHECK(pair_id_for(c, 0).rfind("pair-", 0) == 0);
}

TEST_CASE("training samples use the published prompts") {
  const auto t = format_training_sample(make_pair("\\draw (0,0) -- (1,1);"));
  CHECK(t.prompt_text.find("vector graphics within LaTeX documents") != std::string::npos);
  CHECK(t.prompt_text.find("<image>") != std::string::npos);
  CHECK(modelgate::parse_response(Dialect::Tikz, t.response_text) == "\\draw (0,0) -- (1,1);");
  const auto py = format_training_sample(make_pair("plt.plot([1, 2])", Dialect::PlotScript));
  CHECK(py.prompt_text.find("Please provide the Python code needed to reproduce this image.") != std::string::npos);
  CHECK(py.response_text.find("```python\nplt.plot([1, 2])\n```") != std::string::npos);
  CHECK(t.image_ref.rfind("images/", 0) == 0);
}

TEST_CASE("property: training response round trip over random code") {
  std::mt19937_64 rng(404);
  for (int i = 0; i < 500; ++i) {
    const Dialect d = i % 2 ? Dialect::Tikz : Dialect::PlotScript;
    std::string text = testsupport::random_code_text(rng);
    if (text.find_first_not_of(" \t\n") == std::string::npos) text = "x";
    const auto c = testsupport::code(d, text);
    PairRecord p;
    p.code = c;
    p.image = corpus::make_asset(testsupport::gray_image(2, 2, 0), corpus::SourceTag::Synthesized, "", {});
    const auto s = format_training_sample(p);
    REQUIRE(modelgate::parse_response(d, s.response_text) == text);
  }
}

TEST_CASE("holdout guard") {
  const auto p = make_pair("\\draw (0,0) -- (2,2);");
  const auto key = filters::dedup_key(p.code);
  CHECK(holdout_guard(p, {key}).reason == filters::RejectReason::Duplicate);
  CHECK(holdout_guard(p, {}).passed());
  ContentDigest near = key;
  near.hex.back() = near.hex.back() == '0' ? '1' : '0';
  CHECK(holdout_guard(p, {near}).passed());
}

TEST_CASE("holdout keys file") {
  TempDir t;
  const auto key = filters::dedup_key(Dialect::Tikz, "\\draw (0,0);");
  atomic_write_file(t / "holdout.ndjson",
                    "{\"dialect\": \"TIKZ\", \"text\": \"\\\\draw (0,0);  % comment\"}\n{\"key\": \"" +
                        sha256(std::string_view("x")).hex + "\"}\n");
  const auto keys = load_holdout_keys(t / "holdout.ndjson");
  CHECK(keys.size() == 2);
  CHECK(keys.count(key) == 1);
}

TEST_CASE("record and manifest JSON round trip") {
  auto p = make_pair("\\draw (1,1) -- (2,2);", Dialect::Tikz, 3);
  p.ancestor_pair_id = "pair-parent";
  const auto back = pair_from_json(to_json(p));
  CHECK(back.pair_id == p.pair_id);
  CHECK(back.code == p.code);
  CHECK(back.image == p.image);
  CHECK(back.round_index == 3);
  CHECK(back.ancestor_pair_id == "pair-parent");
  CHECK(back.png.empty());

  DatasetManifest m{"ds", Split::Holdout, 2, {{"TIKZ", 2}}, "abc", {"ds.holdout.jsonl"}};
  CHECK(manifest_from_json(to_json(m)) == m);
  CHECK(parse_split("TRAIN") == Split::Train);
  CHECK(parse_emission_order("grouped") == EmissionOrder::GroupedByDialect);
}

TEST_CASE("write_dataset") {
  TempDir t;
  std::vector<PairRecord> ps{make_pair("\\draw (0,0) -- (1,0);", Dialect::Tikz, 0, 1),
                             make_pair("plt.plot([0, 1])", Dialect::PlotScript, 0, 2),
                             make_pair("\\draw (0,0) -- (0,1);", Dialect::Tikz, 0, 3)};
  DatasetManifest m;
  m.name = "demo";
  m.config_digest = "cfg";
  const auto out = write_dataset(ps, m, t / "a");
  CHECK(out.record_count == 3);
  CHECK(count_lines(t / "a" / "demo.train.jsonl") == 3);
  CHECK(out.per_dialect.at("TIKZ") == 2);
  CHECK(out.per_dialect.at("PLOTSCRIPT") == 1);
  CHECK(out.files.front() == "demo.train.jsonl");
  CHECK(out.files.size() == 4);
  for (const auto& f : out.files) CHECK(fs::exists(t / "a" / f));
  CHECK(manifest_from_json(nlohmann::json::parse(read_text_file(t / "a" / "demo.train.manifest.json"))) == out);

  // Same inputs in another order: identical bytes.
  std::vector<PairRecord> shuffled{ps[2], ps[0], ps[1]};
  write_dataset(shuffled, m, t / "b");
  CHECK(dir_listing(t / "a") == dir_listing(t / "b"));
  for (const auto& f : dir_listing(t / "a")) {
    if (fs::is_regular_file(t / "a" / f)) CHECK(read_file_bytes(t / "a" / f) == read_file_bytes(t / "b" / f));
  }

  const auto first_line = nlohmann::json::parse(read_text_file(t / "a" / "demo.train.jsonl").substr(
      0, read_text_file(t / "a" / "demo.train.jsonl").find('\n')));
  for (const char* k : {"pair_id", "dialect", "prompt", "response", "image_file", "round"}) CHECK(first_line.contains(k));
}

TEST_CASE("interrupted write leaves no partial file") {
  TempDir t;
  std::vector<PairRecord> ps{make_pair("\\draw (0,0) -- (1,0);", Dialect::Tikz, 0, 1),
                             make_pair("\\draw (0,0) -- (5,0);", Dialect::Tikz, 0, 5)};
  ps[1].png.clear();
  ps[1].image.storage_ref = (t / "missing.png").string();
  DatasetManifest m;
  m.name = "demo";
  CHECK_THROWS(write_dataset(ps, m, t / "out"));
  CHECK_FALSE(fs::exists(t / "out" / "demo.train.jsonl"));
  CHECK_FALSE(fs::exists(t / "out" / "demo.train.manifest.json"));
  for (const auto& f : dir_listing(t / "out")) CHECK(f.find(".tmp.") == std::string::npos);

  // A previous complete version survives a failed rewrite.
  write_dataset({ps[0]}, m, t / "keep");
  const auto before = read_text_file(t / "keep" / "demo.train.jsonl");
  CHECK_THROWS(write_dataset(ps, m, t / "keep"));
  CHECK(read_text_file(t / "keep" / "demo.train.jsonl") == before);
}

TEST_CASE("emission orders") {
  std::vector<PairRecord> ps;
  for (int i = 0; i < 10; ++i) {
    ps.push_back(make_pair("code " + std::to_string(i), i % 3 ? Dialect::Tikz : Dialect::PlotScript, 0, i + 1));
  }
  const auto given = emission_order(ps, EmissionOrder::AsGiven);
  for (std::size_t i = 0; i < ps.size(); ++i) CHECK(given[i] == &ps[i]);
  const auto grouped = emission_order(ps, EmissionOrder::GroupedByDialect);
  std::size_t switches = 0;
  for (std::size_t i = 1; i < grouped.size(); ++i) {
    if (grouped[i]->code.dialect != grouped[i - 1]->code.dialect) ++switches;
  }
  CHECK(switches == 1);
  auto reversed = ps;
  std::reverse(reversed.begin(), reversed.end());
  std::vector<std::string> a, b;
  for (const auto* p : emission_order(ps, EmissionOrder::InterleavedByHash)) a.push_back(p->pair_id);
  for (const auto* p : emission_order(reversed, EmissionOrder::InterleavedByHash)) b.push_back(p->pair_id);
  CHECK(a == b);
}
