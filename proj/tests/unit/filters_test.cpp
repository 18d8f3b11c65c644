#include <doctest.h>

#include <cmath>
#include <set>

#include "figforge/common/error.hpp"
#include "figforge/filters/chain.hpp"
#include "figforge/filters/dedup.hpp"
#include "figforge/filters/filters.hpp"
#include "support.hpp"

using namespace figforge;
using namespace figforge::filters;
using testsupport::TempDir;

namespace {

// Straightforward two-pass reference in long double.
PixelStats oracle_stats(const Image& img) {
  std::vector<long double> g;
  for (std::uint32_t y = 0; y < img.height; ++y) {
    for (std::uint32_t x = 0; x < img.width; ++x) {
      const std::uint8_t* p = img.at(x, y);
      const double a = p[3];
      double c[3];
      for (int k = 0; k < 3; ++k) c[k] = std::lround((p[k] * a + 255.0 * (255.0 - a)) / 255.0);
      g.push_back(static_cast<long double>(std::lround((299.0 * c[0] + 587.0 * c[1] + 114.0 * c[2]) / 1000.0)));
    }
  }
  long double mean = 0;
  for (auto v : g) mean += v;
  mean /= static_cast<long double>(g.size());
  long double var = 0;
  for (auto v : g) var += (v - mean) * (v - mean);
  var /= static_cast<long double>(g.size());
  PixelStats s;
  s.mean = static_cast<double>(mean);
  s.std = static_cast<double>(std::sqrt(var));
  return s;
}

bool close_rel(double a, double b, double tol) { return std::fabs(a - b) <= tol * std::max(1.0, std::fabs(b)); }

PixelStats stats_of(double mean, double std) {
  PixelStats s;
  s.mean = mean;
  s.std = std;
  return s;
}

FilterConfig no_keywords() {
  FilterConfig c;
  c.banned_keywords.clear();
  return c;
}

}  // namespace

TEST_CASE("pixel_stats matches the reference on 100 random images") {
  std::mt19937_64 rng(100);
  for (int i = 0; i < 100; ++i) {
    const auto w = static_cast<std::uint32_t>(1 + rng() % 64), h = static_cast<std::uint32_t>(1 + rng() % 64);
    const Image img = testsupport::random_image(rng, w, h, i % 2 == 0);
    const auto got = pixel_stats(img);
    const auto want = oracle_stats(img);
    CHECK(close_rel(got.mean, want.mean, 1e-9));
    CHECK(close_rel(got.std, want.std, 1e-9));
  }
}

TEST_CASE("pixel_stats closed forms") {
  const auto uniform = pixel_stats(testsupport::gray_image(10, 10, 200));
  CHECK(uniform.mean == 200.0);
  CHECK(uniform.std == 0.0);
  Image half(10, 10, 0, 0, 0);
  for (std::uint32_t y = 0; y < 5; ++y)
    for (std::uint32_t x = 0; x < 10; ++x) half.set(x, y, 255, 255, 255);
  const auto two = pixel_stats(half);
  CHECK(two.mean == 127.5);
  CHECK(two.std == 127.5);
  const auto one = pixel_stats(testsupport::gray_image(1, 1, 7));
  CHECK(one.mean == 7.0);
  CHECK(one.std == 0.0);
  // Transparent pixels count as white.
  CHECK(pixel_stats(Image(4, 4, 0, 0, 0, 0)).mean == 255.0);
  CHECK(pixel_stats(encode_png(testsupport::gray_image(3, 3, 9))).mean == 9.0);
}

TEST_CASE("blank rule boundary") {
  const FilterConfig cfg;
  CHECK(blank_filter(stats_of(100, 0.0), cfg).reason == RejectReason::Blank);
  CHECK(blank_filter(stats_of(100, 4.9), cfg).reason == RejectReason::Blank);
  CHECK(blank_filter(stats_of(100, 4.999), cfg).reason == RejectReason::Blank);
  CHECK(blank_filter(stats_of(100, 5.0), cfg).passed());
}

TEST_CASE("white and black rules") {
  const FilterConfig cfg;
  CHECK(white_black_filter(stats_of(254, 2), cfg).reason == RejectReason::NearWhite);
  CHECK(white_black_filter(stats_of(1, 3), cfg).reason == RejectReason::BlackSquare);
  CHECK(white_black_filter(stats_of(127.5, 127.5), cfg).passed());
  CHECK(white_black_filter(stats_of(250, 10), cfg).reason == RejectReason::NearWhite);
  CHECK(white_black_filter(stats_of(250, 10.5), cfg).passed());
  CHECK(white_black_filter(stats_of(5, 30), cfg).reason == RejectReason::BlackSquare);
}

TEST_CASE("50 synthetic near-white images are rejected, sparse figures are not") {
  std::mt19937_64 rng(50);
  const FilterConfig cfg;
  for (int i = 0; i < 50; ++i) {
    Image img(48, 48);
    // A handful of faint specks on white.
    for (int k = 0; k < 3; ++k) {
      const std::uint8_t v = static_cast<std::uint8_t>(200 + rng() % 50);
      img.set(static_cast<std::uint32_t>(rng() % 48), static_cast<std::uint32_t>(rng() % 48), v, v, v);
    }
    const auto s = pixel_stats(img);
    CHECK(white_black_filter(s, cfg).reason == RejectReason::NearWhite);
  }
  const auto fig = pixel_stats(testsupport::figure_image(64, 64, 3));
  CHECK(white_black_filter(fig, cfg).passed());
  CHECK(blank_filter(fig, cfg).passed());
  const auto black = pixel_stats(testsupport::gray_image(20, 20, 0));
  CHECK(white_black_filter(black, cfg).reason == RejectReason::BlackSquare);
}

TEST_CASE("normalize_code") {
  using testsupport::tikz;
  CHECK(normalize_code(tikz("\\draw (0,0) -- (1,1); % diagonal\n\\fill (0,0) circle (1pt);")) ==
        normalize_code(tikz("\\draw (0,0) -- (1,1);\n% a comment line\n\\fill (0,0) circle (1pt);")));
  CHECK(normalize_code(tikz("\\draw\t(0,0)  --\t(1,1);")) == normalize_code(tikz("\\draw (0,0) -- (1,1);")));
  CHECK(normalize_code(tikz("\\draw (0,0) -- (1.0,1);")) != normalize_code(tikz("\\draw (0,0) -- (2.0,1);")));
  CHECK(normalize_code(tikz("\\node {50\\%};")) == "\\node {50\\%};");
  using testsupport::python;
  CHECK(normalize_code(python("x = 1  # set x\n# full line\ny = '#not a comment'")) == "x = 1 y = '#not a comment'");
  CHECK(normalize_code(python("s = \"\"\"a\n# inside\n\"\"\"")) == "s = \"\"\"a # inside \"\"\"");
  CHECK(normalize_code(python("A = 1")) != normalize_code(python("a = 1")));
}

TEST_CASE("dedup keys") {
  using testsupport::code;
  const std::string text = "plot(1)";
  CHECK(dedup_key(code(Dialect::Tikz, text)) != dedup_key(code(Dialect::PlotScript, text)));
  CHECK(dedup_key(code(Dialect::PlotScript, "plot(1)  # c")) == dedup_key(code(Dialect::PlotScript, "plot(1)")));
  CHECK(dedup_key(code(Dialect::Tikz, text, "seed-a")) == dedup_key(code(Dialect::Tikz, text, "seed-b")));
  DedupStore store;
  const auto k = dedup_key(code(Dialect::Tikz, text));
  CHECK(store.admit(k));
  CHECK_FALSE(store.admit(k));
  CHECK(store.contains(k));
  CHECK(store.size() == 1);
}

TEST_CASE("dedup store persistence") {
  TempDir t;
  DedupStore a;
  for (int i = 0; i < 20; ++i) a.admit(sha256(std::to_string(i)));
  a.save(t / "keys");
  DedupStore b;
  b.load(t / "keys");
  CHECK(b.size() == 20);
  CHECK(b.contains(sha256(std::string("7"))));
  DedupStore c;
  c.load(t / "absent");
  CHECK(c.size() == 0);
}

TEST_CASE("near-duplicate option") {
  CHECK(shingle_jaccard("a b c d", "a b c d") == 1.0);
  CHECK(shingle_jaccard("a b c d", "w x y z") == 0.0);
  DedupStore strict(0.8);
  const std::string base = "\\draw (0,0) -- (1,1) -- (2,0) -- (3,1) -- (4,0) -- (5,1) -- (6,0) ;";
  CHECK(strict.admit(sha256(base), base));
  const std::string near = base + " x";
  CHECK_FALSE(strict.admit(sha256(near), near));
  const std::string other = "import matplotlib.pyplot as plt plt.bar ( [1,2] , [3,4] )";
  CHECK(strict.admit(sha256(other), other));
}

TEST_CASE("keyword filter") {
  FilterConfig cfg;
  const auto hit = keyword_filter(testsupport::python("x = np.random.rand(5)"), cfg);
  CHECK(hit.reason == RejectReason::Keyword);
  CHECK(hit.detail.find("rand(") != std::string::npos);
  CHECK(keyword_filter(testsupport::tikz("\\draw[blue] (0,0) -- (1,1);"), cfg).passed());
  CHECK(keyword_filter(testsupport::tikz("\\pgfmathsetmacro{\\r}{rnd}"), cfg).reason == RejectReason::Keyword);
  // A banned word that only appears in a comment does not count.
  CHECK(keyword_filter(testsupport::python("x = 1  # not random"), cfg).passed());
  CHECK(keyword_filter(testsupport::python("operand = 1"), cfg).passed());
  CHECK(keyword_filter(testsupport::python("x = rand(3)"), no_keywords()).passed());
}

TEST_CASE("banlist resource file matches the built-in list") {
  const auto from_file = load_banlist(fs::path(FIGFORGE_RESOURCE_DIR) / "banlist.txt");
  CHECK(from_file == FilterConfig::default_banlist());
  CHECK(parse_banlist("# c\n\nfoo\nbar \n") == std::vector<std::string>{"foo", "bar "});
}

TEST_CASE("length filter") {
  FilterConfig cfg;
  cfg.max_code_chars = 8;
  CHECK(length_filter(testsupport::tikz("0123456789"), cfg).reason == RejectReason::TooLong);
  CHECK(length_filter(testsupport::tikz("01234567"), cfg).passed());
  CHECK(length_filter(testsupport::tikz("ééééééé"), cfg).passed());
  CodeSample empty = testsupport::tikz("x");
  empty.text.clear();
  CHECK(length_filter(empty, cfg).passed());
}

TEST_CASE("filter config validation and JSON") {
  FilterConfig cfg;
  cfg.blank_std_threshold = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  const auto j = nlohmann::json::parse(R"({"max_code_chars": 100, "banned_keywords": ["zzz"]})");
  const auto parsed = filter_config_from_json(j);
  CHECK(parsed.max_code_chars == 100);
  CHECK(parsed.banned_keywords == std::vector<std::string>{"zzz"});
  const auto back = filter_config_from_json(to_json(parsed));
  CHECK(back.max_code_chars == parsed.max_code_chars);
  CHECK(back.banned_keywords == parsed.banned_keywords);
}

TEST_CASE("chain ordering") {
  const FilterConfig cfg;
  DedupStore dedup;
  const auto blank = testsupport::gray_image(30, 30, 128);
  const auto fig = testsupport::figure_image(64, 64, 1);
  const auto first = testsupport::tikz("\\draw (0,0) -- (3,4);");

  const auto pass = run_chain(first, testsupport::success_outcome(first, fig), cfg, dedup);
  CHECK(pass.verdict.passed());
  REQUIRE(pass.audit.size() == 5);
  const std::vector<std::string> names{"dedup", "keyword", "length", "blank", "white_black"};
  for (std::size_t i = 0; i < 5; ++i) CHECK(pass.audit[i].stage == names[i]);

  const auto dup = run_chain(first, testsupport::success_outcome(first, blank), cfg, dedup);
  CHECK(dup.verdict.reason == RejectReason::Duplicate);
  CHECK(dup.audit.size() == 1);

  const auto fresh = testsupport::tikz("\\draw (0,0) -- (5,12);");
  const auto bl = run_chain(fresh, testsupport::success_outcome(fresh, blank), cfg, dedup);
  CHECK(bl.verdict.reason == RejectReason::Blank);
  CHECK(bl.audit.size() == 4);

  const auto lines = audit_lines(fresh.code_id, bl);
  REQUIRE(lines.size() == 4);
  CHECK(lines.back()["stage"] == "blank");
  CHECK(lines.back()["reason"] == "BLANK");
  CHECK(lines.front()["decision"] == "PASS");

  render::RenderOutcome failed;
  failed.status = render::RenderStatus::CompileFail;
  try {
    run_chain(fresh, failed, cfg, dedup);
    FAIL("expected PreconditionViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PreconditionViolation);
  }
}

TEST_CASE("property: passed samples have distinct keys and variants collapse") {
  std::mt19937_64 rng(777);
  const FilterConfig cfg = no_keywords();
  const auto stats = pixel_stats(testsupport::figure_image(40, 40, 9));
  for (int trial = 0; trial < 500; ++trial) {
    DedupStore dedup;
    std::set<std::string> passed_keys;
    std::vector<CodeSample> corpus;
    const int n = 2 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      const Dialect d = rng() % 2 ? Dialect::Tikz : Dialect::PlotScript;
      std::string body;
      const int toks = 1 + static_cast<int>(rng() % 6);
      for (int k = 0; k < toks; ++k) body += "t" + std::to_string(rng() % 5) + " ";
      corpus.push_back(testsupport::code(d, body));
      // A variant: extra whitespace and a comment.
      std::string variant = "  " + body;
      for (auto& c : variant) {
        if (c == ' ' && rng() % 2) c = '\t';
      }
      variant += d == Dialect::Tikz ? "% note\n" : "# note\n";
      corpus.push_back(testsupport::code(d, variant));
      REQUIRE(dedup_key(corpus[corpus.size() - 1]) == dedup_key(corpus[corpus.size() - 2]));
    }
    for (const auto& c : corpus) {
      const auto r = run_chain(c, stats, cfg, dedup);
      if (r.verdict.passed()) {
        REQUIRE(passed_keys.insert(dedup_key(c).hex).second);
      } else {
        REQUIRE(r.verdict.reason == RejectReason::Duplicate);
      }
    }
    // Every distinct key passed exactly once.
    std::set<std::string> all;
    for (const auto& c : corpus) all.insert(dedup_key(c).hex);
    REQUIRE(all == passed_keys);
  }
}

TEST_CASE("property: tightening a threshold never turns a reject into a pass") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const auto stats = stats_of(static_cast<double>(rng() % 256), static_cast<double>(rng() % 40));
    const auto c = testsupport::tikz("\\draw (0,0) -- (" + std::to_string(rng() % 1000) + ",1);" +
                                     std::string(rng() % 60, 'x'));
    FilterConfig loose = no_keywords();
    loose.max_code_chars = 40;
    FilterConfig tight = loose;
    tight.max_code_chars = 30;
    tight.blank_std_threshold = 10;
    tight.near_white_mean_min = 200;
    tight.black_mean_max = 20;
    DedupStore d1, d2;
    const bool loose_pass = run_chain(c, stats, loose, d1).verdict.passed();
    const bool tight_pass = run_chain(c, stats, tight, d2).verdict.passed();
    REQUIRE((!tight_pass || loose_pass));
  }
}
