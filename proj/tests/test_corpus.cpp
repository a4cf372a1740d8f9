#include <doctest.h>

#include <set>
#include <sstream>

#include "moodshift/corpus.hpp"
#include "moodshift/random.hpp"

using namespace moodshift;

namespace {

LabeledTweet item(std::string id, std::string text, std::optional<SentimentLabel> label = std::nullopt) {
  LabeledTweet t;
  t.tweet.id = std::move(id);
  t.tweet.text = std::move(text);
  t.label = label;
  return t;
}

Dataset make(const std::vector<std::pair<std::string, SentimentLabel>>& rows) {
  Dataset ds("d");
  for (std::size_t i = 0; i < rows.size(); ++i) ds.add(item("t" + std::to_string(i), rows[i].first, rows[i].second));
  return ds;
}

std::set<std::string> ids(const Dataset& ds) {
  std::set<std::string> out;
  for (const auto& it : ds) out.insert(it.tweet.id);
  return out;
}

}  // namespace

TEST_CASE("normalize_text collapses whitespace and composes") {
  CHECK(normalize_text("  We  beat COVID ") == "We beat COVID");
  CHECK(normalize_text("M-pox is a hoax!") == "M-pox is a hoax!");
  CHECK(normalize_text("a\t\n b") == "a b");
  // U+0065 U+0301 composes to U+00E9; U+212B (angstrom) to U+00C5
  CHECK(normalize_text("caf\x65\xCC\x81") == "caf\xC3\xA9");
  CHECK(normalize_text("\xE2\x84\xAB") == "\xC3\x85");
  CHECK(normalize_text("\xF0\x9F\x98\xB1 ok") == "\xF0\x9F\x98\xB1 ok");
}

TEST_CASE("ingest reads valid records and reports bad lines") {
  std::istringstream in(
      "{\"id\":\"1\",\"text\":\"a\",\"label\":\"positive\"}\n"
      "{\"id\":\"2\"}\n"
      "{\"id\":\"3\",\"text\":\"c\",\"created_at\":\"2022-09-05T10:00:00Z\",\"hashtags\":[\"mpox\"]}\n"
      "not json\n"
      "{\"id\":\"4\",\"text\":\"d\",\"label\":\"happy\"}\n"
      "{\"id\":\"5\",\"text\":\"e\",\"created_at\":\"yesterday\"}\n"
      "{\"id\":\"1\",\"text\":\"dup id\"}\n");
  const auto res = ingest(in, "x");
  REQUIRE(res.dataset.size() == 2);
  CHECK(res.skipped == 5);
  std::vector<std::size_t> lines;
  for (const auto& d : res.diagnostics) lines.push_back(d.line);
  CHECK(lines == std::vector<std::size_t>{2, 4, 5, 6, 7});
  CHECK(res.diagnostics[0].message.find("text") != std::string::npos);
  CHECK(res.dataset[1].tweet.hashtags == std::vector<std::string>{"mpox"});
}

TEST_CASE("ingest of an empty stream warns") {
  std::istringstream in("");
  const auto res = ingest(in, "x");
  CHECK(res.dataset.empty());
  REQUIRE(res.diagnostics.size() == 1);
  CHECK(res.diagnostics[0].warning);
}

TEST_CASE("export then ingest reproduces the bytes") {
  const std::string text =
      "{\"id\":\"a\",\"text\":\"We beat COVID \xF0\x9F\x92\xAA\",\"created_at\":\"2022-09-05T10:00:00Z\","
      "\"hashtags\":[\"m-pox\"],\"label\":\"positive\",\"annotator\":\"ann\",\"revision\":2}\n"
      "{\"id\":\"b\",\"text\":\"plain\"}\n";
  std::istringstream in(text);
  const auto res = ingest(in, "x");
  REQUIRE(res.skipped == 0);
  std::ostringstream out;
  export_corpus(res.dataset, out);
  CHECK(out.str() == text);
}

TEST_CASE("dedup keeps the first of each normalized text") {
  Dataset ds("d");
  ds.add(item("1", "a"));
  ds.add(item("2", "a"));
  ds.add(item("3", "b"));
  CHECK(ids(dedup(ds)) == std::set<std::string>{"1", "3"});

  Dataset ws("w");
  ws.add(item("1", "a "));
  ws.add(item("2", "a"));
  const auto d = dedup(ws);
  REQUIRE(d.size() == 1);
  CHECK(d[0].tweet.text == "a ");
}

TEST_CASE("dedup matches a set-based distinct count") {
  Rng rng(11);
  Dataset ds("r");
  std::set<std::string> distinct;
  for (int i = 0; i < 1000; ++i) {
    const auto k = rng.below(400);
    std::string text = "text " + std::to_string(k);
    if (rng.below(3) == 0) text = "  " + text + " ";  // whitespace-equivalent variant
    distinct.insert("text " + std::to_string(k));
    ds.add(item(std::to_string(i), text));
  }
  const auto once = dedup(ds);
  CHECK(once.size() == distinct.size());
  CHECK(dedup(once).items() == once.items());
}

TEST_CASE("fraction parsing and rounding") {
  CHECK(Fraction::parse("1/5").share_of(10) == 2);
  CHECK(Fraction::parse("0.2").share_of(10) == 2);
  CHECK(Fraction::parse("1/5").share_of(20604) == 4121);
  CHECK(Fraction{1, 2}.share_of(5) == 3);  // half rounds up
  CHECK_THROWS_AS(Fraction::parse("x/5"), CorpusError);
}

TEST_CASE("unstratified split of ten items") {
  Dataset ds("d");
  for (int i = 0; i < 10; ++i) ds.add(item(std::to_string(i), "t" + std::to_string(i), SentimentLabel::Neutral));
  const auto s = stratified_split(ds, {Fraction{1, 5}, 3, false});
  CHECK(s.train.size() == 8);
  CHECK(s.test.size() == 2);
}

TEST_CASE("stratified split preserves class proportions and partitions") {
  std::vector<std::pair<std::string, SentimentLabel>> rows;
  for (int i = 0; i < 50; ++i) rows.emplace_back("n" + std::to_string(i), SentimentLabel::Negative);
  for (int i = 0; i < 30; ++i) rows.emplace_back("u" + std::to_string(i), SentimentLabel::Neutral);
  for (int i = 0; i < 20; ++i) rows.emplace_back("p" + std::to_string(i), SentimentLabel::Positive);
  const auto ds = make(rows);
  const auto s = stratified_split(ds, {Fraction{1, 5}, 42, true});
  std::array<int, 3> counts{};
  for (const auto& it : s.test) ++counts[label_index(*it.label)];
  CHECK(counts == std::array<int, 3>{10, 6, 4});

  auto tr = ids(s.train), te = ids(s.test);
  std::set<std::string> both;
  std::set_intersection(tr.begin(), tr.end(), te.begin(), te.end(), std::inserter(both, both.end()));
  CHECK(both.empty());
  tr.insert(te.begin(), te.end());
  CHECK(tr == ids(ds));

  const auto again = stratified_split(ds, {Fraction{1, 5}, 42, true});
  CHECK(ids(again.test) == ids(s.test));
  const auto other = stratified_split(ds, {Fraction{1, 5}, 43, true});
  CHECK(ids(other.test) != ids(s.test));
}

TEST_CASE("stratified split names an unlabelled tweet") {
  Dataset ds("d");
  ds.add(item("ok", "a", SentimentLabel::Positive));
  ds.add(item("bare", "b"));
  try {
    stratified_split(ds, {});
    FAIL("expected an error");
  } catch (const CorpusError& e) {
    CHECK(std::string(e.what()).find("bare") != std::string::npos);
  }
}

TEST_CASE("label distribution") {
  const auto all_neg = make({{"a", SentimentLabel::Negative}, {"b", SentimentLabel::Negative}});
  CHECK(label_distribution(all_neg) == std::map<SentimentLabel, double>{{SentimentLabel::Negative, 1.0}});
  const auto mixed = make({{"a", SentimentLabel::Positive},
                           {"b", SentimentLabel::Positive},
                           {"c", SentimentLabel::Neutral},
                           {"d", SentimentLabel::Negative}});
  const auto d = label_distribution(mixed);
  CHECK(d.at(SentimentLabel::Positive) == 0.5);
  CHECK(d.at(SentimentLabel::Neutral) == 0.25);
  CHECK(d.at(SentimentLabel::Negative) == 0.25);
  Dataset none("n");
  none.add(item("x", "y"));
  CHECK_THROWS_AS(label_distribution(none), CorpusError);
}
