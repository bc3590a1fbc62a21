#include <doctest.h>

#include "storylogic/data.hpp"
#include "storylogic/error.hpp"
#include "support.hpp"

#include <sstream>

using namespace storylogic;
using testing::TempDir;

namespace {

std::string nli_line(const std::string& label, const std::string& s1, const std::string& s2) {
  return R"({"gold_label": ")" + label + R"(", "sentence1": ")" + s1 + R"(", "sentence2": ")" +
         s2 + "\"}\n";
}

const char* kClozeHeader =
    "InputStoryid,InputSentence1,InputSentence2,InputSentence3,InputSentence4,"
    "RandomFifthSentenceQuiz1,RandomFifthSentenceQuiz2,AnswerRightEnding\n";

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("Daddy took us to the woods to camp.") ==
        Tokens{"daddy", "took", "us", "to", "the", "woods", "to", "camp", "."});
  CHECK(tokenize("").empty());
  const auto ending = tokenize("We had a wonderful time camping.");
  CHECK(ending == Tokens{"we", "had", "a", "wonderful", "time", "camping", "."});
  CHECK(ending.size() == 7);
  CHECK(tokenize("I didn't know, well-known!") ==
        Tokens{"i", "didn't", "know", ",", "well-known", "!"});
  CHECK(tokenize("'quoted' -dash") == Tokens{"'", "quoted", "'", "-", "dash"});
  CHECK(tokenize("  \t\n ") == Tokens{});
}

TEST_CASE("load_cloze: one-row fixture") {
  TempDir dir("cloze");
  const auto path = dir.write(
      "one.csv", std::string(kClozeHeader) +
                     "id-1,Daddy took us to the woods to camp.,\"He taught us how to build a "
                     "fire, with sticks.\",He helped us learn how to make our own tents.,We fell "
                     "asleep counting the stars in the sky.,We will never camp again.,We had a "
                     "wonderful time camping.,2\n");
  const auto rows = load_cloze(path);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].instance_id == "id-1");
  CHECK(rows[0].right_index == 2);
  CHECK(rows[0].right_ending() == tokenize(testing::kCampingRight));
  CHECK(rows[0].wrong_ending() == tokenize(testing::kCampingWrong));
  CHECK(rows[0].plot[1].back() == ".");
  CHECK(rows[0].plot[1][7] == "fire");
  CHECK(rows[0].plot[1][8] == ",");
}

TEST_CASE("load_cloze: malformed rows name the row") {
  TempDir dir("cloze-bad");
  const auto bad_label = dir.write("a.csv", std::string(kClozeHeader) + "x,a,b,c,d,e,f,3\n");
  CHECK_THROWS_AS(load_cloze(bad_label), FormatError);
  const auto short_row = dir.write("b.csv", std::string(kClozeHeader) + "x,a,b,c,d,e,f,1\ny,a\n");
  try {
    load_cloze(short_row);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
  CHECK_THROWS_AS(load_cloze(dir.path() / "missing.csv"), IoError);
}

TEST_CASE("load_rocstories") {
  TempDir dir("roc");
  const std::string header = "storyid,storytitle,sentence1,sentence2,sentence3,sentence4,sentence5\n";
  CHECK(load_rocstories(dir.write("empty.csv", header)).empty());
  const auto two = load_rocstories(dir.write(
      "two.csv", header + "s1,T,A b.,C d.,E f.,G h.,I j.\ns2,U,K l.,M n.,O p.,Q r.,S t.\n"));
  REQUIRE(two.size() == 2);
  CHECK(two[0].story_id == "s1");
  CHECK(two[1].story_id == "s2");
  CHECK(two[1].sentences[4] == Tokens{"s", "t", "."});
}

TEST_CASE("read_csv handles quoting and a byte-order mark") {
  TempDir dir("csv");
  const auto rows =
      read_csv(dir.write("q.csv", "\xEF\xBB\xBF" "a,\"b,c\",\"say \"\"hi\"\"\"\n\"multi\nline\",x,y\n"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"a", "b,c", "say \"hi\""});
  CHECK(rows[1][0] == "multi\nline");
}

TEST_CASE("NLI filter: length and unlabeled records") {
  TempDir dir("nli");
  std::string long_sentence;
  for (int i = 0; i < 25; ++i) long_sentence += "w" + std::to_string(i) + " ";
  const auto three = dir.write("three.jsonl", nli_line("entailment", "A man sleeps.", "A man rests.") +
                                                  nli_line("neutral", long_sentence, "Words.") +
                                                  nli_line("contradiction", "A cat.", "A dog."));
  NliBlend stats;
  const auto kept = read_nli(three, 20, stats);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].label == NliLabel::entailment);
  CHECK(kept[1].label == NliLabel::contradiction);
  CHECK(stats.too_long == 1);

  std::string ten;
  for (int i = 0; i < 10; ++i) {
    ten += nli_line(i == 3 || i == 7 ? "-" : "neutral", "Premise " + std::to_string(i) + ".",
                    "Hypothesis.");
  }
  NliBlend stats10;
  CHECK(read_nli(dir.write("ten.jsonl", ten), 20, stats10).size() == 8);
  CHECK(stats10.unlabeled == 2);
  CHECK(stats10.read == 10);
}

TEST_CASE("NLI filter: a sentence of exactly max_len tokens is dropped") {
  TempDir dir("nli-edge");
  std::string s19, s20;
  for (int i = 0; i < 19; ++i) s19 += "a ";
  s20 = s19 + "b";
  NliBlend stats;
  const auto kept = read_nli(dir.write("e.jsonl", nli_line("neutral", s19, "x") +
                                                      nli_line("neutral", s20, "x") +
                                                      "not json\n" + "{\"gold_label\":1}\n"),
                             20, stats);
  CHECK(kept.size() == 1);
  CHECK(stats.too_long == 1);
  CHECK(stats.malformed == 2);
}

TEST_CASE("blend_nli: seeded split, order preserved, idempotent") {
  TempDir dir("blend");
  std::string snli, mnli;
  for (int i = 0; i < 12; ++i) snli += nli_line("entailment", "s" + std::to_string(i), "h");
  for (int i = 0; i < 8; ++i) mnli += nli_line("neutral", "m" + std::to_string(i), "h");
  const auto a = dir.write("snli.jsonl", snli);
  const auto b = dir.write("mnli.jsonl", mnli);
  const auto first = blend_nli(a, b, 20, 5, 9);
  CHECK(first.train.size() == 15);
  CHECK(first.val.size() == 5);
  auto index_of = [](const NliPair& p) {
    const int base = p.premise[0][0] == 's' ? 0 : 100;
    return base + std::stoi(p.premise[0].substr(1));
  };
  for (const auto* part : {&first.train, &first.val}) {
    for (std::size_t i = 1; i < part->size(); ++i) {
      CHECK(index_of((*part)[i - 1]) < index_of((*part)[i]));
    }
  }
  const auto second = blend_nli(a, b, 20, 5, 9);
  REQUIRE(second.val.size() == first.val.size());
  for (std::size_t i = 0; i < first.val.size(); ++i) {
    CHECK(second.val[i].premise == first.val[i].premise);
  }
  // Written output reads back to the same records.
  write_nli(dir.path() / "out.jsonl", first.train);
  NliBlend stats;
  const auto back = read_nli(dir.path() / "out.jsonl", 20, stats);
  REQUIRE(back.size() == first.train.size());
  CHECK(back[3].premise == first.train[3].premise);
  CHECK(back[3].label == first.train[3].label);

  CHECK_THROWS_AS(blend_nli(a, b, 20, 20, 9), UsageError);
  const auto empty = dir.write("empty.jsonl", "");
  CHECK_THROWS_AS(blend_nli(empty, empty, 20, 0, 9), FormatError);
}

TEST_CASE("vocabulary") {
  const Tokens corpus = {"a", "a", "b"};
  const std::vector<const Tokens*> docs = {&corpus};
  const auto v1 = Vocabulary::build(docs, 1);
  CHECK(v1.tokens() == std::vector<std::string>{"<pad>", "<unk>", "a", "b"});
  CHECK(v1.id("a") == 2);
  CHECK(v1.id("b") == 3);
  CHECK(v1.id("zzz") == Vocabulary::kUnk);
  const auto v2 = Vocabulary::build(docs, 2);
  CHECK(v2.id("b") == Vocabulary::kUnk);
  CHECK(v2.size() == 3);
  const auto again = Vocabulary::build(docs, 1);
  CHECK(again.tokens() == v1.tokens());
  CHECK(again.fingerprint() == v1.fingerprint());
  CHECK(v2.fingerprint() != v1.fingerprint());
  CHECK(v1.encode({"b", "q", "a"}) == std::vector<int>{3, 1, 2});

  TempDir dir("vocab");
  v1.save(dir.path() / "v.txt");
  const auto loaded = Vocabulary::load(dir.path() / "v.txt");
  CHECK(loaded.tokens() == v1.tokens());
  CHECK(loaded.fingerprint() == v1.fingerprint());
}

TEST_CASE("vocabulary: ties break lexicographically") {
  const Tokens corpus = {"zeta", "alpha", "mid", "mid"};
  const auto v = Vocabulary::build({&corpus}, 1);
  CHECK(v.tokens() == std::vector<std::string>{"<pad>", "<unk>", "mid", "alpha", "zeta"});
}

TEST_CASE("embeddings") {
  const Tokens corpus = {"cat", "dog", "eel"};
  const auto vocab = Vocabulary::build({&corpus}, 1);
  TempDir dir("emb");
  const auto path = dir.write("vec.txt", "cat 0.5 -1.25 2\nunrelated 1 1 1\ndog 0 0.125 -3\n");
  const auto emb = load_embeddings(path, vocab, 3, 4);
  CHECK(emb.found == 2);
  const int cat = vocab.id("cat");
  CHECK(emb.matrix(cat, 0) == 0.5f);
  CHECK(emb.matrix(cat, 1) == -1.25f);
  CHECK(emb.matrix(cat, 2) == 2.0f);
  CHECK(emb.matrix(vocab.id("dog"), 2) == -3.0f);
  CHECK(emb.matrix.row(Vocabulary::kPad).isZero(0));
  const auto eel = emb.matrix.row(vocab.id("eel"));
  CHECK(eel.maxCoeff() <= 0.05f);
  CHECK(eel.minCoeff() >= -0.05f);
  CHECK_FALSE(eel.isZero(0));

  const auto bad = dir.write("bad.txt", "cat 1 2 3\ndog 1 2\n");
  try {
    load_embeddings(bad, vocab, 3, 4);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  const auto rnd = random_embeddings(vocab, 5, 4);
  CHECK(rnd.matrix.rows() == vocab.size());
  CHECK(rnd.matrix.cols() == 5);
  CHECK(rnd.matrix.row(0).isZero(0));
}
