#include <doctest.h>

#include <filesystem>
#include <set>

#include "text2lip/errors.hpp"
#include "text2lip/io_util.hpp"
#include "text2lip/rng.hpp"
#include "text2lip/text_frontend.hpp"

using namespace t2l;

namespace {
std::filesystem::path data_dir() { return T2L_DATA_DIR; }

const Lexicon& lexicon() {
  static Lexicon lex = Lexicon::load(data_dir() / "lexicon_en.tsv");
  return lex;
}
const LtsRules& rules() {
  static LtsRules r = LtsRules::load(data_dir() / "lts_rules_en.tsv");
  return r;
}
const VisemeTable& table() {
  static VisemeTable t = load_viseme_table(data_dir() / "visemes_sapi22.tsv");
  return t;
}
}  // namespace

TEST_CASE("normalize_text lowercases, strips punctuation, expands digits") {
  CHECK(normalize_text("Lay red with y two again.") ==
        std::vector<std::string>{"lay", "red", "with", "y", "two", "again"});
  CHECK(normalize_text("") == std::vector<std::string>{});
  CHECK(normalize_text("8 bins") == std::vector<std::string>{"eight", "bins"});
  CHECK(normalize_text("Hello,   WORLD!!") ==
        std::vector<std::string>{"hello", "world"});
  CHECK(normalize_text("a1b") == std::vector<std::string>{"a", "one", "b"});
  CHECK(normalize_text("...") == std::vector<std::string>{});
}

TEST_CASE("number expansion") {
  CHECK(expand_number("0") == std::vector<std::string>{"zero"});
  CHECK(expand_number("8") == std::vector<std::string>{"eight"});
  CHECK(expand_number("13") == std::vector<std::string>{"thirteen"});
  CHECK(expand_number("45") == std::vector<std::string>{"forty", "five"});
  CHECK(expand_number("300") == std::vector<std::string>{"three", "hundred"});
  CHECK(expand_number("120") ==
        std::vector<std::string>{"one", "hundred", "twenty"});
  CHECK(expand_number("999999") ==
        std::vector<std::string>{"nine", "hundred", "ninety", "nine",
                                 "thousand", "nine", "hundred", "ninety",
                                 "nine"});
  // leading zeros and very long runs are read digit by digit
  CHECK(expand_number("007") == std::vector<std::string>{"zero", "zero", "seven"});
  CHECK(expand_number("1234567") ==
        std::vector<std::string>{"one", "two", "three", "four", "five", "six",
                                 "seven"});
}

TEST_CASE("bundled lexicon loads and carries the expected entries") {
  CHECK(lexicon().size() >= 90);
  CHECK(lexicon().contains("red"));
  std::vector<int> red = {inventory::id_of("r"), inventory::id_of("ɛ"),
                          inventory::id_of("d")};
  CHECK(lexicon().at("red") == red);
  CHECK(lexicon().contains("y"));
  CHECK(lexicon().at("y") ==
        std::vector<int>{inventory::id_of("w"), inventory::id_of("aɪ")});
}

TEST_CASE("lexicon loader rejects malformed files") {
  auto tmp = std::filesystem::temp_directory_path();
  auto dup = tmp / "t2l_lex_dup.tsv";
  atomic_write_file(dup, "red\tr ɛ d\nred\tr ɛ d\n");
  CHECK_THROWS_AS(Lexicon::load(dup), ParseError);
  auto bad = tmp / "t2l_lex_bad.tsv";
  atomic_write_file(bad, "red\tr qq d\n");
  CHECK_THROWS_AS(Lexicon::load(bad), UnknownSymbol);
  std::filesystem::remove(dup);
  std::filesystem::remove(bad);
}

TEST_CASE("letter-to-sound fallback emits inventory symbols for any token") {
  std::vector<int> zzqx = rules().apply("zzqx");
  CHECK_FALSE(zzqx.empty());
  for (int id : zzqx) {
    CHECK(id >= 0);
    CHECK(id < inventory::size());
  }
  // an in-vocabulary word routed through the rules gives the same result here
  CHECK(rules().apply("red") == lexicon().at("red"));
}

TEST_CASE("rule fallback on random tokens always stays inside the inventory") {
  Rng rng(41);
  for (int trial = 0; trial < 500; ++trial) {
    std::string token;
    int len = 1 + static_cast<int>(rng.uniform_int(10));
    for (int i = 0; i < len; ++i)
      token.push_back(static_cast<char>('a' + rng.uniform_int(26)));
    std::vector<int> ids = rules().apply(token);
    CHECK_FALSE(ids.empty());
    for (int id : ids) {
      CHECK(id >= 0);
      CHECK(id < inventory::size());
    }
  }
}

TEST_CASE("text_to_phonemes: lexicon first, rules for OOV, boundaries kept") {
  std::vector<std::string> oov;
  PhonemeSequence seq =
      text_to_phonemes({"red", "zzqx", "blue"}, lexicon(), rules(), &oov);
  CHECK(oov == std::vector<std::string>{"zzqx"});
  REQUIRE(seq.word_boundaries.size() == 3);
  CHECK(seq.word_boundaries[0] == 0);
  for (std::size_t i = 1; i < seq.word_boundaries.size(); ++i)
    CHECK(seq.word_boundaries[i] > seq.word_boundaries[i - 1]);
  // first word is exactly the lexicon entry
  std::vector<int> red(seq.phonemes.begin(),
                       seq.phonemes.begin() + seq.word_boundaries[1]);
  CHECK(red == lexicon().at("red"));

  PhonemeSequence empty = text_to_phonemes({}, lexicon(), rules());
  CHECK(empty.phonemes.empty());
  CHECK(empty.word_boundaries.empty());
}

TEST_CASE("bundled viseme table: 22 classes, total over the inventory") {
  CHECK(table().class_count == 22);
  CHECK(table().class_of.size() == static_cast<std::size_t>(inventory::size()));
  for (int cls : table().class_of) {
    CHECK(cls >= 0);
    CHECK(cls < 22);
  }
  CHECK(table().class_of[inventory::kSilence] == 0);
}

TEST_CASE("viseme grouping facts from the bundled table") {
  auto cls = [&](const char* sym) { return table().class_of[inventory::id_of(sym)]; };
  CHECK(cls("b") == cls("p"));
  CHECK(cls("p") == cls("m"));
  CHECK(cls("s") == cls("z"));
  CHECK(cls("ɑː") != cls("iː"));
}

TEST_CASE("viseme table loader rejects incomplete and malformed tables") {
  auto tmp = std::filesystem::temp_directory_path();
  auto missing_r = tmp / "t2l_vt_missing.tsv";
  std::string txt = read_file(data_dir() / "visemes_sapi22.tsv");
  std::string without_r;
  for (const auto& line : {txt}) {
    std::size_t at = 0;
    while (at < line.size()) {
      std::size_t end = line.find('\n', at);
      if (end == std::string::npos) end = line.size();
      std::string row = line.substr(at, end - at);
      if (row != "r\t13") without_r += row + "\n";
      at = end + 1;
    }
  }
  atomic_write_file(missing_r, without_r);
  try {
    load_viseme_table(missing_r);
    FAIL("expected IncompleteTable");
  } catch (const IncompleteTable& e) {
    CHECK(std::string(e.what()).find("r") != std::string::npos);
  }

  auto dup = tmp / "t2l_vt_dup.tsv";
  atomic_write_file(dup, txt + "r\t13\n");
  CHECK_THROWS_AS(load_viseme_table(dup), ParseError);

  auto no_header = tmp / "t2l_vt_nohdr.tsv";
  atomic_write_file(no_header, "r\t13\n");
  CHECK_THROWS_AS(load_viseme_table(no_header), ParseError);

  std::filesystem::remove(missing_r);
  std::filesystem::remove(dup);
  std::filesystem::remove(no_header);
}

TEST_CASE("phonemes_to_visemes: silence insertion and the length relation") {
  PhonemeSequence seq =
      text_to_phonemes(normalize_text("lay red with y two again"), lexicon(),
                       rules());
  VisemeSequence vis = phonemes_to_visemes(seq, table());
  CHECK(vis.visemes.size() ==
        seq.phonemes.size() + seq.word_boundaries.size());
  // each word start is preceded by the silence class
  std::size_t vis_at = 0;
  for (std::size_t w = 0; w < seq.word_boundaries.size(); ++w) {
    CHECK(vis.visemes[vis_at] == 0);
    std::size_t word_len =
        (w + 1 < seq.word_boundaries.size() ? seq.word_boundaries[w + 1]
                                            : seq.phonemes.size()) -
        seq.word_boundaries[w];
    vis_at += 1 + word_len;
  }

  VisemeSequence no_sil = phonemes_to_visemes(seq, table(), false, false);
  CHECK(no_sil.visemes.size() == seq.phonemes.size());

  VisemeSequence collapsed = phonemes_to_visemes(seq, table(), true);
  for (std::size_t i = 1; i < collapsed.visemes.size(); ++i)
    CHECK(collapsed.visemes[i] != collapsed.visemes[i - 1]);
}

TEST_CASE("same initial viseme for 'bad boy' and 'bat'") {
  auto first_viseme = [&](const std::string& text) {
    PhonemeSequence seq =
        text_to_phonemes(normalize_text(text), lexicon(), rules());
    VisemeSequence vis = phonemes_to_visemes(seq, table(), false, false);
    REQUIRE_FALSE(vis.visemes.empty());
    return vis.visemes[0];
  };
  CHECK(first_viseme("bad boy") == first_viseme("bat"));
}

TEST_CASE("full front end is deterministic across repeated runs") {
  auto run = [&] {
    PhonemeSequence seq = text_to_phonemes(
        normalize_text("Place blue at F 9 soon!"), lexicon(), rules());
    return phonemes_to_visemes(seq, table()).visemes;
  };
  CHECK(run() == run());
}
