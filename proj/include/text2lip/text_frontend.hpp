#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace t2l {

// Fixed IPA working inventory. Symbol ids are stable across runs; id 0 is
// the silence marker used at word boundaries.
namespace inventory {
constexpr int kSilence = 0;
const std::vector<std::string>& symbols();  // id -> UTF-8 IPA symbol
bool contains(const std::string& symbol);
int id_of(const std::string& symbol);  // throws UnknownSymbol
int size();
}  // namespace inventory

struct PhonemeSequence {
  std::vector<int> phonemes;
  // index of each word's first phoneme; strictly increasing, starts at 0
  // for non-empty input
  std::vector<int> word_boundaries;
};

struct VisemeSequence {
  std::vector<int> visemes;
  // optional per-viseme frame counts; empty, or same length as visemes with
  // every entry >= 1
  std::vector<int> durations;
};

struct VisemeTable {
  std::vector<int> class_of;  // indexed by phoneme id, total over inventory
  int class_count = 0;
  std::string name;
};

// Lowercased word tokens, punctuation stripped, digit runs expanded to
// number words. Empty input gives an empty list.
std::vector<std::string> normalize_text(const std::string& raw);

// "8" -> {eight}; "120" -> {one, hundred, twenty}. Leading zeros or more
// than six digits are read digit by digit.
std::vector<std::string> expand_number(const std::string& digits);

class Lexicon {
public:
  static Lexicon load(const std::filesystem::path& path);
  bool contains(const std::string& word) const;
  const std::vector<int>& at(const std::string& word) const;
  std::size_t size() const { return entries_.size(); }

private:
  std::map<std::string, std::vector<int>> entries_;
};

// Ordered letter-to-sound rules for out-of-vocabulary tokens; first match
// wins, scanning left to right through the token.
class LtsRules {
public:
  static LtsRules load(const std::filesystem::path& path);
  std::vector<int> apply(const std::string& token) const;
  std::size_t size() const { return rules_.size(); }

private:
  struct Rule {
    std::string grapheme;
    std::vector<int> out;  // may be empty (silent letter)
    char left;             // '-', '#', 'V', 'C', or a literal letter
    char right;
  };
  std::vector<Rule> rules_;
};

// Lexicon-first lookup with rule fallback; tokens that fall back are
// appended to *oov_log when given.
PhonemeSequence text_to_phonemes(const std::vector<std::string>& tokens,
                                 const Lexicon& lexicon, const LtsRules& rules,
                                 std::vector<std::string>* oov_log = nullptr);

VisemeSequence phonemes_to_visemes(const PhonemeSequence& p,
                                   const VisemeTable& table,
                                   bool collapse_repeats = false,
                                   bool insert_silence = true);

VisemeTable load_viseme_table(const std::filesystem::path& path);

}  // namespace t2l
