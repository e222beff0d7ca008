#include "text2lip/text_frontend.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "text2lip/errors.hpp"
#include "text2lip/io_util.hpp"

namespace t2l {

namespace inventory {

const std::vector<std::string>& symbols() {
  static const std::vector<std::string> syms = {
      "sil",                                               // 0
      "p", "b", "t", "d", "k", "g", "tʃ", "dʒ",            // plosives/affricates
      "f", "v", "θ", "ð", "s", "z", "ʃ", "ʒ", "h",         // fricatives
      "m", "n", "ŋ",                                       // nasals
      "l", "r", "w", "j",                                  // approximants
      "iː", "ɪ", "ɛ", "æ", "ɑː", "ɒ", "ɔː", "ʊ", "uː",     // monophthongs
      "ʌ", "ɜː", "ə",
      "eɪ", "aɪ", "ɔɪ", "aʊ", "əʊ",                        // diphthongs
  };
  return syms;
}

namespace {
const std::map<std::string, int>& id_map() {
  static const std::map<std::string, int> m = [] {
    std::map<std::string, int> out;
    const auto& syms = symbols();
    for (int i = 0; i < static_cast<int>(syms.size()); ++i) out[syms[i]] = i;
    return out;
  }();
  return m;
}
}  // namespace

bool contains(const std::string& symbol) { return id_map().count(symbol) != 0; }

int id_of(const std::string& symbol) {
  auto it = id_map().find(symbol);
  if (it == id_map().end())
    throw UnknownSymbol("phoneme '" + symbol + "' is not in the inventory");
  return it->second;
}

int size() { return static_cast<int>(symbols().size()); }

}  // namespace inventory

namespace {

const char* kOnes[] = {"zero", "one", "two",  "three", "four",
                       "five", "six", "seven", "eight", "nine",
                       "ten", "eleven", "twelve", "thirteen", "fourteen",
                       "fifteen", "sixteen", "seventeen", "eighteen", "nineteen"};
const char* kTens[] = {"", "", "twenty", "thirty", "forty",
                       "fifty", "sixty", "seventy", "eighty", "ninety"};

void spell_below_thousand(int n, std::vector<std::string>& out) {
  if (n >= 100) {
    out.push_back(kOnes[n / 100]);
    out.push_back("hundred");
    n %= 100;
    if (n == 0) return;
  }
  if (n >= 20) {
    out.push_back(kTens[n / 10]);
    n %= 10;
    if (n == 0) return;
  }
  out.push_back(kOnes[n]);
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::size_t at = 0;
  while (true) {
    std::size_t next = line.find(sep, at);
    if (next == std::string::npos) {
      fields.push_back(line.substr(at));
      return fields;
    }
    fields.push_back(line.substr(at, next - at));
    at = next + 1;
  }
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> parts;
  std::string p;
  while (in >> p) parts.push_back(p);
  return parts;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::string text = read_file(path);
  std::vector<std::string> lines = split_fields(text, '\n');
  for (auto& l : lines)
    if (!l.empty() && l.back() == '\r') l.pop_back();
  return lines;
}

bool skippable(const std::string& line) {
  return line.empty() || line[0] == '#';
}

bool is_vowel_letter(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

}  // namespace

std::vector<std::string> expand_number(const std::string& digits) {
  bool leading_zero = digits.size() > 1 && digits[0] == '0';
  if (digits.size() > 6 || leading_zero) {
    std::vector<std::string> out;
    for (char c : digits) out.push_back(kOnes[c - '0']);
    return out;
  }
  long v = std::stol(digits);
  if (v == 0) return {"zero"};
  std::vector<std::string> out;
  if (v >= 1000) {
    spell_below_thousand(static_cast<int>(v / 1000), out);
    out.push_back("thousand");
    v %= 1000;
  }
  if (v > 0) spell_below_thousand(static_cast<int>(v), out);
  return out;
}

std::vector<std::string> normalize_text(const std::string& raw) {
  std::vector<std::string> tokens;
  std::string word, number;
  auto flush = [&] {
    if (!word.empty()) {
      tokens.push_back(word);
      word.clear();
    }
    if (!number.empty()) {
      for (auto& t : expand_number(number)) tokens.push_back(std::move(t));
      number.clear();
    }
  };
  for (unsigned char c : raw) {
    if (std::isalpha(c)) {
      if (!number.empty()) flush();
      word.push_back(static_cast<char>(std::tolower(c)));
    } else if (std::isdigit(c)) {
      if (!word.empty()) flush();
      number.push_back(static_cast<char>(c));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  Lexicon lex;
  int lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (skippable(line)) continue;
    auto fields = split_fields(line, '\t');
    if (fields.size() != 2 || fields[0].empty())
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": expected word<TAB>phonemes");
    const std::string& word = fields[0];
    if (lex.entries_.count(word))
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": duplicate entry for '" + word + "'");
    std::vector<int> ids;
    for (const auto& sym : split_ws(fields[1])) ids.push_back(inventory::id_of(sym));
    if (ids.empty())
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": empty pronunciation for '" + word + "'");
    lex.entries_[word] = std::move(ids);
  }
  return lex;
}

bool Lexicon::contains(const std::string& word) const {
  return entries_.count(word) != 0;
}

const std::vector<int>& Lexicon::at(const std::string& word) const {
  auto it = entries_.find(word);
  if (it == entries_.end()) throw DataError("word not in lexicon: " + word);
  return it->second;
}

LtsRules LtsRules::load(const std::filesystem::path& path) {
  LtsRules rules;
  int lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (skippable(line)) continue;
    auto fields = split_fields(line, '\t');
    if (fields.size() != 4 || fields[0].empty() || fields[2].size() != 1 ||
        fields[3].size() != 1)
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": expected grapheme<TAB>output<TAB>left<TAB>right");
    Rule r;
    r.grapheme = fields[0];
    if (fields[1] != "-")
      for (const auto& sym : split_ws(fields[1]))
        r.out.push_back(inventory::id_of(sym));
    r.left = fields[2][0];
    r.right = fields[3][0];
    rules.rules_.push_back(std::move(r));
  }
  // the engine relies on a context-free single-letter rule existing for
  // every letter, so a rule always fires
  for (char c = 'a'; c <= 'z'; ++c) {
    bool covered = false;
    for (const auto& r : rules.rules_)
      if (r.grapheme.size() == 1 && r.grapheme[0] == c && r.left == '-' &&
          r.right == '-') {
        covered = true;
        break;
      }
    if (!covered)
      throw ParseError(path.string() + ": no context-free rule for letter '" +
                       std::string(1, c) + "'");
  }
  return rules;
}

namespace {
bool context_matches(char pattern, char ch) {
  switch (pattern) {
    case '-': return true;
    case '#': return ch == '#';
    case 'V': return is_vowel_letter(ch);
    case 'C': return ch != '#' && !is_vowel_letter(ch);
    default: return pattern == ch;
  }
}
}  // namespace

std::vector<int> LtsRules::apply(const std::string& token) const {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos < token.size()) {
    char before = pos == 0 ? '#' : token[pos - 1];
    bool fired = false;
    for (const auto& r : rules_) {
      if (token.compare(pos, r.grapheme.size(), r.grapheme) != 0) continue;
      std::size_t end = pos + r.grapheme.size();
      char after = end >= token.size() ? '#' : token[end];
      if (!context_matches(r.left, before) || !context_matches(r.right, after))
        continue;
      out.insert(out.end(), r.out.begin(), r.out.end());
      pos = end;
      fired = true;
      break;
    }
    if (!fired) ++pos;  // unreachable for [a-z] input; skip stray bytes
  }
  return out;
}

PhonemeSequence text_to_phonemes(const std::vector<std::string>& tokens,
                                 const Lexicon& lexicon, const LtsRules& rules,
                                 std::vector<std::string>* oov_log) {
  PhonemeSequence seq;
  for (const auto& token : tokens) {
    std::vector<int> ids;
    if (lexicon.contains(token)) {
      ids = lexicon.at(token);
    } else {
      ids = rules.apply(token);
      if (oov_log) oov_log->push_back(token);
    }
    if (ids.empty()) continue;  // defensive; bundled rules never emit nothing
    seq.word_boundaries.push_back(static_cast<int>(seq.phonemes.size()));
    seq.phonemes.insert(seq.phonemes.end(), ids.begin(), ids.end());
  }
  return seq;
}

VisemeSequence phonemes_to_visemes(const PhonemeSequence& p,
                                   const VisemeTable& table,
                                   bool collapse_repeats, bool insert_silence) {
  auto class_for = [&](int phoneme) {
    if (phoneme < 0 || phoneme >= static_cast<int>(table.class_of.size()))
      throw UnknownSymbol("phoneme id " + std::to_string(phoneme) +
                          " has no viseme table entry");
    return table.class_of[phoneme];
  };
  VisemeSequence out;
  std::size_t next_word = 0;
  for (std::size_t i = 0; i < p.phonemes.size(); ++i) {
    if (insert_silence && next_word < p.word_boundaries.size() &&
        p.word_boundaries[next_word] == static_cast<int>(i)) {
      out.visemes.push_back(class_for(inventory::kSilence));
      ++next_word;
    }
    out.visemes.push_back(class_for(p.phonemes[i]));
  }
  if (collapse_repeats) {
    std::vector<int> collapsed;
    for (int v : out.visemes)
      if (collapsed.empty() || collapsed.back() != v) collapsed.push_back(v);
    out.visemes = std::move(collapsed);
  }
  return out;
}

VisemeTable load_viseme_table(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  VisemeTable table;
  table.name = path.stem().string();
  int lineno = 0;
  std::size_t at = 0;
  // header first: V=<count>
  for (; at < lines.size(); ++at) {
    ++lineno;
    if (skippable(lines[at])) continue;
    if (lines[at].rfind("V=", 0) != 0)
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": expected header V=<count>");
    try {
      table.class_count = std::stoi(lines[at].substr(2));
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": bad class count");
    }
    if (table.class_count <= 0)
      throw ParseError(path.string() + ": class count must be positive");
    ++at;
    ++lineno;
    break;
  }
  if (table.class_count == 0)
    throw ParseError(path.string() + ": missing V=<count> header");
  table.class_of.assign(inventory::size(), -1);
  for (; at < lines.size(); ++at, ++lineno) {
    const auto& line = lines[at];
    if (skippable(line)) continue;
    auto fields = split_fields(line, '\t');
    if (fields.size() != 2)
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": expected phoneme<TAB>class_id");
    int id = inventory::id_of(fields[0]);
    if (table.class_of[id] != -1)
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": duplicate row for '" + fields[0] + "'");
    int cls;
    try {
      cls = std::stoi(fields[1]);
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": bad class id '" + fields[1] + "'");
    }
    if (cls < 0 || cls >= table.class_count)
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": class " + std::to_string(cls) + " outside [0, " +
                       std::to_string(table.class_count) + ")");
    table.class_of[id] = cls;
  }
  std::string missing;
  for (int id = 0; id < inventory::size(); ++id)
    if (table.class_of[id] == -1) {
      if (!missing.empty()) missing += " ";
      missing += inventory::symbols()[id];
    }
  if (!missing.empty())
    throw IncompleteTable(path.string() + ": no class for: " + missing);
  return table;
}

}  // namespace t2l
