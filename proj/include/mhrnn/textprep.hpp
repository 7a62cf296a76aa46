#pragma once

// Text normalization into a reduced character alphabet, and the
// document-frequency word mask.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace mhrnn {

using Token = std::string;
using Symbol = std::uint32_t;

// Marker emitted before the lowercase form of a capital letter. A private-use
// code point, so it is stable under NFKD and never occurs as a capital itself.
inline const Token kUpperToken = "\xEE\x80\x80";  // U+E000
inline const Token kRareWordToken = "\xC2\xB0";   // U+00B0 DEGREE SIGN
inline const Token kSpaceToken = " ";
inline const Token kDigitToken = "7";
inline const Token kLatinInGreekToken = "s";
inline constexpr std::size_t kMaxTokenRun = 5;

bool is_greek_language(std::string_view language);

// Code points that are folded onto one representative token after NFKD.
class EquivalenceClasses {
 public:
  EquivalenceClasses() = default;

  // Dashes, hyphens, and curly/straight quotes. Ellipses need no entry since
  // NFKD already expands them to full stops.
  static const EquivalenceClasses& defaults();

  static EquivalenceClasses from_json(const nlohmann::json& j);
  static EquivalenceClasses load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  void add(char32_t code_point, Token representative);
  const Token* find(char32_t code_point) const;

 private:
  std::map<char32_t, Token> representative_;
};

struct NormalizedText {
  std::vector<Token> tokens;
  std::string source_id;
};

// NFKD, uppercase markers, equivalence merges, digits to "7", Latin letters to
// "s" for Greek, whitespace collapse, and truncation of runs longer than five.
NormalizedText normalize(std::string_view raw, std::string_view language,
                         const EquivalenceClasses& classes = EquivalenceClasses::defaults(),
                         std::string source_id = {});

// Cuts every run of identical tokens down to kMaxTokenRun.
void truncate_runs(std::vector<Token>& tokens);

std::string join_tokens(std::span<const Token> tokens);

class Alphabet {
 public:
  Alphabet(std::vector<Token> symbols, std::string language_tag, double min_frequency);

  std::size_t size() const { return symbols_.size(); }
  const std::vector<Token>& symbols() const { return symbols_; }
  const Token& symbol(Symbol id) const { return symbols_.at(id); }
  std::optional<Symbol> id_of(const Token& token) const;
  bool contains(const Token& token) const { return index_.count(token) != 0; }
  const std::string& language_tag() const { return language_tag_; }
  double min_frequency() const { return min_frequency_; }

  // FNV-1a over the symbol list, as 16 hex digits. Identifies the alphabet a
  // model was trained with.
  std::string hash() const;

  nlohmann::json to_json() const;
  static Alphabet from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Alphabet load(const std::filesystem::path& path);

  friend bool operator==(const Alphabet& a, const Alphabet& b) {
    return a.symbols_ == b.symbols_ && a.language_tag_ == b.language_tag_ &&
           a.min_frequency_ == b.min_frequency_;
  }

 private:
  std::vector<Token> symbols_;
  std::unordered_map<Token, Symbol> index_;
  std::string language_tag_;
  double min_frequency_;
};

// Keeps tokens whose relative frequency over the whole corpus is at least
// min_frequency, ordered by descending count then by code point. The rare-word
// token is appended when requested even if it never occurs.
Alphabet build_alphabet(std::span<const NormalizedText> corpus, double min_frequency,
                        std::string language_tag = {}, bool include_rare_word_token = false);

struct EncodedDoc {
  std::string doc_id;
  std::vector<Symbol> symbols;
  bool reversed = false;
};

// Tokens outside the alphabet are dropped; there is no unknown symbol.
EncodedDoc encode(const NormalizedText& text, const Alphabet& alphabet, bool reversed);

// A word is a maximal run of letters (with any combining marks). An uppercase
// marker directly before a letter belongs to the word but not to its key, so
// "Blackberry" and "blackberry" count as one word.
struct WordSpan {
  std::size_t begin;  // token index, including a leading uppercase marker
  std::size_t end;
  std::string key;
};
std::vector<WordSpan> find_words(std::span<const Token> tokens);

struct DocFreqTable {
  std::unordered_map<std::string, std::size_t> counts;
  std::size_t n_docs = 0;

  // Fraction of documents containing the word; 0 when unseen.
  double frequency(const std::string& word) const;
};

DocFreqTable doc_frequency(std::span<const NormalizedText> documents);

// Replaces each word with document frequency below threshold by a single
// rare-word token.
NormalizedText mask_rare_words(const NormalizedText& text, const DocFreqTable& table,
                               double threshold);

}  // namespace mhrnn
