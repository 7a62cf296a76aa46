#include "mhrnn/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "mhrnn/error.hpp"

namespace mhrnn {
namespace {

void append_utf8(std::string& out, UChar32 c) {
  char buf[U8_MAX_LENGTH];
  int32_t len = 0;
  U8_APPEND_UNSAFE(buf, len, c);
  out.append(buf, static_cast<std::size_t>(len));
}

Token utf8_of(UChar32 c) {
  Token t;
  append_utf8(t, c);
  return t;
}

// First code point of a token, or -1 when the token is empty or malformed.
UChar32 first_code_point(std::string_view token) {
  if (token.empty()) return -1;
  int32_t i = 0;
  UChar32 c;
  U8_NEXT(token.data(), i, static_cast<int32_t>(token.size()), c);
  return c;
}

bool is_letter_token(std::string_view token) {
  if (token == kUpperToken) return false;
  const UChar32 c = first_code_point(token);
  return c >= 0 && u_isalpha(c);
}

bool is_mark_token(std::string_view token) {
  const UChar32 c = first_code_point(token);
  if (c < 0) return false;
  const auto mask = U_GET_GC_MASK(c);
  return (mask & U_GC_M_MASK) != 0;
}

bool is_latin_letter(UChar32 c) {
  UErrorCode status = U_ZERO_ERROR;
  return u_isalpha(c) && uscript_getScript(c, &status) == USCRIPT_LATIN && U_SUCCESS(status);
}

const icu::Normalizer2& nfkd() {
  static const icu::Normalizer2* instance = [] {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFKDInstance(status);
    if (U_FAILURE(status) || n == nullptr) {
      throw Error(ErrorCode::InvalidArgument, "ICU NFKD normalizer unavailable");
    }
    return n;
  }();
  return *instance;
}

char32_t parse_code_point(const nlohmann::json& j) {
  if (j.is_number_unsigned() || j.is_number_integer()) {
    return static_cast<char32_t>(j.get<std::int64_t>());
  }
  if (!j.is_string()) {
    throw Error(ErrorCode::InvalidArgument, "code point must be an integer or string");
  }
  const auto s = j.get<std::string>();
  if (s.size() > 2 && (s[0] == 'U' || s[0] == 'u') && s[1] == '+') {
    return static_cast<char32_t>(std::stoul(s.substr(2), nullptr, 16));
  }
  const UChar32 c = first_code_point(s);
  if (c < 0 || static_cast<std::size_t>(U8_LENGTH(c)) != s.size()) {
    throw Error(ErrorCode::InvalidArgument, "expected a single character: " + s);
  }
  return static_cast<char32_t>(c);
}

}  // namespace

bool is_greek_language(std::string_view language) {
  std::string lower(language);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return lower == "gr" || lower == "el" || lower == "greek";
}

// ---------------------------------------------------------------------------
// EquivalenceClasses

const EquivalenceClasses& EquivalenceClasses::defaults() {
  static const EquivalenceClasses classes = [] {
    EquivalenceClasses c;
    for (char32_t cp : {0x2012, 0x2013, 0x2014, 0x2015}) c.add(cp, utf8_of(0x2014));
    for (char32_t cp : {0x2010, 0x2011, 0x2212}) c.add(cp, "-");
    for (char32_t cp : {0x2018, 0x2019, 0x201A, 0x201B, 0x2032}) c.add(cp, "'");
    for (char32_t cp : {0x201C, 0x201D, 0x201E, 0x201F, 0x00AB, 0x00BB}) c.add(cp, "\"");
    return c;
  }();
  return classes;
}

void EquivalenceClasses::add(char32_t code_point, Token representative) {
  representative_[code_point] = std::move(representative);
}

const Token* EquivalenceClasses::find(char32_t code_point) const {
  const auto it = representative_.find(code_point);
  return it == representative_.end() ? nullptr : &it->second;
}

EquivalenceClasses EquivalenceClasses::from_json(const nlohmann::json& j) {
  // {"classes": [{"codepoints": ["U+2013", 8212, "-"], "token": "-"}, ...]}
  const auto& list = j.is_array() ? j : j.at("classes");
  EquivalenceClasses c;
  for (const auto& entry : list) {
    const auto token = entry.at("token").get<std::string>();
    if (token.empty()) throw Error(ErrorCode::InvalidArgument, "empty representative token");
    for (const auto& cp : entry.at("codepoints")) c.add(parse_code_point(cp), token);
  }
  return c;
}

EquivalenceClasses EquivalenceClasses::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
}

nlohmann::json EquivalenceClasses::to_json() const {
  std::map<Token, std::vector<std::string>> grouped;
  for (const auto& [cp, token] : representative_) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(cp));
    grouped[token].emplace_back(buf);
  }
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& [token, cps] : grouped) {
    classes.push_back({{"codepoints", cps}, {"token", token}});
  }
  return {{"classes", classes}};
}

// ---------------------------------------------------------------------------
// normalize

void truncate_runs(std::vector<Token>& tokens) {
  std::size_t out = 0;
  std::size_t run = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    run = (out > 0 && tokens[out - 1] == tokens[i]) ? run + 1 : 1;
    if (run > kMaxTokenRun) continue;
    if (out != i) tokens[out] = std::move(tokens[i]);
    ++out;
  }
  tokens.resize(out);
}

std::string join_tokens(std::span<const Token> tokens) {
  std::string s;
  for (const auto& t : tokens) s += t;
  return s;
}

NormalizedText normalize(std::string_view raw, std::string_view language,
                         const EquivalenceClasses& classes, std::string source_id) {
  NormalizedText result;
  result.source_id = std::move(source_id);
  if (raw.empty()) return result;

  UErrorCode status = U_ZERO_ERROR;
  const auto source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
  const icu::UnicodeString text = nfkd().normalize(source, status);
  if (U_FAILURE(status)) {
    throw Error(ErrorCode::InvalidArgument, "NFKD normalization failed");
  }

  const bool greek = is_greek_language(language);
  auto& tokens = result.tokens;
  tokens.reserve(static_cast<std::size_t>(text.length()));

  for (int32_t i = 0; i < text.length();) {
    UChar32 c = text.char32At(i);
    i += U16_LENGTH(c);

    if (u_isUWhiteSpace(c)) {
      if (tokens.empty() || tokens.back() != kSpaceToken) tokens.push_back(kSpaceToken);
      continue;
    }
    if (u_isUUppercase(c) || u_istitle(c)) {
      const UChar32 lower = u_tolower(c);
      if (lower != c) {
        tokens.push_back(kUpperToken);
        c = lower;
      }
    }
    if (const Token* merged = classes.find(static_cast<char32_t>(c))) {
      tokens.push_back(*merged);
      continue;
    }
    if (u_charType(c) == U_DECIMAL_DIGIT_NUMBER) {
      tokens.push_back(kDigitToken);
      continue;
    }
    if (greek && is_latin_letter(c)) {
      tokens.push_back(kLatinInGreekToken);
      continue;
    }
    tokens.push_back(utf8_of(c));
  }
  truncate_runs(tokens);
  return result;
}

// ---------------------------------------------------------------------------
// Alphabet

Alphabet::Alphabet(std::vector<Token> symbols, std::string language_tag, double min_frequency)
    : symbols_(std::move(symbols)),
      language_tag_(std::move(language_tag)),
      min_frequency_(min_frequency) {
  if (symbols_.empty()) throw Error(ErrorCode::EmptyAlphabet, "alphabet has no symbols");
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!index_.emplace(symbols_[i], static_cast<Symbol>(i)).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate alphabet symbol");
    }
  }
}

std::optional<Symbol> Alphabet::id_of(const Token& token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string Alphabet::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  for (const auto& s : symbols_) {
    for (unsigned char ch : s) mix(ch);
    mix(0);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json Alphabet::to_json() const {
  return {{"language_tag", language_tag_},
          {"min_frequency", min_frequency_},
          {"symbols", symbols_}};
}

Alphabet Alphabet::from_json(const nlohmann::json& j) {
  try {
    return Alphabet(j.at("symbols").get<std::vector<Token>>(),
                    j.at("language_tag").get<std::string>(),
                    j.at("min_frequency").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("alphabet: ") + e.what());
  }
}

void Alphabet::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

Alphabet Alphabet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": " + e.what());
  }
}

Alphabet build_alphabet(std::span<const NormalizedText> corpus, double min_frequency,
                        std::string language_tag, bool include_rare_word_token) {
  if (!(min_frequency > 0.0 && min_frequency < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "min_frequency must lie in (0, 1)");
  }
  std::map<Token, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& text : corpus) {
    for (const auto& t : text.tokens) ++counts[t];
    total += text.tokens.size();
  }
  if (total == 0) throw Error(ErrorCode::EmptyCorpus, "corpus has no tokens");

  std::vector<std::pair<Token, std::size_t>> kept;
  for (const auto& [token, n] : counts) {
    if (static_cast<double>(n) / static_cast<double>(total) >= min_frequency) {
      kept.emplace_back(token, n);
    }
  }
  // counts is ordered by UTF-8 bytes, which is code point order; the stable
  // sort keeps that as the tie-break.
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<Token> symbols;
  symbols.reserve(kept.size() + 1);
  for (auto& [token, n] : kept) symbols.push_back(std::move(token));
  if (symbols.empty()) {
    throw Error(ErrorCode::EmptyAlphabet, "no token reaches the minimum frequency");
  }
  if (include_rare_word_token &&
      std::find(symbols.begin(), symbols.end(), kRareWordToken) == symbols.end()) {
    symbols.push_back(kRareWordToken);
  }
  return Alphabet(std::move(symbols), std::move(language_tag), min_frequency);
}

EncodedDoc encode(const NormalizedText& text, const Alphabet& alphabet, bool reversed) {
  EncodedDoc doc;
  doc.doc_id = text.source_id;
  doc.reversed = reversed;
  doc.symbols.reserve(text.tokens.size());
  for (const auto& t : text.tokens) {
    if (auto id = alphabet.id_of(t)) doc.symbols.push_back(*id);
  }
  if (reversed) std::reverse(doc.symbols.begin(), doc.symbols.end());
  return doc;
}

// ---------------------------------------------------------------------------
// Document frequency

std::vector<WordSpan> find_words(std::span<const Token> tokens) {
  std::vector<WordSpan> words;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const bool marker_start = tokens[i] == kUpperToken && i + 1 < tokens.size() &&
                              is_letter_token(tokens[i + 1]);
    if (!marker_start && !is_letter_token(tokens[i])) {
      ++i;
      continue;
    }
    WordSpan w{i, i, {}};
    std::size_t j = i;
    while (j < tokens.size()) {
      if (is_letter_token(tokens[j]) || (j > i && is_mark_token(tokens[j]))) {
        w.key += tokens[j];
        ++j;
      } else if (tokens[j] == kUpperToken && j + 1 < tokens.size() &&
                 is_letter_token(tokens[j + 1])) {
        ++j;
      } else {
        break;
      }
    }
    w.end = j;
    words.push_back(std::move(w));
    i = j;
  }
  return words;
}

double DocFreqTable::frequency(const std::string& word) const {
  if (n_docs == 0) return 0.0;
  const auto it = counts.find(word);
  if (it == counts.end()) return 0.0;
  return static_cast<double>(it->second) / static_cast<double>(n_docs);
}

DocFreqTable doc_frequency(std::span<const NormalizedText> documents) {
  DocFreqTable table;
  table.n_docs = documents.size();
  for (const auto& doc : documents) {
    std::set<std::string> seen;
    for (auto& w : find_words(doc.tokens)) seen.insert(std::move(w.key));
    for (const auto& w : seen) ++table.counts[w];
  }
  return table;
}

NormalizedText mask_rare_words(const NormalizedText& text, const DocFreqTable& table,
                               double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "document frequency threshold must lie in (0, 1)");
  }
  NormalizedText out;
  out.source_id = text.source_id;
  out.tokens.reserve(text.tokens.size());
  std::size_t pos = 0;
  for (const auto& w : find_words(text.tokens)) {
    if (table.frequency(w.key) >= threshold) continue;
    out.tokens.insert(out.tokens.end(), text.tokens.begin() + static_cast<std::ptrdiff_t>(pos),
                      text.tokens.begin() + static_cast<std::ptrdiff_t>(w.begin));
    out.tokens.push_back(kRareWordToken);
    pos = w.end;
  }
  out.tokens.insert(out.tokens.end(), text.tokens.begin() + static_cast<std::ptrdiff_t>(pos),
                    text.tokens.end());
  truncate_runs(out.tokens);
  return out;
}

}  // namespace mhrnn
