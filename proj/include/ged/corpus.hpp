#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ged/types.hpp"

namespace ged {

struct Token {
  std::string surface;
  std::u32string chars;  // exact code-point decomposition of surface
  std::optional<Pos> pos;
  int word_id = -1;
  std::vector<int> char_ids;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::string sid;
  std::vector<Token> tokens;
  std::vector<Label> gold_labels;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const Sentence&) const = default;
};

struct AnnotatedSentence {
  Sentence sentence;
  std::vector<Edit> edits;
  int annotator = 0;
};

// Word and character vocabularies. Indices are dense from 0 and the four
// specials occupy ids 0..3 in both tables.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kNumSpecials = 4;

  Vocab();

  // Rebuild from id-ordered lists (specials excluded); used by checkpoint and
  // vocab-file loading.
  static Vocab from_lists(const std::vector<std::string>& words,
                          const std::vector<std::u32string>& chars);

  // Lookup is case-folded for words, exact for characters; misses map to kUnk.
  int word_id(std::string_view surface) const;
  int char_id(char32_t c) const;

  bool has_word(std::string_view surface) const;

  std::size_t word_count() const { return id_to_word_.size(); }
  std::size_t char_count() const { return id_to_char_.size(); }

  const std::string& word(int id) const { return id_to_word_.at(static_cast<std::size_t>(id)); }
  // Characters as UTF-8 text; specials render as "<PAD>", "<UNK>", ...
  std::string char_text(int id) const;

  // Regular entries (specials excluded) in id order.
  std::vector<std::string> words() const;
  std::vector<std::u32string> chars() const;

  int add_word(const std::string& lowered);
  int add_char(char32_t c);

  bool operator==(const Vocab& o) const {
    return id_to_word_ == o.id_to_word_ && id_to_char_ == o.id_to_char_;
  }

 private:
  std::unordered_map<std::string, int> word_to_id_;
  std::unordered_map<char32_t, int> char_to_id_;
  std::vector<std::string> id_to_word_;
  std::vector<char32_t> id_to_char_;  // specials hold 0
};

// ---- text helpers --------------------------------------------------------

std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view s);
std::string utf8_encode(char32_t c);

// Case folding used for word-vocabulary lookup (ASCII and Latin-1 letters).
std::string lowercase(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view line);
std::vector<std::string> split_lines(std::string_view content);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// ---- construction --------------------------------------------------------

// Throws ValidationError on an empty surface.
Token make_token(std::string surface);

// Builds an all-Correct sentence from pre-tokenized words. Throws
// ValidationError when `words` is empty or contains an empty token.
Sentence make_sentence(std::string sid, const std::vector<std::string>& words);

// ---- operations ----------------------------------------------------------

// Parses M2 content into one record per (sentence, annotator). Sids are
// `sid_prefix + block index`. Gold labels are filled from each annotator's edits.
std::vector<AnnotatedSentence> parse_m2(std::string_view content,
                                        std::string_view sid_prefix = "");

// Serializes records back to M2. Consecutive records sharing a sid are written
// as one block with one A-line group per annotator.
std::string write_m2(const std::vector<AnnotatedSentence>& records);

// Builds records from aligned original/corrected lines (annotator 0).
std::vector<AnnotatedSentence> parse_parallel(const std::vector<std::string>& original,
                                              const std::vector<std::string>& corrected,
                                              std::string_view sid_prefix = "");

// Token labels from span edits: covered tokens are Incorrect; a zero-width edit
// at k marks token min(k, n-1).
std::vector<Label> spans_to_token_labels(std::size_t n_tokens, const std::vector<Edit>& edits);

// Per-token (operation, type) of the first edit covering it under the same
// rule as spans_to_token_labels; nullopt for Correct tokens.
struct TokenErrorInfo {
  Operation op;
  ErrorType etype;
  bool operator==(const TokenErrorInfo&) const = default;
};
std::vector<std::optional<TokenErrorInfo>> token_error_info(std::size_t n_tokens,
                                                            const std::vector<Edit>& edits);

// Validates edit spans against a sentence length, sorts them by (start, end)
// and rejects overlaps. Throws ValidationError.
void normalize_edits(std::vector<Edit>& edits, std::size_t n_tokens);

Vocab build_vocab(const std::vector<Sentence>& sentences, int min_count = 1);

Sentence encode(const Sentence& sentence, const Vocab& vocab);

// Keeps the records of one annotator (sentences lacking it fall back to the
// lowest annotator present, so every sentence is kept exactly once).
std::vector<AnnotatedSentence> select_annotator(const std::vector<AnnotatedSentence>& records,
                                                int annotator);

}  // namespace ged
