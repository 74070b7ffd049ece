#include "ged/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>

#include "ged/edit_analysis.hpp"
#include "ged/error.hpp"

namespace ged {

// ---- text helpers --------------------------------------------------------

std::u32string utf8_decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      extra = 1;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      extra = 2;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      extra = 3;
    } else {
      throw ValidationError("invalid UTF-8 lead byte in \"" + std::string(s) + "\"");
    }
    for (int k = 1; k <= extra; ++k) {
      if (i + static_cast<std::size_t>(k) >= s.size())
        throw ValidationError("truncated UTF-8 sequence in \"" + std::string(s) + "\"");
      const auto b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
      if ((b & 0xC0) != 0x80)
        throw ValidationError("invalid UTF-8 continuation in \"" + std::string(s) + "\"");
      cp = (cp << 6) | (b & 0x3F);
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

std::string utf8_encode(char32_t c) {
  std::string out;
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
  return out;
}

std::string utf8_encode(std::u32string_view s) {
  std::string out;
  for (char32_t c : s) out += utf8_encode(c);
  return out;
}

namespace {

char32_t fold_case(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  // Latin-1 upper range, skipping the multiplication sign.
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  return c;
}

}  // namespace

std::string lowercase(std::string_view s) {
  bool ascii = std::all_of(s.begin(), s.end(), [](char ch) {
    return static_cast<unsigned char>(ch) < 0x80;
  });
  if (ascii) {
    std::string out(s);
    for (char& ch : out)
      if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch + 32);
    return out;
  }
  std::u32string cps = utf8_decode(s);
  for (char32_t& c : cps) c = fold_case(c);
  return utf8_encode(cps);
}

std::vector<std::string> split_whitespace(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> split_lines(std::string_view content) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t nl = content.find('\n', start);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = nl + 1;
  }
  return lines;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// ---- Vocab ---------------------------------------------------------------

Vocab::Vocab() {
  for (const char* s : {"<PAD>", "<UNK>", "<BOS>", "<EOS>"}) {
    word_to_id_.emplace(s, static_cast<int>(id_to_word_.size()));
    id_to_word_.emplace_back(s);
    id_to_char_.push_back(0);
  }
}

Vocab Vocab::from_lists(const std::vector<std::string>& words,
                        const std::vector<std::u32string>& chars) {
  Vocab v;
  for (const auto& w : words) {
    if (v.word_to_id_.count(w)) throw FormatError("duplicate vocabulary word: " + w);
    v.add_word(w);
  }
  for (const auto& c : chars) {
    if (c.size() != 1) throw FormatError("character vocabulary entry is not one code point");
    if (v.char_to_id_.count(c[0])) throw FormatError("duplicate vocabulary character");
    v.add_char(c[0]);
  }
  return v;
}

int Vocab::add_word(const std::string& lowered) {
  auto [it, inserted] = word_to_id_.emplace(lowered, static_cast<int>(id_to_word_.size()));
  if (inserted) id_to_word_.push_back(lowered);
  return it->second;
}

int Vocab::add_char(char32_t c) {
  auto [it, inserted] = char_to_id_.emplace(c, static_cast<int>(id_to_char_.size()));
  if (inserted) id_to_char_.push_back(c);
  return it->second;
}

int Vocab::word_id(std::string_view surface) const {
  auto it = word_to_id_.find(lowercase(surface));
  // Special markers are never produced by real tokens.
  if (it == word_to_id_.end() || it->second < kNumSpecials) return kUnk;
  return it->second;
}

bool Vocab::has_word(std::string_view surface) const { return word_id(surface) != kUnk; }

int Vocab::char_id(char32_t c) const {
  auto it = char_to_id_.find(c);
  return it == char_to_id_.end() ? kUnk : it->second;
}

std::string Vocab::char_text(int id) const {
  if (id < kNumSpecials) return id_to_word_[static_cast<std::size_t>(id)];
  return utf8_encode(id_to_char_.at(static_cast<std::size_t>(id)));
}

std::vector<std::string> Vocab::words() const {
  return {id_to_word_.begin() + kNumSpecials, id_to_word_.end()};
}

std::vector<std::u32string> Vocab::chars() const {
  std::vector<std::u32string> out;
  for (std::size_t i = kNumSpecials; i < id_to_char_.size(); ++i)
    out.emplace_back(1, id_to_char_[i]);
  return out;
}

// ---- construction --------------------------------------------------------

Token make_token(std::string surface) {
  if (surface.empty()) throw ValidationError("empty token");
  Token t;
  t.chars = utf8_decode(surface);
  t.surface = std::move(surface);
  return t;
}

Sentence make_sentence(std::string sid, const std::vector<std::string>& words) {
  if (words.empty()) throw ValidationError("sentence " + sid + " has no tokens");
  Sentence s;
  s.sid = std::move(sid);
  s.tokens.reserve(words.size());
  for (const auto& w : words) s.tokens.push_back(make_token(w));
  s.gold_labels.assign(words.size(), Label::Correct);
  return s;
}

// ---- labels --------------------------------------------------------------

std::vector<Label> spans_to_token_labels(std::size_t n_tokens, const std::vector<Edit>& edits) {
  std::vector<Label> labels(n_tokens, Label::Correct);
  if (n_tokens == 0) return labels;
  for (const Edit& e : edits) {
    if (e.o_start == e.o_end) {
      const auto k = std::min<std::size_t>(static_cast<std::size_t>(e.o_start), n_tokens - 1);
      labels[k] = Label::Incorrect;
    } else {
      for (int i = e.o_start; i < e.o_end; ++i) labels[static_cast<std::size_t>(i)] = Label::Incorrect;
    }
  }
  return labels;
}

std::vector<std::optional<TokenErrorInfo>> token_error_info(std::size_t n_tokens,
                                                            const std::vector<Edit>& edits) {
  std::vector<std::optional<TokenErrorInfo>> info(n_tokens);
  if (n_tokens == 0) return info;
  auto mark = [&](std::size_t i, const Edit& e) {
    if (!info[i]) info[i] = TokenErrorInfo{e.op, e.etype};
  };
  for (const Edit& e : edits) {
    if (e.o_start == e.o_end) {
      mark(std::min<std::size_t>(static_cast<std::size_t>(e.o_start), n_tokens - 1), e);
    } else {
      for (int i = e.o_start; i < e.o_end; ++i) mark(static_cast<std::size_t>(i), e);
    }
  }
  return info;
}

void normalize_edits(std::vector<Edit>& edits, std::size_t n_tokens) {
  const int n = static_cast<int>(n_tokens);
  for (const Edit& e : edits) {
    if (e.o_end < e.o_start)
      throw ValidationError("edit span end " + std::to_string(e.o_end) + " < start " +
                            std::to_string(e.o_start));
    if (e.o_start < 0 || e.o_end > n)
      throw ValidationError("edit span (" + std::to_string(e.o_start) + "," +
                            std::to_string(e.o_end) + ") outside sentence of length " +
                            std::to_string(n));
  }
  std::stable_sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) {
    return a.o_start != b.o_start ? a.o_start < b.o_start : a.o_end < b.o_end;
  });
  for (std::size_t i = 1; i < edits.size(); ++i) {
    const Edit& a = edits[i - 1];
    const Edit& b = edits[i];
    const bool same_insertion = a.o_start == a.o_end && b.o_start == b.o_end && a.o_start == b.o_start;
    if (b.o_start < a.o_end || same_insertion)
      throw ValidationError("overlapping edits (" + std::to_string(a.o_start) + "," +
                            std::to_string(a.o_end) + ") and (" + std::to_string(b.o_start) + "," +
                            std::to_string(b.o_end) + ")");
  }
}

// ---- M2 ------------------------------------------------------------------

namespace {

constexpr std::string_view kFieldSep = "|||";

std::vector<std::string_view> split_fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(kFieldSep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + kFieldSep.size();
  }
  return out;
}

bool parse_int(std::string_view s, int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

struct PendingEdit {
  Edit edit;
  int annotator;
  bool noop;
};

void finish_block(std::vector<AnnotatedSentence>& out, const std::vector<std::string>& words,
                  std::vector<PendingEdit>& pending, std::string_view sid_prefix,
                  std::size_t block_index, std::size_t block_line) {
  Sentence base;
  try {
    base = make_sentence(std::string(sid_prefix) + std::to_string(block_index), words);
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), block_line);
  }
  std::map<int, std::vector<Edit>> by_annotator;
  for (auto& p : pending) {
    auto& list = by_annotator[p.annotator];
    if (!p.noop) list.push_back(std::move(p.edit));
  }
  if (by_annotator.empty()) by_annotator[0];
  for (auto& [annotator, edits] : by_annotator) {
    normalize_edits(edits, base.size());
    AnnotatedSentence rec;
    rec.sentence = base;
    rec.sentence.gold_labels = spans_to_token_labels(base.size(), edits);
    rec.edits = std::move(edits);
    rec.annotator = annotator;
    out.push_back(std::move(rec));
  }
  pending.clear();
}

}  // namespace

std::vector<AnnotatedSentence> parse_m2(std::string_view content, std::string_view sid_prefix) {
  std::vector<AnnotatedSentence> out;
  const auto lines = split_lines(content);
  std::vector<std::string> words;
  std::vector<PendingEdit> pending;
  bool in_block = false;
  std::size_t block_index = 0;
  std::size_t block_line = 0;

  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::string& line = lines[li];
    const std::size_t line_no = li + 1;
    if (line.empty() || line.find_first_not_of(" \t") == std::string::npos) {
      if (in_block) {
        finish_block(out, words, pending, sid_prefix, block_index++, block_line);
        in_block = false;
      }
      continue;
    }
    if (line.rfind("S ", 0) == 0 || line == "S") {
      if (in_block) throw ParseError("sentence line without preceding blank line", line_no);
      words = split_whitespace(std::string_view(line).substr(1));
      in_block = true;
      block_line = line_no;
      continue;
    }
    if (line.rfind("A ", 0) != 0) throw ParseError("expected 'S ' or 'A ' line", line_no);
    if (!in_block) throw ParseError("annotation line outside a sentence block", line_no);

    auto fields = split_fields(std::string_view(line).substr(2));
    if (fields.size() != 6) throw ParseError("annotation line must have 6 fields", line_no);
    auto span = split_whitespace(fields[0]);
    PendingEdit p{};
    if (span.size() != 2 || !parse_int(span[0], p.edit.o_start) ||
        !parse_int(span[1], p.edit.o_end))
      throw ParseError("malformed span '" + std::string(fields[0]) + "'", line_no);
    if (!parse_int(fields[5], p.annotator) || p.annotator < 0)
      throw ParseError("malformed annotator id '" + std::string(fields[5]) + "'", line_no);

    const std::string type(fields[1]);
    p.noop = type == "noop";
    if (p.noop) {
      pending.push_back(std::move(p));
      continue;
    }
    if (p.edit.o_end < p.edit.o_start)
      throw ValidationError("line " + std::to_string(line_no) + ": span end < start");
    const std::string correction(fields[2]);
    if (correction != "-NONE-") p.edit.c_tokens = split_whitespace(correction);
    p.edit.raw_type = type;
    if (p.edit.o_start == p.edit.o_end && p.edit.c_tokens.empty())
      throw ValidationError("line " + std::to_string(line_no) + ": edit changes nothing");
    p.edit.op = classify_operation(p.edit);
    // "R:VERB:SVA" -> VERB; unknown taxonomies map to OTHER.
    auto parts = type.find(':') == std::string::npos ? std::string_view(type)
                                                     : std::string_view(type).substr(2);
    auto colon = parts.find(':');
    auto et = parse_error_type(parts.substr(0, colon));
    p.edit.etype = et.value_or(ErrorType::OTHER);
    pending.push_back(std::move(p));
  }
  if (in_block) finish_block(out, words, pending, sid_prefix, block_index, block_line);
  return out;
}

std::string write_m2(const std::vector<AnnotatedSentence>& records) {
  std::ostringstream os;
  std::size_t i = 0;
  bool first = true;
  while (i < records.size()) {
    const std::string& sid = records[i].sentence.sid;
    if (!first) os << '\n';
    first = false;
    os << "S";
    for (const auto& t : records[i].sentence.tokens) os << ' ' << t.surface;
    os << '\n';
    for (; i < records.size() && records[i].sentence.sid == sid; ++i) {
      const auto& rec = records[i];
      if (rec.edits.empty()) {
        os << "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||" << rec.annotator << '\n';
        continue;
      }
      for (const Edit& e : rec.edits) {
        std::string type = e.raw_type;
        if (type.empty()) {
          type = operation_letter(e.op);
          type += ':';
          type += to_string(e.etype);
        }
        os << "A " << e.o_start << ' ' << e.o_end << kFieldSep << type << kFieldSep
           << (e.c_tokens.empty() ? std::string("-NONE-") : join(e.c_tokens, " ")) << kFieldSep
           << "REQUIRED" << kFieldSep << "-NONE-"
           << kFieldSep << rec.annotator << '\n';
      }
    }
  }
  return os.str();
}

// ---- parallel ------------------------------------------------------------

std::vector<AnnotatedSentence> parse_parallel(const std::vector<std::string>& original,
                                              const std::vector<std::string>& corrected,
                                              std::string_view sid_prefix) {
  if (original.size() != corrected.size())
    throw ValidationError("parallel corpus line counts differ: " +
                          std::to_string(original.size()) + " vs " +
                          std::to_string(corrected.size()));
  std::vector<AnnotatedSentence> out;
  out.reserve(original.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    auto orig = split_whitespace(original[i]);
    auto corr = split_whitespace(corrected[i]);
    AnnotatedSentence rec;
    try {
      rec.sentence = make_sentence(std::string(sid_prefix) + std::to_string(i), orig);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), i + 1);
    }
    rec.edits = align_edits(orig, corr);
    rec.sentence.gold_labels = spans_to_token_labels(orig.size(), rec.edits);
    out.push_back(std::move(rec));
  }
  return out;
}

// ---- vocabulary ----------------------------------------------------------

Vocab build_vocab(const std::vector<Sentence>& sentences, int min_count) {
  if (min_count < 1) throw ValidationError("min_count must be >= 1");
  if (sentences.empty()) throw ValidationError("cannot build a vocabulary from an empty corpus");
  std::unordered_map<std::string, int> counts;
  std::vector<std::string> order;
  Vocab vocab;
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) {
      std::string w = lowercase(t.surface);
      auto [it, inserted] = counts.emplace(w, 0);
      if (inserted) order.push_back(w);
      ++it->second;
      for (char32_t c : t.chars) vocab.add_char(c);
    }
  }
  for (const auto& w : order)
    if (counts[w] >= min_count) vocab.add_word(w);
  return vocab;
}

Sentence encode(const Sentence& sentence, const Vocab& vocab) {
  Sentence out = sentence;
  for (Token& t : out.tokens) {
    t.word_id = vocab.word_id(t.surface);
    t.char_ids.clear();
    t.char_ids.reserve(t.chars.size());
    for (char32_t c : t.chars) t.char_ids.push_back(vocab.char_id(c));
  }
  return out;
}

std::vector<AnnotatedSentence> select_annotator(const std::vector<AnnotatedSentence>& records,
                                                int annotator) {
  std::vector<AnnotatedSentence> out;
  std::size_t i = 0;
  while (i < records.size()) {
    std::size_t j = i;
    while (j < records.size() && records[j].sentence.sid == records[i].sentence.sid) ++j;
    std::size_t pick = i;
    for (std::size_t k = i; k < j; ++k) {
      if (records[k].annotator == annotator) {
        pick = k;
        break;
      }
      if (records[k].annotator < records[pick].annotator) pick = k;
    }
    out.push_back(records[pick]);
    i = j;
  }
  return out;
}

}  // namespace ged
