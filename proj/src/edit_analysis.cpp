#include "ged/edit_analysis.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>

#include "ged/error.hpp"

namespace ged {

namespace {

constexpr double kTieEps = 1e-9;

bool nearly(double a, double b) { return std::fabs(a - b) < kTieEps; }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

// ---- costs ---------------------------------------------------------------

int char_edit_distance(std::u32string_view a, std::u32string_view b) {
  const std::size_t m = a.size(), n = b.size();
  std::vector<std::vector<int>> d(m + 1, std::vector<int>(n + 1, 0));
  for (std::size_t i = 0; i <= m; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= n; ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      const int sub = a[i - 1] == b[j - 1] ? 0 : 1;
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + sub});
      if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1])
        d[i][j] = std::min(d[i][j], d[i - 2][j - 2] + 1);
    }
  }
  return d[m][n];
}

std::string stem(std::string_view word) {
  static const std::array<std::string_view, 16> kSuffixes = {
      "ations", "ation", "ness", "ment", "ings", "ing", "ies", "ied",
      "est",    "ers",   "ed",   "er",   "es",   "ly",  "s",   "e"};
  std::string w = lowercase(word);
  for (std::string_view suf : kSuffixes) {
    if (ends_with(w, suf) && w.size() - suf.size() >= 3) return w.substr(0, w.size() - suf.size());
  }
  return w;
}

double substitution_cost(std::string_view a, std::string_view b) {
  const std::string la = lowercase(a), lb = lowercase(b);
  if (la == lb) return 0.5;
  const std::string sa = stem(la), sb = stem(lb);
  if (sa.size() >= 3 && sa == sb) return 0.5;
  const auto ca = utf8_decode(la), cb = utf8_decode(lb);
  const std::size_t longest = std::max(ca.size(), cb.size());
  if (static_cast<std::size_t>(char_edit_distance(ca, cb)) <= (longest + 1) / 2) return 1.0;
  return 2.0;
}

// ---- alignment -----------------------------------------------------------

AlignmentScript align(const std::vector<std::string>& orig, const std::vector<std::string>& corr) {
  const std::size_t m = orig.size(), n = corr.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(m + 1, std::vector<double>(n + 1, kInf));
  d[0][0] = 0.0;

  auto sub_cost = [&](std::size_t i, std::size_t j) {
    return orig[i] == corr[j] ? 0.0 : substitution_cost(orig[i], corr[j]);
  };
  auto can_transpose = [&](std::size_t i, std::size_t j) {
    return i >= 2 && j >= 2 && orig[i - 2] != orig[i - 1] && orig[i - 2] == corr[j - 1] &&
           orig[i - 1] == corr[j - 2];
  };

  for (std::size_t i = 0; i <= m; ++i) {
    for (std::size_t j = 0; j <= n; ++j) {
      double best = d[i][j];
      if (i > 0 && j > 0) best = std::min(best, d[i - 1][j - 1] + sub_cost(i - 1, j - 1));
      if (i > 0) best = std::min(best, d[i - 1][j] + 1.0);
      if (j > 0) best = std::min(best, d[i][j - 1] + 1.0);
      if (can_transpose(i, j)) best = std::min(best, d[i - 2][j - 2] + 1.0);
      d[i][j] = best;
    }
  }

  AlignmentScript script;
  script.cost = d[m][n];
  std::size_t i = m, j = n;
  while (i > 0 || j > 0) {
    const double here = d[i][j];
    if (i > 0 && j > 0 && orig[i - 1] == corr[j - 1] && nearly(d[i - 1][j - 1], here)) {
      script.steps.push_back({StepKind::Match, int(i - 1), int(j - 1), 1, 0.0});
      --i, --j;
    } else if (can_transpose(i, j) && nearly(d[i - 2][j - 2] + 1.0, here)) {
      script.steps.push_back({StepKind::Transpose, int(i - 2), int(j - 2), 2, 1.0});
      i -= 2, j -= 2;
    } else if (i > 0 && j > 0 && orig[i - 1] != corr[j - 1] &&
               nearly(d[i - 1][j - 1] + sub_cost(i - 1, j - 1), here)) {
      script.steps.push_back(
          {StepKind::Substitute, int(i - 1), int(j - 1), 1, sub_cost(i - 1, j - 1)});
      --i, --j;
    } else if (i > 0 && nearly(d[i - 1][j] + 1.0, here)) {
      script.steps.push_back({StepKind::Delete, int(i - 1), int(j), 1, 1.0});
      --i;
    } else {
      script.steps.push_back({StepKind::Insert, int(i), int(j - 1), 1, 1.0});
      --j;
    }
  }
  std::reverse(script.steps.begin(), script.steps.end());
  return script;
}

std::vector<std::string> apply_script(const AlignmentScript& script,
                                      const std::vector<std::string>& orig,
                                      const std::vector<std::string>& corr) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("inconsistent alignment script: ") + what);
  };
  for (const AlignStep& s : script.steps) {
    need(s.orig_pos == static_cast<int>(i), "step position does not follow its predecessor");
    switch (s.kind) {
      case StepKind::Match:
        need(i < orig.size(), "match past end");
        need(static_cast<std::size_t>(s.corr_pos) < corr.size() &&
                 orig[i] == corr[static_cast<std::size_t>(s.corr_pos)],
             "match of unequal tokens");
        out.push_back(orig[i++]);
        break;
      case StepKind::Substitute:
        need(i < orig.size() && static_cast<std::size_t>(s.corr_pos) < corr.size(),
             "substitute past end");
        out.push_back(corr[static_cast<std::size_t>(s.corr_pos)]);
        ++i;
        break;
      case StepKind::Delete:
        need(i < orig.size(), "delete past end");
        ++i;
        break;
      case StepKind::Insert:
        need(static_cast<std::size_t>(s.corr_pos) < corr.size(), "insert past end");
        out.push_back(corr[static_cast<std::size_t>(s.corr_pos)]);
        break;
      case StepKind::Transpose:
        need(i + 1 < orig.size(), "transpose past end");
        out.push_back(orig[i + 1]);
        out.push_back(orig[i]);
        i += 2;
        break;
    }
  }
  need(i == orig.size(), "script does not consume the original");
  return out;
}

std::vector<Edit> script_to_edits(const AlignmentScript& script,
                                  const std::vector<std::string>& corr) {
  std::vector<Edit> edits;
  bool open = false;
  Edit run;
  auto flush = [&] {
    if (open) {
      run.op = classify_operation(run);
      edits.push_back(std::move(run));
      run = Edit{};
      open = false;
    }
  };
  auto single = [&](int start, int end, std::vector<std::string> c) {
    Edit e;
    e.o_start = start;
    e.o_end = end;
    e.c_tokens = std::move(c);
    e.op = classify_operation(e);
    edits.push_back(std::move(e));
  };
  for (const AlignStep& s : script.steps) {
    const auto cj = static_cast<std::size_t>(s.corr_pos);
    switch (s.kind) {
      case StepKind::Match:
        flush();
        break;
      case StepKind::Substitute:
        flush();
        single(s.orig_pos, s.orig_pos + 1, {corr[cj]});
        break;
      case StepKind::Transpose:
        flush();
        single(s.orig_pos, s.orig_pos + 2, {corr[cj], corr[cj + 1]});
        break;
      case StepKind::Delete:
        if (!open) {
          open = true;
          run.o_start = run.o_end = s.orig_pos;
        }
        run.o_end = s.orig_pos + 1;
        break;
      case StepKind::Insert:
        if (!open) {
          open = true;
          run.o_start = run.o_end = s.orig_pos;
        }
        run.c_tokens.push_back(corr[cj]);
        break;
    }
  }
  flush();
  return edits;
}

std::vector<Edit> align_edits(const std::vector<std::string>& orig,
                              const std::vector<std::string>& corr) {
  return script_to_edits(align(orig, corr), corr);
}

// ---- classification ------------------------------------------------------

Operation classify_operation(int o_start, int o_end, const std::vector<std::string>& c_tokens) {
  const bool orig_empty = o_end <= o_start;
  if (orig_empty && c_tokens.empty()) throw ValidationError("edit with both sides empty");
  if (orig_empty) return Operation::Missing;
  if (c_tokens.empty()) return Operation::Unnecessary;
  return Operation::Replacement;
}

Lexicon::Lexicon(const std::vector<std::string>& words) {
  for (const auto& w : words) words_.insert(lowercase(w));
}

Lexicon Lexicon::from_text(std::string_view content) {
  std::vector<std::string> words;
  for (const auto& line : split_lines(content))
    for (auto& w : split_whitespace(line)) words.push_back(std::move(w));
  return Lexicon(words);
}

bool Lexicon::contains(std::string_view word) const { return words_.count(lowercase(word)) > 0; }

namespace {

struct ClosedClass {
  Pos pos;
  std::vector<std::string_view> words;
};

const std::vector<ClosedClass>& closed_classes() {
  static const std::vector<ClosedClass> classes = {
      {Pos::DET, {"a", "an", "the", "this", "that", "these", "those", "some", "any", "each",
                  "every", "no", "another", "my", "your", "its", "our", "their", "much", "many",
                  "few", "several", "all", "both", "either", "neither"}},
      {Pos::PREP, {"in", "on", "at", "by", "for", "with", "about", "against", "between", "into",
                   "through", "during", "before", "after", "above", "below", "to", "from", "of",
                   "off", "over", "under", "around", "among", "without", "within", "along",
                   "across", "behind", "beyond", "near", "since", "until", "upon", "toward",
                   "towards", "onto", "like", "than", "per", "via", "despite"}},
      {Pos::PRON, {"i", "me", "you", "he", "him", "she", "her", "it", "we", "us", "they", "them",
                   "myself", "yourself", "himself", "herself", "itself", "ourselves",
                   "yourselves", "themselves", "who", "whom", "whose", "which", "what", "mine",
                   "yours", "hers", "ours", "theirs", "his", "someone", "something", "anyone",
                   "anything", "everyone", "everything", "nobody", "nothing", "one"}},
      {Pos::CONJ, {"and", "or", "but", "nor", "so", "yet", "because", "although", "though",
                   "while", "if", "unless", "whereas", "whether", "as", "when", "where"}},
      {Pos::PART, {"not", "up", "out"}},
      {Pos::CONTR, {"n't", "'ll", "'ve", "'re", "'m", "'s", "'d"}},
      {Pos::VERB, {"be", "am", "is", "are", "was", "were", "been", "being", "have", "has", "had",
                   "having", "do", "does", "did", "done", "doing", "will", "would", "shall",
                   "should", "can", "could", "may", "might", "must", "go", "goes", "went", "get",
                   "gets", "got", "make", "makes", "made", "take", "takes", "took", "see", "saw",
                   "seen", "know", "knew", "known", "think", "thought", "say", "said", "come",
                   "came", "give", "gave", "given", "want", "wants", "need", "needs", "eat",
                   "eats", "ate", "eaten", "run", "runs", "ran"}},
      {Pos::ADV, {"very", "too", "also", "often", "always", "never", "here", "there", "now",
                  "then", "just", "still", "already", "quite", "really", "only", "even", "ever",
                  "again", "soon", "yesterday", "today", "tomorrow", "well", "almost", "rather",
                  "sometimes", "usually"}},
  };
  return classes;
}

bool is_punct(std::string_view w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) {
    const auto u = static_cast<unsigned char>(c);
    return u < 0x80 && !std::isalnum(u);
  });
}

bool is_contraction(std::string_view lower) {
  static constexpr std::array<std::string_view, 6> kContr = {"n't", "'ll", "'ve", "'re", "'m", "'s"};
  return std::any_of(kContr.begin(), kContr.end(),
                     [&](std::string_view c) { return ends_with(lower, c); });
}

}  // namespace

Pos fallback_pos(std::string_view word) {
  const std::string w = lowercase(word);
  if (is_punct(w)) return Pos::PUNCT;
  if (std::all_of(w.begin(), w.end(),
                  [](char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == ','; }))
    return Pos::NUM;
  for (const auto& cls : closed_classes())
    for (std::string_view cw : cls.words)
      if (cw == w) return cls.pos;
  if (is_contraction(w) || ends_with(w, "'d")) return Pos::CONTR;
  // inflections of listed verbs: sees, goes, seeing
  for (std::string_view suf : {"s", "es", "ing"}) {
    if (w.size() <= suf.size() + 1 || !ends_with(w, suf)) continue;
    const std::string_view base = std::string_view(w).substr(0, w.size() - suf.size());
    for (const auto& cls : closed_classes())
      if (cls.pos == Pos::VERB &&
          std::find(cls.words.begin(), cls.words.end(), base) != cls.words.end())
        return Pos::VERB;
  }
  if (w.size() > 4 && ends_with(w, "ly")) return Pos::ADV;
  if (w.size() > 4 && (ends_with(w, "ing") || ends_with(w, "ed"))) return Pos::VERB;
  if (w.size() > 4 && (ends_with(w, "ize") || ends_with(w, "ise") || ends_with(w, "ify")))
    return Pos::VERB;
  for (std::string_view suf : {"able", "ible", "ful", "ous", "ive", "less", "ish", "ical", "ic"})
    if (w.size() > suf.size() + 2 && ends_with(w, suf)) return Pos::ADJ;
  return Pos::NOUN;
}

std::vector<Pos> fallback_tag(const std::vector<std::string>& words) {
  std::vector<Pos> tags;
  tags.reserve(words.size());
  for (const auto& w : words) tags.push_back(fallback_pos(w));
  return tags;
}

namespace {

std::string orth_key(const std::vector<std::string>& toks) {
  std::string key;
  for (const auto& t : toks)
    for (char c : lowercase(t))
      if (c != '-' && c != ' ') key.push_back(c);
  return key;
}

std::vector<std::string> lowered_sorted(const std::vector<std::string>& toks) {
  std::vector<std::string> out;
  for (const auto& t : toks) out.push_back(lowercase(t));
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<ErrorType> pos_to_type(Pos p) {
  switch (p) {
    case Pos::ADJ: return ErrorType::ADJ;
    case Pos::ADV: return ErrorType::ADV;
    case Pos::CONJ: return ErrorType::CONJ;
    case Pos::DET: return ErrorType::DET;
    case Pos::NOUN: return ErrorType::NOUN;
    case Pos::PART: return ErrorType::PART;
    case Pos::PREP: return ErrorType::PREP;
    case Pos::PRON: return ErrorType::PRON;
    case Pos::PUNCT: return ErrorType::PUNCT;
    case Pos::VERB: return ErrorType::VERB;
    default: return std::nullopt;
  }
}

}  // namespace

ErrorType classify_pos_type(const Edit& edit, const std::vector<std::string>& orig_tokens,
                            const std::vector<Pos>& orig_pos, const std::vector<Pos>& corr_pos,
                            const Lexicon& lexicon) {
  const auto first = orig_tokens.begin() + edit.o_start;
  const std::vector<std::string> o(first, orig_tokens.begin() + edit.o_end);
  const std::vector<std::string>& c = edit.c_tokens;
  const Operation op = classify_operation(edit);

  // (1) case / hyphen / whitespace only
  if (!o.empty() && !c.empty() && o != c && orth_key(o) == orth_key(c)) return ErrorType::ORTH;

  // (2) permutation of two or more tokens
  if (o.size() >= 2 && o.size() == c.size() && o != c && lowered_sorted(o) == lowered_sorted(c))
    return ErrorType::WO;

  const bool one_to_one = o.size() == 1 && c.size() == 1;
  // (3) non-word close to its correction
  if (one_to_one && !lexicon.empty() && !lexicon.contains(o[0]) &&
      char_edit_distance(utf8_decode(lowercase(o[0])), utf8_decode(lowercase(c[0]))) <= 2)
    return ErrorType::SPELL;

  // (4) same stem, different inflection and coarse POS
  if (one_to_one) {
    const std::string so = stem(o[0]);
    const Pos po = orig_pos.at(static_cast<std::size_t>(edit.o_start));
    if (so.size() >= 3 && so == stem(c[0]) && lowercase(o[0]) != lowercase(c[0]) &&
        po != corr_pos.at(0))
      return ErrorType::MORPH;
  }

  // (5) one shared coarse POS on the relevant side
  std::vector<Pos> side;
  if (op == Operation::Unnecessary)
    side.assign(orig_pos.begin() + edit.o_start, orig_pos.begin() + edit.o_end);
  else
    side = corr_pos;
  if (!side.empty() && std::all_of(side.begin(), side.end(), [&](Pos p) { return p == side[0]; }))
    if (auto t = pos_to_type(side[0])) return *t;

  // (6) contractions on either side
  auto has_contr = [](const std::vector<std::string>& toks) {
    return std::any_of(toks.begin(), toks.end(),
                       [](const std::string& t) { return is_contraction(lowercase(t)); });
  };
  if (has_contr(o) || has_contr(c)) return ErrorType::CONTR;

  return ErrorType::OTHER;
}

void annotate_records(std::vector<AnnotatedSentence>& records, const Lexicon& lexicon) {
  for (auto& rec : records) {
    std::vector<std::string> orig;
    orig.reserve(rec.sentence.size());
    bool tagged = true;
    for (const auto& t : rec.sentence.tokens) {
      orig.push_back(t.surface);
      tagged = tagged && t.pos.has_value();
    }
    std::vector<Pos> orig_pos;
    if (tagged) {
      for (const auto& t : rec.sentence.tokens) orig_pos.push_back(*t.pos);
    } else {
      orig_pos = fallback_tag(orig);
      for (std::size_t i = 0; i < orig_pos.size(); ++i) rec.sentence.tokens[i].pos = orig_pos[i];
    }
    for (Edit& e : rec.edits) {
      e.op = classify_operation(e);
      e.etype = classify_pos_type(e, orig, orig_pos, fallback_tag(e.c_tokens), lexicon);
      e.raw_type.clear();
    }
    rec.sentence.gold_labels = spans_to_token_labels(rec.sentence.size(), rec.edits);
  }
}

std::vector<AnnotatedSentence> annotate_corpus(const std::vector<std::string>& original,
                                               const std::vector<std::string>& corrected,
                                               const Lexicon& lexicon,
                                               std::string_view sid_prefix) {
  auto records = parse_parallel(original, corrected, sid_prefix);
  annotate_records(records, lexicon);
  return records;
}

std::string write_typed_m2(const std::vector<AnnotatedSentence>& records) {
  std::vector<AnnotatedSentence> copy = records;
  for (auto& rec : copy)
    for (auto& e : rec.edits) e.raw_type.clear();
  return write_m2(copy);
}

}  // namespace ged
