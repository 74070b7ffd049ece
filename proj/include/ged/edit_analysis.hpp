#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ged/corpus.hpp"
#include "ged/types.hpp"

namespace ged {

// ---- alignment -----------------------------------------------------------

enum class StepKind { Match, Substitute, Insert, Delete, Transpose };

// One primitive alignment step. `orig_pos`/`corr_pos` are the positions the
// step starts at; Transpose consumes `length` tokens on both sides.
struct AlignStep {
  StepKind kind;
  int orig_pos;
  int corr_pos;
  int length = 1;
  double cost = 0.0;
  bool operator==(const AlignStep&) const = default;
};

struct AlignmentScript {
  std::vector<AlignStep> steps;
  double cost = 0.0;
};

// Substitution cost between two different tokens: 0.5 when they are equal
// ignoring case or share a stem, 1 when orthographically close, 2 otherwise.
double substitution_cost(std::string_view a, std::string_view b);

// Suffix-stripped stem (stem length kept >= 3), lowercased.
std::string stem(std::string_view word);

// Minimum-cost alignment. Ties prefer Match, Substitute, Transpose, Delete,
// Insert in that order while backtracking from the end.
AlignmentScript align(const std::vector<std::string>& orig, const std::vector<std::string>& corr);

// Replays a script on `orig`; throws ValidationError if the script is inconsistent.
std::vector<std::string> apply_script(const AlignmentScript& script,
                                      const std::vector<std::string>& orig,
                                      const std::vector<std::string>& corr);

// Edits from a script. Substitute and Transpose steps each form their own
// edit; maximal runs of Insert/Delete steps merge into one edit.
std::vector<Edit> script_to_edits(const AlignmentScript& script,
                                  const std::vector<std::string>& corr);

// align + script_to_edits; operations are classified, types left OTHER.
std::vector<Edit> align_edits(const std::vector<std::string>& orig,
                              const std::vector<std::string>& corr);

// ---- classification ------------------------------------------------------

// Throws ValidationError when both sides are empty.
Operation classify_operation(int o_start, int o_end, const std::vector<std::string>& c_tokens);
inline Operation classify_operation(const Edit& e) {
  return classify_operation(e.o_start, e.o_end, e.c_tokens);
}

// Word list for the spelling rule. An empty lexicon disables that rule.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(const std::vector<std::string>& words);
  static Lexicon from_text(std::string_view content);

  bool empty() const { return words_.empty(); }
  bool contains(std::string_view word) const;  // case-folded
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

// Closed-class lexicon plus suffix heuristics; unknown words default to NOUN.
Pos fallback_pos(std::string_view word);
std::vector<Pos> fallback_tag(const std::vector<std::string>& words);

// Character-level Damerau-Levenshtein (optimal string alignment) distance.
int char_edit_distance(std::u32string_view a, std::u32string_view b);

// Rule cascade: ORTH, WO, SPELL, MORPH, shared-POS, CONTR, OTHER.
// `orig_pos` covers the original sentence, `corr_pos` the edit's c_tokens.
ErrorType classify_pos_type(const Edit& edit, const std::vector<std::string>& orig_tokens,
                            const std::vector<Pos>& orig_pos, const std::vector<Pos>& corr_pos,
                            const Lexicon& lexicon);

// Aligns each pair, classifies operation and type, and fills gold labels.
// POS tags on the original tokens are used when present, otherwise the
// fallback tagger fills them.
std::vector<AnnotatedSentence> annotate_corpus(const std::vector<std::string>& original,
                                               const std::vector<std::string>& corrected,
                                               const Lexicon& lexicon,
                                               std::string_view sid_prefix = "");

// Types the edits of already-parsed records in place (operation from spans,
// type from the cascade).
void annotate_records(std::vector<AnnotatedSentence>& records, const Lexicon& lexicon);

// Typed M2 output: type field is "<op letter>:<TYPE>".
std::string write_typed_m2(const std::vector<AnnotatedSentence>& records);

}  // namespace ged
