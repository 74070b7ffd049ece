#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ged {

enum class Label : std::uint8_t { Correct = 0, Incorrect = 1 };

enum class Operation : std::uint8_t { Missing = 0, Replacement = 1, Unnecessary = 2 };
inline constexpr std::size_t kNumOperations = 3;

// ERRANT-compatible POS-based error taxonomy (16 types).
enum class ErrorType : std::uint8_t {
  ADJ, ADV, CONJ, CONTR, DET, MORPH, NOUN, ORTH,
  OTHER, PART, PREP, PRON, PUNCT, SPELL, VERB, WO
};
inline constexpr std::size_t kNumErrorTypes = 16;

// Coarse part-of-speech tags used by the error-type rules and the fallback tagger.
enum class Pos : std::uint8_t {
  ADJ, ADV, CONJ, CONTR, DET, NOUN, NUM, PART, PREP, PRON, PUNCT, VERB, X
};

std::string_view to_string(Label l);
std::string_view to_string(Operation op);
std::string_view to_string(ErrorType t);
std::string_view to_string(Pos p);

// Single-letter operation prefix used in typed M2 output ("M", "R", "U").
char operation_letter(Operation op);

std::optional<ErrorType> parse_error_type(std::string_view s);
std::optional<Pos> parse_pos(std::string_view s);
std::optional<Operation> parse_operation_letter(char c);

const std::array<ErrorType, kNumErrorTypes>& all_error_types();
const std::array<Operation, kNumOperations>& all_operations();

// A span-based correction over the original token sequence.
// o_start/o_end are half-open token indices; c_tokens is the replacement.
struct Edit {
  int o_start = 0;
  int o_end = 0;
  std::vector<std::string> c_tokens;
  Operation op = Operation::Replacement;
  ErrorType etype = ErrorType::OTHER;
  // Free-form type string as read from M2 (e.g. "R:VERB:SVA"); empty for generated edits.
  std::string raw_type;

  bool operator==(const Edit&) const = default;
};

}  // namespace ged
