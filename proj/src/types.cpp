#include "ged/types.hpp"

namespace ged {

namespace {

constexpr std::array<std::string_view, kNumErrorTypes> kErrorTypeNames = {
    "ADJ", "ADV", "CONJ", "CONTR", "DET", "MORPH", "NOUN", "ORTH",
    "OTHER", "PART", "PREP", "PRON", "PUNCT", "SPELL", "VERB", "WO"};

constexpr std::array<std::string_view, 13> kPosNames = {
    "ADJ", "ADV", "CONJ", "CONTR", "DET", "NOUN", "NUM",
    "PART", "PREP", "PRON", "PUNCT", "VERB", "X"};

}  // namespace

std::string_view to_string(Label l) {
  return l == Label::Correct ? "C" : "I";
}

std::string_view to_string(Operation op) {
  switch (op) {
    case Operation::Missing: return "Missing";
    case Operation::Replacement: return "Replacement";
    case Operation::Unnecessary: return "Unnecessary";
  }
  return "?";
}

std::string_view to_string(ErrorType t) {
  return kErrorTypeNames[static_cast<std::size_t>(t)];
}

std::string_view to_string(Pos p) { return kPosNames[static_cast<std::size_t>(p)]; }

char operation_letter(Operation op) {
  switch (op) {
    case Operation::Missing: return 'M';
    case Operation::Replacement: return 'R';
    case Operation::Unnecessary: return 'U';
  }
  return '?';
}

std::optional<ErrorType> parse_error_type(std::string_view s) {
  for (std::size_t i = 0; i < kErrorTypeNames.size(); ++i)
    if (kErrorTypeNames[i] == s) return static_cast<ErrorType>(i);
  return std::nullopt;
}

std::optional<Pos> parse_pos(std::string_view s) {
  for (std::size_t i = 0; i < kPosNames.size(); ++i)
    if (kPosNames[i] == s) return static_cast<Pos>(i);
  return std::nullopt;
}

std::optional<Operation> parse_operation_letter(char c) {
  switch (c) {
    case 'M': return Operation::Missing;
    case 'R': return Operation::Replacement;
    case 'U': return Operation::Unnecessary;
    default: return std::nullopt;
  }
}

const std::array<ErrorType, kNumErrorTypes>& all_error_types() {
  static const std::array<ErrorType, kNumErrorTypes> types = [] {
    std::array<ErrorType, kNumErrorTypes> a{};
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = static_cast<ErrorType>(i);
    return a;
  }();
  return types;
}

const std::array<Operation, kNumOperations>& all_operations() {
  static const std::array<Operation, kNumOperations> ops = {
      Operation::Missing, Operation::Replacement, Operation::Unnecessary};
  return ops;
}

}  // namespace ged
