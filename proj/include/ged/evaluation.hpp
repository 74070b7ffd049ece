#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ged/corpus.hpp"
#include "ged/types.hpp"

namespace ged {

struct TypeTally {
  std::uint64_t detected = 0;
  std::uint64_t total = 0;
  bool operator==(const TypeTally&) const = default;
};

// Token-level confusion counts with Incorrect as the positive class, plus
// detected/total tallies of gold-Incorrect tokens by error type and operation.
struct EvalCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::array<TypeTally, kNumErrorTypes> by_type{};
  std::array<TypeTally, kNumOperations> by_operation{};

  std::uint64_t total() const { return tp + fp + fn + tn; }
  EvalCounts& operator+=(const EvalCounts& o);
  bool operator==(const EvalCounts&) const = default;
};

EvalCounts operator+(EvalCounts a, const EvalCounts& b);

// Adds one sentence to `counts`. `types` (optional) gives each token's
// (operation, type); typed tallies only count gold-Incorrect tokens that carry one.
// Throws ValidationError on length mismatch.
void accumulate(EvalCounts& counts, const std::vector<Label>& gold, const std::vector<Label>& pred,
                const std::vector<std::optional<TokenErrorInfo>>* types = nullptr);
EvalCounts accumulate(const std::vector<Label>& gold, const std::vector<Label>& pred,
                      const std::vector<std::optional<TokenErrorInfo>>* types = nullptr);

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

// F_beta = (1+b^2) P R / (b^2 P + R); every 0/0 is taken as 0.
double f_beta(double precision, double recall, double beta);
Scores f_beta(const EvalCounts& counts, double beta = 0.5);

struct RecallRow {
  std::string name;
  std::uint64_t detected = 0;
  std::uint64_t total = 0;
  std::optional<double> recall;  // undefined when total == 0
  std::uint64_t frequency = 0;
};

struct TypedRecallReport {
  std::vector<RecallRow> types;       // 16 rows, taxonomy order
  std::vector<RecallRow> operations;  // Missing, Replacement, Unnecessary
  RecallRow overall;
};

TypedRecallReport recall_by_type(const EvalCounts& counts);

// Cross-dataset aggregation. Micro sums tallies before dividing; macro
// averages the per-dataset recalls of datasets where the type occurs.
enum class Averaging { Micro, Macro };
TypedRecallReport aggregate_recall(const std::vector<EvalCounts>& datasets,
                                   Averaging mode = Averaging::Micro);

enum class ReportFormat { Tsv, Table };
ReportFormat parse_report_format(const std::string& s);  // "tsv" | "table"

struct DatasetScores {
  std::string name;
  Scores scores;  // fractions in [0, 1]; rendered as percentages
};

// Per-dataset P / R / F0.5 rows, two decimals.
std::string render_scores(const std::vector<DatasetScores>& rows, ReportFormat format);
// Typed recall rows (16 types, then 3 operations), two decimals; "-" for undefined.
std::string render_recall(const TypedRecallReport& report, ReportFormat format);

// Reads back a TSV produced by render_scores.
std::vector<DatasetScores> parse_scores_tsv(const std::string& tsv);

}  // namespace ged
