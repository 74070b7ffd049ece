#include "ged/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "ged/error.hpp"

namespace ged {

EvalCounts& EvalCounts::operator+=(const EvalCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  for (std::size_t i = 0; i < by_type.size(); ++i) {
    by_type[i].detected += o.by_type[i].detected;
    by_type[i].total += o.by_type[i].total;
  }
  for (std::size_t i = 0; i < by_operation.size(); ++i) {
    by_operation[i].detected += o.by_operation[i].detected;
    by_operation[i].total += o.by_operation[i].total;
  }
  return *this;
}

EvalCounts operator+(EvalCounts a, const EvalCounts& b) { return a += b; }

void accumulate(EvalCounts& counts, const std::vector<Label>& gold, const std::vector<Label>& pred,
                const std::vector<std::optional<TokenErrorInfo>>* types) {
  if (gold.size() != pred.size())
    throw ValidationError("gold/prediction length mismatch: " + std::to_string(gold.size()) +
                          " vs " + std::to_string(pred.size()));
  if (types && types->size() != gold.size())
    throw ValidationError("token type annotation length mismatch");
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool g = gold[i] == Label::Incorrect;
    const bool p = pred[i] == Label::Incorrect;
    if (g && p) ++counts.tp;
    else if (!g && p) ++counts.fp;
    else if (g && !p) ++counts.fn;
    else ++counts.tn;
    if (g && types && (*types)[i]) {
      auto& t = counts.by_type[static_cast<std::size_t>((*types)[i]->etype)];
      auto& o = counts.by_operation[static_cast<std::size_t>((*types)[i]->op)];
      ++t.total;
      ++o.total;
      if (p) {
        ++t.detected;
        ++o.detected;
      }
    }
  }
}

EvalCounts accumulate(const std::vector<Label>& gold, const std::vector<Label>& pred,
                      const std::vector<std::optional<TokenErrorInfo>>* types) {
  EvalCounts c;
  accumulate(c, gold, pred, types);
  return c;
}

double f_beta(double precision, double recall, double beta) {
  const double b2 = beta * beta;
  const double denom = b2 * precision + recall;
  if (denom == 0.0) return 0.0;
  return (1.0 + b2) * precision * recall / denom;
}

Scores f_beta(const EvalCounts& c, double beta) {
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  Scores s;
  s.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  s.recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  s.f = f_beta(s.precision, s.recall, beta);
  return s;
}

namespace {

RecallRow make_row(std::string name, const TypeTally& t) {
  RecallRow r;
  r.name = std::move(name);
  r.detected = t.detected;
  r.total = t.total;
  r.frequency = t.total;
  if (t.total > 0) r.recall = static_cast<double>(t.detected) / static_cast<double>(t.total);
  return r;
}

}  // namespace

TypedRecallReport recall_by_type(const EvalCounts& counts) {
  TypedRecallReport rep;
  TypeTally all;
  for (ErrorType t : all_error_types()) {
    const auto& tally = counts.by_type[static_cast<std::size_t>(t)];
    rep.types.push_back(make_row(std::string(to_string(t)), tally));
    all.detected += tally.detected;
    all.total += tally.total;
  }
  for (Operation op : all_operations())
    rep.operations.push_back(
        make_row(std::string(to_string(op)), counts.by_operation[static_cast<std::size_t>(op)]));
  rep.overall = make_row("ALL", all);
  return rep;
}

TypedRecallReport aggregate_recall(const std::vector<EvalCounts>& datasets, Averaging mode) {
  EvalCounts pooled;
  for (const auto& d : datasets) pooled += d;
  TypedRecallReport rep = recall_by_type(pooled);
  if (mode == Averaging::Micro) return rep;

  auto macro = [&](RecallRow& row, auto tally_of) {
    double sum = 0.0;
    int n = 0;
    for (const auto& d : datasets) {
      const TypeTally& t = tally_of(d);
      if (t.total == 0) continue;
      sum += static_cast<double>(t.detected) / static_cast<double>(t.total);
      ++n;
    }
    row.recall = n ? std::optional<double>(sum / n) : std::nullopt;
  };
  for (std::size_t i = 0; i < kNumErrorTypes; ++i)
    macro(rep.types[i], [i](const EvalCounts& d) -> const TypeTally& { return d.by_type[i]; });
  for (std::size_t i = 0; i < kNumOperations; ++i)
    macro(rep.operations[i],
          [i](const EvalCounts& d) -> const TypeTally& { return d.by_operation[i]; });
  std::vector<TypeTally> overall(datasets.size());
  for (std::size_t k = 0; k < datasets.size(); ++k)
    for (const auto& t : datasets[k].by_type) {
      overall[k].detected += t.detected;
      overall[k].total += t.total;
    }
  std::size_t k = 0;
  macro(rep.overall, [&](const EvalCounts&) -> const TypeTally& { return overall[k++]; });
  return rep;
}

ReportFormat parse_report_format(const std::string& s) {
  if (s == "tsv") return ReportFormat::Tsv;
  if (s == "table") return ReportFormat::Table;
  throw ConfigError("unknown report format '" + s + "' (expected tsv or table)");
}

namespace {

std::string pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
  return buf;
}

std::string render(const std::vector<std::vector<std::string>>& cells, ReportFormat format) {
  std::ostringstream os;
  if (format == ReportFormat::Tsv) {
    for (const auto& row : cells) os << join(row, "\t") << '\n';
    return os.str();
  }
  std::vector<std::size_t> width;
  for (const auto& row : cells) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0)
        os << std::left << std::setw(static_cast<int>(width[c])) << row[c];
      else
        os << "  " << std::right << std::setw(static_cast<int>(width[c])) << row[c];
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace

std::string render_scores(const std::vector<DatasetScores>& rows, ReportFormat format) {
  std::vector<std::vector<std::string>> cells{{"dataset", "P", "R", "F0.5"}};
  for (const auto& r : rows)
    cells.push_back({r.name, pct(r.scores.precision), pct(r.scores.recall), pct(r.scores.f)});
  return render(cells, format);
}

std::string render_recall(const TypedRecallReport& report, ReportFormat format) {
  std::vector<std::vector<std::string>> cells{{"type", "detected", "total", "recall", "frequency"}};
  auto add = [&](const RecallRow& r) {
    cells.push_back({r.name, std::to_string(r.detected), std::to_string(r.total),
                     r.recall ? pct(*r.recall) : "-", std::to_string(r.frequency)});
  };
  for (const auto& r : report.types) add(r);
  for (const auto& r : report.operations) add(r);
  return render(cells, format);
}

std::vector<DatasetScores> parse_scores_tsv(const std::string& tsv) {
  std::vector<DatasetScores> out;
  const auto lines = split_lines(tsv);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(lines[i]);
    std::string cell;
    while (std::getline(ss, cell, '\t')) f.push_back(cell);
    if (f.size() != 4) throw ParseError("expected 4 tab-separated fields", i + 1);
    DatasetScores d;
    d.name = f[0];
    d.scores.precision = std::stod(f[1]) / 100.0;
    d.scores.recall = std::stod(f[2]) / 100.0;
    d.scores.f = std::stod(f[3]) / 100.0;
    out.push_back(d);
  }
  return out;
}

}  // namespace ged
