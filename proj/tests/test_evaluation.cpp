#include "doctest.h"

#include <cmath>

#include "ged/error.hpp"
#include "ged/evaluation.hpp"

using namespace ged;

namespace {

std::vector<Label> L(const std::string& pattern) {
  std::vector<Label> out;
  for (char c : pattern) out.push_back(c == 'I' ? Label::Incorrect : Label::Correct);
  return out;
}

std::optional<TokenErrorInfo> T(ErrorType t, Operation op = Operation::Replacement) {
  return TokenErrorInfo{op, t};
}

}  // namespace

TEST_CASE("accumulate") {
  const EvalCounts c = accumulate(L("CIC"), L("IIC"));
  CHECK(c.tp == 1);
  CHECK(c.fp == 1);
  CHECK(c.fn == 0);
  CHECK(c.tn == 1);
  const EvalCounts all = accumulate(L("CCCC"), L("CCCC"));
  CHECK(all.tn == 4);
  CHECK(all.total() == 4);
  CHECK_THROWS_AS(accumulate(L("CC"), L("C")), ValidationError);

  const std::vector<std::optional<TokenErrorInfo>> types = {
      std::nullopt, T(ErrorType::DET), std::nullopt, std::nullopt, T(ErrorType::NOUN)};
  const EvalCounts typed = accumulate(L("CICCI"), L("CICCC"), &types);
  CHECK(typed.by_type[static_cast<std::size_t>(ErrorType::DET)] == TypeTally{1, 1});
  CHECK(typed.by_type[static_cast<std::size_t>(ErrorType::NOUN)] == TypeTally{0, 1});
}

TEST_CASE("f_beta") {
  CHECK(f_beta(0.4655, 0.3058, 0.5) * 100 == doctest::Approx(42.15).epsilon(0.0005));
  CHECK(std::fabs(f_beta(46.55, 30.58, 0.5) - 42.15) <= 0.02);
  CHECK(std::fabs(f_beta(64.96, 38.89, 0.5) - 57.28) <= 0.02);
  CHECK(std::fabs(f_beta(72.84, 22.83, 0.5) - 50.65) <= 0.02);
  for (double x : {0.1, 0.37, 0.9})
    for (double b : {0.5, 1.0, 2.0}) CHECK(f_beta(x, x, b) == doctest::Approx(x));
  CHECK(f_beta(0.0, 0.0, 0.5) == 0.0);
  const Scores empty = f_beta(EvalCounts{}, 0.5);
  CHECK(empty.precision == 0.0);
  CHECK(empty.recall == 0.0);
  CHECK(empty.f == 0.0);
  EvalCounts c;
  c.tp = 3;
  c.fp = 1;
  c.fn = 3;
  const Scores s = f_beta(c, 0.5);
  CHECK(s.precision == 0.75);
  CHECK(s.recall == 0.5);
  CHECK(s.f == doctest::Approx(1.25 * 0.375 / (0.25 * 0.75 + 0.5)));
  CHECK_THROWS_AS(f_beta(c, 0.0), ValidationError);
}

TEST_CASE("recall by type") {
  EvalCounts c;
  c.by_type[static_cast<std::size_t>(ErrorType::DET)] = {1, 2};
  c.by_type[static_cast<std::size_t>(ErrorType::NOUN)] = {1, 1};
  const auto rep = recall_by_type(c);
  REQUIRE(rep.types.size() == 16);
  CHECK(rep.operations.size() == 3);
  CHECK(*rep.types[static_cast<std::size_t>(ErrorType::DET)].recall == 0.5);
  CHECK(*rep.types[static_cast<std::size_t>(ErrorType::NOUN)].recall == 1.0);
  CHECK(*rep.overall.recall == doctest::Approx(2.0 / 3.0));
  CHECK_FALSE(rep.types[static_cast<std::size_t>(ErrorType::ADJ)].recall.has_value());

  EvalCounts a, b;
  a.by_type[static_cast<std::size_t>(ErrorType::DET)] = {1, 2};
  b.by_type[static_cast<std::size_t>(ErrorType::DET)] = {3, 4};
  const auto micro = aggregate_recall({a, b});
  CHECK(*micro.types[static_cast<std::size_t>(ErrorType::DET)].recall == 4.0 / 6.0);
  const auto macro = aggregate_recall({a, b}, Averaging::Macro);
  CHECK(*macro.types[static_cast<std::size_t>(ErrorType::DET)].recall == doctest::Approx(0.625));
}

TEST_CASE("rendering") {
  const std::vector<DatasetScores> rows = {{"FCE", {0.4655, 0.3058, f_beta(0.4655, 0.3058, 0.5)}}};
  const std::string tsv = render_scores(rows, ReportFormat::Tsv);
  CHECK(tsv == "dataset\tP\tR\tF0.5\nFCE\t46.55\t30.58\t42.15\n");
  const auto back = parse_scores_tsv(tsv);
  REQUIRE(back.size() == 1);
  CHECK(render_scores(back, ReportFormat::Tsv) == tsv);
  const std::string table = render_scores(rows, ReportFormat::Table);
  CHECK(table.find("46.55") != std::string::npos);
  CHECK(table.find('\t') == std::string::npos);

  EvalCounts c;
  c.by_type[static_cast<std::size_t>(ErrorType::DET)] = {1, 2};
  const std::string rec = render_recall(recall_by_type(c), ReportFormat::Tsv);
  const auto lines = split_lines(rec);
  std::size_t nonempty = 0;
  for (const auto& l : lines) nonempty += !l.empty();
  CHECK(nonempty == 1 + 16 + 3);
  CHECK(rec.find("DET\t1\t2\t50.00\t2\n") != std::string::npos);
  CHECK(rec.find("ADJ\t0\t0\t-\t0\n") != std::string::npos);
  CHECK(parse_report_format("table") == ReportFormat::Table);
  CHECK_THROWS_AS(parse_report_format("csv"), ConfigError);
}

TEST_CASE("sharded accumulation equals sequential") {
  const auto g = L("CIICIICCIC"), p = L("IICCIICICC");
  EvalCounts seq = accumulate(g, p);
  EvalCounts a = accumulate(std::vector<Label>(g.begin(), g.begin() + 4), std::vector<Label>(p.begin(), p.begin() + 4));
  EvalCounts b = accumulate(std::vector<Label>(g.begin() + 4, g.end()), std::vector<Label>(p.begin() + 4, p.end()));
  CHECK(a + b == seq);
  CHECK(b + a == seq);
}
