#include "doctest.h"

#include "ged/edit_analysis.hpp"
#include "ged/error.hpp"
#include "ged/random.hpp"
#include "support.hpp"

using namespace ged;

namespace {

using Toks = std::vector<std::string>;

Edit make_edit(int s, int e, Toks c) {
  Edit ed;
  ed.o_start = s;
  ed.o_end = e;
  ed.c_tokens = std::move(c);
  ed.op = classify_operation(ed);
  return ed;
}

ErrorType type_of(const Toks& orig, const Edit& e, const Lexicon& lex = {}) {
  return classify_pos_type(e, orig, fallback_tag(orig), fallback_tag(e.c_tokens), lex);
}

}  // namespace

TEST_CASE("substitution costs") {
  CHECK(substitution_cost("The", "the") == 0.5);
  CHECK(substitution_cost("walked", "walking") == 0.5);
  CHECK(substitution_cost("has", "have") == 1.0);
  CHECK(substitution_cost("a", "an") == 1.0);
  CHECK(substitution_cost("cat", "elephant") == 2.0);
  CHECK(stem("walking") == "walk");
  CHECK(stem("is") == "is");
}

TEST_CASE("align_edits examples") {
  SUBCASE("two separate substitutions") {
    const auto edits = align_edits({"I", "has", "a", "apple"}, {"I", "have", "an", "apple"});
    REQUIRE(edits.size() == 2);
    CHECK(edits[0] == make_edit(1, 2, {"have"}));
    CHECK(edits[1] == make_edit(2, 3, {"an"}));
  }
  SUBCASE("identity") { CHECK(align_edits({"a", "b"}, {"a", "b"}).empty()); }
  SUBCASE("missing") {
    const auto edits = align_edits({"I", "going"}, {"I", "am", "going"});
    REQUIRE(edits.size() == 1);
    CHECK(edits[0] == make_edit(1, 1, {"am"}));
    CHECK(edits[0].op == Operation::Missing);
  }
  SUBCASE("unnecessary") {
    const auto edits = align_edits({"I", "am", "am", "here"}, {"I", "am", "here"});
    REQUIRE(edits.size() == 1);
    CHECK(edits[0].op == Operation::Unnecessary);
    CHECK(edits[0].o_end - edits[0].o_start == 1);
  }
  SUBCASE("transposition") {
    const auto script = align({"is", "what", "it"}, {"what", "is", "it"});
    CHECK(script.cost == 1.0);
    const auto edits = align_edits({"is", "what", "it"}, {"what", "is", "it"});
    REQUIRE(edits.size() == 1);
    CHECK(edits[0] == make_edit(0, 2, {"what", "is"}));
  }
  SUBCASE("empty sides") {
    CHECK(align_edits({}, {"a", "b"}) == std::vector<Edit>{make_edit(0, 0, {"a", "b"})});
    CHECK(align_edits({"a", "b"}, {}) == std::vector<Edit>{make_edit(0, 2, {})});
    CHECK(align_edits({}, {}).empty());
  }
  SUBCASE("deletion runs merge") {
    const auto edits = align_edits({"a", "b", "c", "d"}, {"a", "d"});
    REQUIRE(edits.size() == 1);
    CHECK(edits[0] == make_edit(1, 3, {}));
  }
  SUBCASE("a delete next to an insert merges into one replacement") {
    AlignmentScript s;
    s.steps = {{StepKind::Match, 0, 0, 1, 0.0},
               {StepKind::Delete, 1, 1, 1, 1.0},
               {StepKind::Insert, 2, 1, 1, 1.0},
               {StepKind::Insert, 2, 2, 1, 1.0},
               {StepKind::Match, 2, 3, 1, 0.0}};
    const Toks corr = {"x", "dog", "elephant", "y"};
    CHECK(apply_script(s, {"x", "cat", "y"}, corr) == corr);
    const auto edits = script_to_edits(s, corr);
    REQUIRE(edits.size() == 1);
    CHECK(edits[0] == make_edit(1, 2, {"dog", "elephant"}));
  }
}

TEST_CASE("alignment matches exhaustive search and scripts replay") {
  std::uint64_t state = 99;
  int checked = 0;
  for (int trial = 0; trial < 1200; ++trial) {
    const auto a = testing::random_tokens(state, 6, 5);
    const auto b = testing::random_tokens(state, 6, 5);
    const auto script = align(a, b);
    CHECK(script.cost == doctest::Approx(testing::brute_force_alignment_cost(a, b)).epsilon(1e-12));
    double sum = 0.0;
    for (const auto& s : script.steps) sum += s.cost;
    CHECK(sum == doctest::Approx(script.cost));
    CHECK(apply_script(script, a, b) == b);
    ++checked;
  }
  CHECK(checked >= 1000);
}

TEST_CASE("apply_script rejects inconsistent scripts") {
  AlignmentScript s;
  s.steps.push_back({StepKind::Match, 0, 0, 1, 0.0});
  CHECK_THROWS_AS(apply_script(s, {"a"}, {"b"}), ValidationError);
  CHECK_THROWS_AS(apply_script(AlignmentScript{}, {"a"}, {"a"}), ValidationError);
}

TEST_CASE("classify_operation") {
  CHECK(classify_operation(2, 2, {"am"}) == Operation::Missing);
  CHECK(classify_operation(1, 3, {}) == Operation::Unnecessary);
  CHECK(classify_operation(1, 2, {"have"}) == Operation::Replacement);
  CHECK_THROWS_AS(classify_operation(1, 1, {}), ValidationError);

  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const int s = static_cast<int>(rng.below(5));
    const int e = s + static_cast<int>(rng.below(3));
    Toks c(rng.below(3), "w");
    if (s == e && c.empty()) {
      CHECK_THROWS_AS(classify_operation(s, e, c), ValidationError);
      continue;
    }
    const Operation op = classify_operation(s, e, c);
    CHECK((op == Operation::Missing) == (s == e && !c.empty()));
    CHECK((op == Operation::Unnecessary) == (e > s && c.empty()));
    CHECK((op == Operation::Replacement) == (e > s && !c.empty()));
  }
}

TEST_CASE("error type cascade") {
  SUBCASE("single POS") { CHECK(type_of({"a", "apple"}, make_edit(0, 1, {"an"})) == ErrorType::DET); }
  SUBCASE("orthography") { CHECK(type_of({"i", "am"}, make_edit(0, 1, {"I"})) == ErrorType::ORTH); }
  SUBCASE("hyphenation") {
    CHECK(type_of({"a", "well", "known", "man"}, make_edit(1, 3, {"well-known"})) == ErrorType::ORTH);
  }
  SUBCASE("spelling") {
    const Lexicon lex({"I", "receive", "it"});
    CHECK(type_of({"I", "recieve", "it"}, make_edit(1, 2, {"receive"}), lex) == ErrorType::SPELL);
    CHECK(type_of({"I", "recieve", "it"}, make_edit(1, 2, {"receive"})) != ErrorType::SPELL);
  }
  SUBCASE("word order") {
    CHECK(type_of({"is", "what", "it"}, make_edit(0, 2, {"what", "is"})) == ErrorType::WO);
  }
  SUBCASE("morphology") {
    CHECK(type_of({"a", "quick", "runner"}, make_edit(1, 2, {"quickly"})) == ErrorType::MORPH);
  }
  SUBCASE("unnecessary uses original side") {
    CHECK(type_of({"go", "to", "home"}, make_edit(1, 2, {})) == ErrorType::PREP);
  }
  SUBCASE("contraction") {
    CHECK(type_of({"I", "dont", "know"}, make_edit(1, 2, {"do", "n't"})) == ErrorType::CONTR);
  }
  SUBCASE("mixed falls to OTHER") {
    CHECK(type_of({"x", "y"}, make_edit(0, 2, {"the", "cat"})) == ErrorType::OTHER);
  }
}

TEST_CASE("annotate_corpus") {
  const Lexicon lex({"I", "have", "has", "a", "an", "apple"});
  SUBCASE("aligned example gets VERB and DET") {
    const auto recs = annotate_corpus({"I has a apple"}, {"I have an apple"}, lex);
    REQUIRE(recs[0].edits.size() == 2);
    CHECK(recs[0].edits[0].etype == ErrorType::VERB);
    CHECK(recs[0].edits[1].etype == ErrorType::DET);
    CHECK(recs[0].edits[0].op == Operation::Replacement);
  }
  SUBCASE("error-free") {
    const auto recs = annotate_corpus({"I have an apple"}, {"I have an apple"}, lex);
    CHECK(recs[0].edits.empty());
    for (Label l : recs[0].sentence.gold_labels) CHECK(l == Label::Correct);
  }
  SUBCASE("permutation") {
    const auto recs = annotate_corpus({"is what it"}, {"what is it"}, lex);
    REQUIRE(recs[0].edits.size() == 1);
    CHECK(recs[0].edits[0].etype == ErrorType::WO);
  }
  SUBCASE("every incorrect token carries one type, deterministically") {
    const std::vector<std::string> o = {"I has a apple", "he go to school yesterday .",
                                        "She dont like cats", "the the dog barked"};
    const std::vector<std::string> c = {"I have an apple", "he went to school yesterday .",
                                        "She does n't like cats", "the dog barked"};
    const auto recs = annotate_corpus(o, c, lex);
    const auto again = annotate_corpus(o, c, lex);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      CHECK(recs[i].edits == again[i].edits);
      const auto info = token_error_info(recs[i].sentence.size(), recs[i].edits);
      for (std::size_t t = 0; t < info.size(); ++t)
        CHECK(info[t].has_value() == (recs[i].sentence.gold_labels[t] == Label::Incorrect));
    }
  }
  SUBCASE("typed M2 output") {
    const auto recs = annotate_corpus({"I has a apple"}, {"I have an apple"}, lex);
    const std::string m2 = write_typed_m2(recs);
    CHECK(m2 ==
          "S I has a apple\n"
          "A 1 2|||R:VERB|||have|||REQUIRED|||-NONE-|||0\n"
          "A 2 3|||R:DET|||an|||REQUIRED|||-NONE-|||0\n");
    const auto back = parse_m2(m2);
    CHECK(back[0].edits[1].etype == ErrorType::DET);
  }
}

TEST_CASE("fallback tagger") {
  CHECK(fallback_pos("the") == Pos::DET);
  CHECK(fallback_pos("to") == Pos::PREP);
  CHECK(fallback_pos(".") == Pos::PUNCT);
  CHECK(fallback_pos("quickly") == Pos::ADV);
  CHECK(fallback_pos("walking") == Pos::VERB);
  CHECK(fallback_pos("beautiful") == Pos::ADJ);
  CHECK(fallback_pos("table") == Pos::NOUN);
  CHECK(fallback_pos("n't") == Pos::CONTR);
  CHECK(fallback_pos("sees") == Pos::VERB);
  CHECK(fallback_pos("goes") == Pos::VERB);
  CHECK(fallback_pos("seeing") == Pos::VERB);
  CHECK(fallback_pos("tables") == Pos::NOUN);
  CHECK(type_of({"the", "cat", "see", "it"}, make_edit(2, 3, {"sees"})) == ErrorType::VERB);
  CHECK(char_edit_distance(U"recieve", U"receive") == 1);
  CHECK(char_edit_distance(U"", U"abc") == 3);
}
