#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include "ged/edit_analysis.hpp"
#include "ged/random.hpp"

namespace ged::testing {

namespace {

struct Searcher {
  const std::vector<std::string>& a;
  const std::vector<std::string>& b;
  double best = std::numeric_limits<double>::infinity();

  void go(std::size_t i, std::size_t j, double cost) {
    const double remaining =
        std::fabs(static_cast<double>(a.size() - i) - static_cast<double>(b.size() - j));
    if (cost + remaining >= best) return;
    if (i == a.size() && j == b.size()) {
      best = cost;
      return;
    }
    if (i < a.size() && j < b.size()) {
      if (a[i] == b[j]) go(i + 1, j + 1, cost);
      else go(i + 1, j + 1, cost + substitution_cost(a[i], b[j]));
    }
    if (i + 1 < a.size() && j + 1 < b.size() && a[i] == b[j + 1] && a[i + 1] == b[j])
      go(i + 2, j + 2, cost + 1.0);
    if (i < a.size()) go(i + 1, j, cost + 1.0);
    if (j < b.size()) go(i, j + 1, cost + 1.0);
  }
};

}  // namespace

double brute_force_alignment_cost(const std::vector<std::string>& orig,
                                  const std::vector<std::string>& corr) {
  Searcher s{orig, corr};
  s.go(0, 0, 0.0);
  return s.best;
}

std::vector<std::string> random_tokens(std::uint64_t& state, int max_len, int alphabet) {
  static const std::vector<std::string> kWords = {"the", "The", "cat", "cats", "sat",
                                                  "a",   "an",  "dog", "run", "running"};
  Rng rng(state);
  state = rng.next();
  const auto len = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_len) + 1));
  std::vector<std::string> out;
  for (int k = 0; k < len; ++k)
    out.push_back(kWords[rng.below(static_cast<std::uint64_t>(alphabet))]);
  return out;
}

GradCheckResult check_gradients(const ModelParams& params, const std::vector<Sentence>& batch,
                                const ContextStore* store, double gamma, std::uint64_t seed,
                                double step, double floor) {
  const auto acts = forward(batch, params, store, true, seed);
  const Gradients analytic = backward(acts, batch, gamma, params);

  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> grads;
  analytic.visit([&](const std::string& name, const Eigen::MatrixXd& m) { grads.emplace_back(name, &m); });

  ModelParams probe = params;
  GradCheckResult result;
  std::size_t k = 0;
  auto loss_at = [&]() { return compute_loss(forward(batch, probe, store, true, seed), batch, gamma); };
  probe.visit([&](const std::string& name, Eigen::MatrixXd& m) {
    const Eigen::MatrixXd& g = *grads[k++].second;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double orig = m.data()[i];
      m.data()[i] = orig + step;
      const double up = loss_at();
      m.data()[i] = orig - step;
      const double down = loss_at();
      m.data()[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double a = g.data()[i];
      const double rel =
          std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), floor});
      ++result.checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst = name + "[" + std::to_string(i) + "]";
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  });
  return result;
}

TinySetup tiny_setup(Integration integration, int context_layers, int context_dim,
                     std::uint64_t seed) {
  static const std::vector<std::string> kWords = {
      "the", "a",   "cat", "dog",  "sat", "on",   "mat",  "is",
      "big", "ran", "to",  "home", "an",  "apple", "I",   "have"};
  Rng rng(combine_seed(seed, 77));
  TinySetup s;
  std::vector<Sentence> raw;
  for (int k = 0; k < 3; ++k) {
    const auto len = 2 + rng.below(4);  // 2..5 tokens
    std::vector<std::string> words;
    for (std::uint64_t t = 0; t < len; ++t) words.push_back(kWords[rng.below(kWords.size())]);
    Sentence sent = make_sentence("t" + std::to_string(k), words);
    for (auto& l : sent.gold_labels) l = rng.bernoulli(0.4) ? Label::Incorrect : Label::Correct;
    raw.push_back(std::move(sent));
  }
  for (const auto& w : kWords) s.vocab.add_word(lowercase(w));
  for (const auto& w : kWords)
    for (char32_t c : utf8_decode(w)) s.vocab.add_char(c);
  for (const auto& r : raw) s.batch.push_back(encode(r, s.vocab));

  s.config.word_vocab = static_cast<int>(s.vocab.word_count());
  s.config.char_vocab = static_cast<int>(s.vocab.char_count());
  s.config.word_dim = 8;
  s.config.char_dim = 4;
  s.config.char_hidden = 4;
  s.config.word_hidden = 8;
  s.config.hidden_dim = 5;
  s.config.lm_hidden = 5;
  s.config.integration = integration;
  if (integration != Integration::None) {
    s.config.context_layers = context_layers;
    s.config.context_dim = context_dim;
  }
  return s;
}

SyntheticCorpus synthetic_corpus(std::size_t n, std::uint64_t seed) {
  struct Noun {
    std::string word;
    bool vowel;
  };
  static const std::vector<Noun> kNouns = {{"cat", false},   {"dog", false},   {"apple", true},
                                           {"teacher", false}, {"owl", true},   {"student", false},
                                           {"elephant", true}, {"girl", false}, {"idea", true}};
  static const std::vector<std::pair<std::string, std::string>> kVerbs = {
      {"likes", "like"}, {"sees", "see"}, {"wants", "want"}, {"finds", "find"}, {"needs", "need"}};
  static const std::vector<std::string> kPlaces = {"today", "again", "now", "here"};

  Rng rng(seed);
  SyntheticCorpus out;
  std::set<std::string> seen;
  std::vector<std::string> original, corrected;
  while (original.size() < n) {
    const Noun& subj = kNouns[rng.below(kNouns.size())];
    const Noun& obj = kNouns[rng.below(kNouns.size())];
    const auto& verb = kVerbs[rng.below(kVerbs.size())];
    std::vector<std::string> corr = {"the", subj.word, verb.first, obj.vowel ? "an" : "a",
                                     obj.word, kPlaces[rng.below(kPlaces.size())]};
    std::vector<std::string> orig = corr;
    switch (rng.below(4)) {
      case 0:  // article swap
        orig[3] = obj.vowel ? "a" : "an";
        break;
      case 1:  // verb-form swap
        orig[2] = verb.second;
        break;
      case 2:  // token deletion
        orig.erase(orig.begin() + 3);
        break;
      default:  // error-free
        break;
    }
    const std::string key = join(orig, " ");
    if (!seen.insert(key).second) continue;
    original.push_back(key);
    corrected.push_back(join(corr, " "));
  }
  out.records = parse_parallel(original, corrected, "syn");
  std::vector<Sentence> sentences;
  for (const auto& r : out.records) sentences.push_back(r.sentence);
  out.vocab = build_vocab(sentences);
  for (const auto& s : sentences) out.encoded.push_back(encode(s, out.vocab));
  return out;
}

}  // namespace ged::testing
