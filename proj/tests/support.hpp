#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ged/corpus.hpp"
#include "ged/embeddings.hpp"
#include "ged/model.hpp"

namespace ged::testing {

// Exhaustive search over edit scripts (branch and bound) under the alignment
// cost model; returns the minimum total cost.
double brute_force_alignment_cost(const std::vector<std::string>& orig,
                                  const std::vector<std::string>& corr);

// Random token sequence of length [0, max_len] over an alphabet of `alphabet` words.
std::vector<std::string> random_tokens(std::uint64_t& state, int max_len, int alphabet);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "<array>[<index>]"
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

// Central finite differences over every trainable entry.
// rel = |a - n| / max(|a|, |n|, floor).
GradCheckResult check_gradients(const ModelParams& params, const std::vector<Sentence>& batch,
                                const ContextStore* store, double gamma, std::uint64_t seed,
                                double step = 1e-5, double floor = 1e-6);

struct TinySetup {
  Vocab vocab;
  std::vector<Sentence> batch;
  ModelConfig config;
};

// Vocab of 20 words, word dim 8, char dim 4, hidden 8/4, sentences of <= 5 tokens.
TinySetup tiny_setup(Integration integration, int context_layers, int context_dim,
                     std::uint64_t seed);

struct SyntheticCorpus {
  std::vector<AnnotatedSentence> records;
  std::vector<Sentence> encoded;
  Vocab vocab;
};

// `n` distinct sentences from a small grammar; most carry one injected error
// (article swap, verb-form swap or token deletion). Labels come from aligning
// against the correct sentence.
SyntheticCorpus synthetic_corpus(std::size_t n, std::uint64_t seed);

}  // namespace ged::testing
