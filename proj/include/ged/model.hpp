#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ged/corpus.hpp"
#include "ged/embeddings.hpp"
#include "ged/lstm.hpp"

namespace ged {

// Where contextual vectors join the labeler.
enum class Integration { None, Input, Output };

std::string_view to_string(Integration i);
Integration parse_integration(std::string_view s);  // "none" | "input" | "output"

struct ModelConfig {
  int word_vocab = 0;
  int char_vocab = 0;
  int word_dim = 300;
  int char_dim = 100;
  int char_hidden = 100;
  int word_hidden = 300;
  int hidden_dim = 50;  // tanh layer before the detection softmax
  int lm_hidden = 50;   // tanh layer before each LM softmax
  Integration integration = Integration::None;
  int context_layers = 1;
  int context_dim = 0;
  double keep_prob = 0.5;
  bool char_dropout = false;  // dropout on char-LSTM inputs

  bool uses_context() const { return integration != Integration::None; }
  bool has_mix() const { return uses_context() && context_layers > 1; }
  int word_input_dim() const {
    return word_dim + 2 * char_hidden + (integration == Integration::Input ? context_dim : 0);
  }
  int output_dim() const {
    return 2 * word_hidden + (integration == Integration::Output ? context_dim : 0);
  }
  void validate() const;  // throws ConfigError
  bool operator==(const ModelConfig&) const = default;
};

// All trainable arrays of the labeler. Also used as the gradient container.
struct ModelParams {
  ModelConfig config;

  Eigen::MatrixXd word_emb;  // V x word_dim
  Eigen::MatrixXd char_emb;  // C x char_dim
  LstmParams char_fwd, char_bwd;
  LstmParams word_fwd, word_bwd;
  Eigen::MatrixXd hidden_w, hidden_b;  // hidden_dim x output_dim, hidden_dim x 1
  Eigen::MatrixXd detect_w, detect_b;  // 2 x hidden_dim, 2 x 1
  Eigen::MatrixXd lm_fwd_proj_w, lm_fwd_proj_b;  // lm_hidden x word_hidden
  Eigen::MatrixXd lm_bwd_proj_w, lm_bwd_proj_b;
  Eigen::MatrixXd lm_fwd_out_w, lm_fwd_out_b;  // V x lm_hidden
  Eigen::MatrixXd lm_bwd_out_w, lm_bwd_out_b;
  Eigen::MatrixXd mix_scalars;  // L x 1, present only when has_mix()
  Eigen::MatrixXd mix_scale;    // 1 x 1, present only when has_mix()

  // Zero-valued arrays of the right shapes.
  explicit ModelParams(const ModelConfig& cfg);
  ModelParams() = default;

  // Seeded initialization: embeddings U[-0.1, 0.1] (PAD rows zero), Glorot
  // uniform weights, zero biases, mix scalars 0 and scale 1.
  static ModelParams initialize(const ModelConfig& cfg, std::uint64_t seed);

  // Every trainable array, each exactly once, in a fixed order.
  void visit(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn);
  void visit(const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const;

  ModelParams zeros_like() const { return ModelParams(config); }
  std::size_t parameter_count() const;

  LayerMix layer_mix() const;
};

using Gradients = ModelParams;

// Caches kept from the forward pass for backpropagation.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> char_inputs;  // per token: char_dim x n_chars (after dropout)
  std::vector<Eigen::MatrixXd> char_masks;   // per token, empty when unused
  std::vector<LstmTrace> char_fwd, char_bwd;  // bwd runs on reversed characters
  std::vector<Eigen::MatrixXd> context_layers;  // per token: d x L
  Eigen::MatrixXd word_inputs;  // word_input_dim x T, after dropout
  LstmTrace word_fwd, word_bwd;   // bwd trace is over the reversed sequence
  Eigen::MatrixXd detect_hidden;  // hidden_dim x T
  Eigen::MatrixXd lm_fwd_hidden, lm_bwd_hidden;  // lm_hidden x T
};

// Per-sentence forward results; names follow the labeler diagram
// (embed, context, h, o, s).
struct ForwardActivations {
  Eigen::MatrixXd input_embed;     // word_input_dim x T, before dropout
  Eigen::MatrixXd context;         // context_dim x T (empty without integration)
  Eigen::MatrixXd word_hidden;     // 2*word_hidden x T: [h_fwd; h_bwd]
  Eigen::MatrixXd lstm_output;     // output_dim x T, after dropout (+ context)
  Eigen::MatrixXd detect_logits;   // 2 x T
  Eigen::MatrixXd label_distribution;  // 2 x T, rows (Correct, Incorrect)
  Eigen::MatrixXd lm_fwd_logits;   // V x T
  Eigen::MatrixXd lm_bwd_logits;   // V x T
  Eigen::MatrixXd input_mask;      // word_input_dim x T of {0, 1/keep}; ones when not training
  Eigen::MatrixXd output_mask;     // 2*word_hidden x T
  ForwardCache cache;

  std::size_t length() const { return static_cast<std::size_t>(label_distribution.cols()); }
};

// Runs the labeler over encoded sentences. With training=true dropout masks
// are drawn from `seed` (per sentence position in the batch).
// Throws LookupError when a needed context vector is missing and
// ValidationError on empty sentences or a missing store.
std::vector<ForwardActivations> forward(const std::vector<Sentence>& batch,
                                        const ModelParams& params, const ContextStore* store,
                                        bool training, std::uint64_t seed);

// Next-token targets (EOS at the end) and previous-token targets (BOS at 0).
std::vector<int> lm_forward_targets(const Sentence& s);
std::vector<int> lm_backward_targets(const Sentence& s);

// L_detect + gamma * (L_fwLM + L_bwLM); each term averaged over all tokens of the batch.
double compute_loss(const std::vector<ForwardActivations>& acts,
                    const std::vector<Sentence>& batch, double gamma);

// Exact gradient of compute_loss with respect to every trainable array.
Gradients backward(const std::vector<ForwardActivations>& acts,
                   const std::vector<Sentence>& batch, double gamma, const ModelParams& params);

// Incorrect iff P(Incorrect) > 0.5.
std::vector<Label> labels_from_distribution(const Eigen::MatrixXd& distribution);

std::vector<Label> predict(const Sentence& sentence, const ModelParams& params,
                           const ContextStore* store);

}  // namespace ged
