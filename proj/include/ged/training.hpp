#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ged/corpus.hpp"
#include "ged/embeddings.hpp"
#include "ged/evaluation.hpp"
#include "ged/model.hpp"

namespace ged {

struct TrainConfig {
  double gamma = 0.1;
  int batch_size = 32;
  double learning_rate = 1.0;
  int patience = 7;
  double rho = 0.95;
  double epsilon = 1e-6;
  int max_epochs = 100;
  std::uint64_t seed = 1;
  Integration integration = Integration::None;
  int annotator = 0;

  void validate() const;  // throws ConfigError
};

// ---- AdaDelta ------------------------------------------------------------------

// Running averages E[g^2] and E[dx^2], one pair per parameter array.
struct AdaDeltaState {
  ModelParams sq_grad;
  ModelParams sq_update;

  explicit AdaDeltaState(const ModelParams& params)
      : sq_grad(params.zeros_like()), sq_update(params.zeros_like()) {}
};

// Element-wise update on one array:
//   E[g2] <- rho E[g2] + (1-rho) g^2
//   dx     = -sqrt(E[dx2] + eps) / sqrt(E[g2] + eps) * g
//   E[dx2] <- rho E[dx2] + (1-rho) dx^2
//   x     <- x + lr * dx
void adadelta_update(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad,
                     Eigen::MatrixXd& sq_grad, Eigen::MatrixXd& sq_update, double lr, double rho,
                     double epsilon);

// Applies adadelta_update to every array. Throws NumericError naming the first
// parameter with a non-finite gradient (nothing is modified in that case).
void adadelta_step(AdaDeltaState& state, const Gradients& grads, ModelParams& params, double lr,
                   double rho, double epsilon);

// ---- batching ------------------------------------------------------------------

struct Batch {
  std::vector<Sentence> sentences;
  std::vector<std::size_t> indices;  // positions in the source corpus
  // Padded word ids (batch x max_len) with PAD beyond each sentence, and the
  // matching mask of real tokens.
  std::vector<std::vector<int>> padded_ids;
  std::vector<std::vector<bool>> mask;
  std::size_t max_length = 0;
};

// Shuffles with `seed`, splits into batches of `batch_size` (last one smaller)
// and pads each to its longest sentence.
std::vector<Batch> make_batches(const std::vector<Sentence>& corpus, int batch_size,
                                std::uint64_t seed);

// ---- early stopping --------------------------------------------------------------

// Tracks the best validation score; a strictly larger score resets patience.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  // Records one epoch's score. Returns true when the new score is the best so far.
  bool observe(double score);
  // Stops after `patience` consecutive non-improving epochs (at least one).
  bool should_stop() const { return stale_ >= (patience_ > 0 ? patience_ : 1); }

  int best_epoch() const { return best_epoch_; }  // 0-based, -1 before any epoch
  double best_score() const { return best_; }
  int epochs_seen() const { return epochs_; }

 private:
  int patience_;
  int epochs_ = 0;
  int best_epoch_ = -1;
  double best_ = 0.0;
  int stale_ = 0;
};

// ---- training loop ---------------------------------------------------------------

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_precision = 0.0;
  double dev_recall = 0.0;
  double dev_f05 = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;  // index into epochs
  std::vector<double> step_losses;  // loss of every optimizer step, in order

  // epoch, train_loss, dev_P, dev_R, dev_F05, seconds
  std::string to_tsv() const;
};

struct TrainResult {
  ModelParams params;
  TrainHistory history;
};

// Optional per-epoch hook (epoch record, current params); used for logging.
using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains with AdaDelta and early stopping on dev F0.5 (strict improvement).
// The returned params are those of the best dev epoch. When the model uses
// contextual vectors the store must cover both corpora (ConfigError
// before the first epoch otherwise).
TrainResult train(const std::vector<Sentence>& train_corpus, const std::vector<Sentence>& dev_corpus,
                  const ModelConfig& model_config, const TrainConfig& config,
                  const ContextStore* store, const EpochCallback& on_epoch = {});

// Same loop starting from given parameters.
TrainResult train_from(ModelParams initial, const std::vector<Sentence>& train_corpus,
                       const std::vector<Sentence>& dev_corpus, const TrainConfig& config,
                       const ContextStore* store, const EpochCallback& on_epoch = {});

// Predicts every sentence (training=false) and accumulates token counts.
EvalCounts evaluate_corpus(const std::vector<Sentence>& corpus, const ModelParams& params,
                           const ContextStore* store,
                           const std::vector<std::vector<std::optional<TokenErrorInfo>>>* types = nullptr);

}  // namespace ged
