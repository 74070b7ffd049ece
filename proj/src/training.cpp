#include "ged/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "ged/error.hpp"
#include "ged/random.hpp"

namespace ged {

void TrainConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid training config: " + what);
  };
  need(batch_size >= 1, "batch_size must be >= 1");
  need(patience >= 0, "patience must be >= 0");
  need(rho > 0.0 && rho < 1.0, "rho must be in (0, 1)");
  need(epsilon > 0.0, "epsilon must be positive");
  need(gamma >= 0.0, "gamma must be non-negative");
  need(learning_rate > 0.0, "learning rate must be positive");
  need(max_epochs >= 1, "max_epochs must be >= 1");
  need(annotator >= 0, "annotator must be >= 0");
}

// ---- AdaDelta ------------------------------------------------------------------

void adadelta_update(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad,
                     Eigen::MatrixXd& sq_grad, Eigen::MatrixXd& sq_update, double lr, double rho,
                     double epsilon) {
  for (Eigen::Index i = 0; i < param.size(); ++i) {
    const double g = grad.data()[i];
    double& eg = sq_grad.data()[i];
    double& ex = sq_update.data()[i];
    eg = rho * eg + (1.0 - rho) * g * g;
    const double dx = -(std::sqrt(ex + epsilon) / std::sqrt(eg + epsilon)) * g;
    ex = rho * ex + (1.0 - rho) * dx * dx;
    param.data()[i] += lr * dx;
  }
}

namespace {

std::vector<std::pair<std::string, Eigen::MatrixXd*>> arrays_of(ModelParams& p) {
  std::vector<std::pair<std::string, Eigen::MatrixXd*>> out;
  p.visit([&](const std::string& name, Eigen::MatrixXd& m) { out.emplace_back(name, &m); });
  return out;
}

}  // namespace

void adadelta_step(AdaDeltaState& state, const Gradients& grads, ModelParams& params, double lr,
                   double rho, double epsilon) {
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> g;
  grads.visit([&](const std::string& name, const Eigen::MatrixXd& m) { g.emplace_back(name, &m); });
  auto p = arrays_of(params);
  auto eg = arrays_of(state.sq_grad);
  auto ex = arrays_of(state.sq_update);
  if (g.size() != p.size() || eg.size() != p.size() || ex.size() != p.size())
    throw ValidationError("optimizer state does not match the parameters");
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (g[i].second->rows() != p[i].second->rows() || g[i].second->cols() != p[i].second->cols())
      throw ValidationError("gradient shape mismatch for " + p[i].first);
    if (!g[i].second->allFinite()) {
      Eigen::Index bad = 0;
      while (std::isfinite(g[i].second->data()[bad])) ++bad;
      throw NumericError("non-finite gradient in parameter '" + g[i].first + "' at element " +
                         std::to_string(bad));
    }
  }
  for (std::size_t i = 0; i < p.size(); ++i)
    adadelta_update(*p[i].second, *g[i].second, *eg[i].second, *ex[i].second, lr, rho, epsilon);
}

// ---- batching ------------------------------------------------------------------

std::vector<Batch> make_batches(const std::vector<Sentence>& corpus, int batch_size,
                                std::uint64_t seed) {
  if (corpus.empty()) throw ValidationError("cannot batch an empty corpus");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());

  std::vector<Batch> batches;
  const auto bs = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < order.size(); start += bs) {
    Batch b;
    const std::size_t end = std::min(order.size(), start + bs);
    for (std::size_t k = start; k < end; ++k) {
      b.indices.push_back(order[k]);
      b.sentences.push_back(corpus[order[k]]);
      b.max_length = std::max(b.max_length, corpus[order[k]].size());
    }
    for (const Sentence& s : b.sentences) {
      std::vector<int> ids(b.max_length, Vocab::kPad);
      std::vector<bool> mask(b.max_length, false);
      for (std::size_t t = 0; t < s.size(); ++t) {
        ids[t] = s.tokens[t].word_id;
        mask[t] = true;
      }
      b.padded_ids.push_back(std::move(ids));
      b.mask.push_back(std::move(mask));
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

// ---- early stopping --------------------------------------------------------------

bool EarlyStopping::observe(double score) {
  const int epoch = epochs_++;
  if (best_epoch_ < 0 || score > best_) {
    best_ = score;
    best_epoch_ = epoch;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

// ---- loop ------------------------------------------------------------------------

std::string TrainHistory::to_tsv() const {
  std::ostringstream os;
  os << "epoch\ttrain_loss\tdev_P\tdev_R\tdev_F05\tseconds\n";
  char buf[256];
  for (const auto& e : epochs) {
    std::snprintf(buf, sizeof buf, "%d\t%.6f\t%.4f\t%.4f\t%.4f\t%.3f\n", e.epoch, e.train_loss,
                  e.dev_precision, e.dev_recall, e.dev_f05, e.seconds);
    os << buf;
  }
  return os.str();
}

EvalCounts evaluate_corpus(const std::vector<Sentence>& corpus, const ModelParams& params,
                           const ContextStore* store,
                           const std::vector<std::vector<std::optional<TokenErrorInfo>>>* types) {
  if (types && types->size() != corpus.size())
    throw ValidationError("type annotations do not match the corpus");
  EvalCounts counts;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    accumulate(counts, corpus[i].gold_labels, predict(corpus[i], params, store),
               types ? &(*types)[i] : nullptr);
  return counts;
}

namespace {

void check_store(const ModelConfig& cfg, const ContextStore* store,
                 const std::vector<Sentence>& train_corpus, const std::vector<Sentence>& dev_corpus) {
  if (!cfg.uses_context()) return;
  if (!store) throw ConfigError("integration '" + std::string(to_string(cfg.integration)) +
                                "' requires a contextual store");
  if (store->dim() != cfg.context_dim || store->layers() != cfg.context_layers)
    throw ConfigError("contextual store shape does not match the model configuration");
  auto gaps = store->missing(train_corpus);
  auto dev_gaps = store->missing(dev_corpus);
  gaps.insert(gaps.end(), dev_gaps.begin(), dev_gaps.end());
  if (!gaps.empty())
    throw ConfigError("contextual store is missing " + std::to_string(gaps.size()) +
                      " token(s), first: sentence '" + gaps.front().first + "' token " +
                      std::to_string(gaps.front().second));
}

}  // namespace

TrainResult train_from(ModelParams params, const std::vector<Sentence>& train_corpus,
                       const std::vector<Sentence>& dev_corpus, const TrainConfig& config,
                       const ContextStore* store, const EpochCallback& on_epoch) {
  config.validate();
  if (train_corpus.empty()) throw ValidationError("training corpus is empty");
  check_store(params.config, store, train_corpus, dev_corpus);

  TrainResult result{params, {}};
  AdaDeltaState state(params);
  EarlyStopping stopper(config.patience);

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const auto batches =
        make_batches(train_corpus, config.batch_size, config.seed + static_cast<std::uint64_t>(epoch));
    double loss_sum = 0.0;
    std::size_t token_sum = 0;
    for (std::size_t k = 0; k < batches.size(); ++k) {
      const auto& batch = batches[k].sentences;
      const std::uint64_t dropout_seed =
          combine_seed(config.seed, (static_cast<std::uint64_t>(epoch) << 32) | k);
      const auto acts = forward(batch, params, store, true, dropout_seed);
      const double loss = compute_loss(acts, batch, config.gamma);
      const Gradients grads = backward(acts, batch, config.gamma, params);
      adadelta_step(state, grads, params, config.learning_rate, config.rho, config.epsilon);
      std::size_t tokens = 0;
      for (const auto& s : batch) tokens += s.size();
      loss_sum += loss * static_cast<double>(tokens);
      token_sum += tokens;
      result.history.step_losses.push_back(loss);
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = token_sum ? loss_sum / static_cast<double>(token_sum) : 0.0;
    if (!dev_corpus.empty()) {
      const Scores s = f_beta(evaluate_corpus(dev_corpus, params, store), 0.5);
      rec.dev_precision = s.precision;
      rec.dev_recall = s.recall;
      rec.dev_f05 = s.f;
    }
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.history.epochs.push_back(rec);
    if (stopper.observe(rec.dev_f05)) {
      result.params = params;
      result.history.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(rec);
    if (stopper.should_stop()) break;
  }
  return result;
}

TrainResult train(const std::vector<Sentence>& train_corpus, const std::vector<Sentence>& dev_corpus,
                  const ModelConfig& model_config, const TrainConfig& config,
                  const ContextStore* store, const EpochCallback& on_epoch) {
  ModelConfig cfg = model_config;
  cfg.integration = config.integration;
  if (cfg.uses_context() && store) {
    if (cfg.context_dim == 0) cfg.context_dim = store->dim();
    if (cfg.context_layers <= 1) cfg.context_layers = store->layers();
  }
  if (cfg.uses_context() && !store)
    throw ConfigError("integration '" + std::string(to_string(cfg.integration)) +
                      "' requires a contextual store");
  return train_from(ModelParams::initialize(cfg, config.seed), train_corpus, dev_corpus, config,
                    store, on_epoch);
}

}  // namespace ged
