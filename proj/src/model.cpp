#include "ged/model.hpp"

#include <cmath>

#include "ged/error.hpp"
#include "ged/random.hpp"

namespace ged {

std::string_view to_string(Integration i) {
  switch (i) {
    case Integration::None: return "none";
    case Integration::Input: return "input";
    case Integration::Output: return "output";
  }
  return "?";
}

Integration parse_integration(std::string_view s) {
  if (s == "none") return Integration::None;
  if (s == "input") return Integration::Input;
  if (s == "output") return Integration::Output;
  throw ConfigError("unknown integration mode '" + std::string(s) + "'");
}

void ModelConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid model config: " + what);
  };
  need(word_vocab >= Vocab::kNumSpecials, "word vocabulary too small");
  need(char_vocab >= Vocab::kNumSpecials, "character vocabulary too small");
  need(word_dim > 0 && char_dim > 0 && char_hidden > 0 && word_hidden > 0, "dimensions must be positive");
  need(hidden_dim > 0 && lm_hidden > 0, "dimensions must be positive");
  need(keep_prob > 0.0 && keep_prob <= 1.0, "keep probability must be in (0, 1]");
  if (uses_context()) {
    need(context_dim > 0, "context dimension must be positive with integration");
    need(context_layers > 0, "context layer count must be positive with integration");
  }
}

// ---- params ------------------------------------------------------------------

ModelParams::ModelParams(const ModelConfig& cfg) : config(cfg) {
  cfg.validate();
  using M = Eigen::MatrixXd;
  word_emb = M::Zero(cfg.word_vocab, cfg.word_dim);
  char_emb = M::Zero(cfg.char_vocab, cfg.char_dim);
  char_fwd = LstmParams(cfg.char_dim, cfg.char_hidden);
  char_bwd = LstmParams(cfg.char_dim, cfg.char_hidden);
  word_fwd = LstmParams(cfg.word_input_dim(), cfg.word_hidden);
  word_bwd = LstmParams(cfg.word_input_dim(), cfg.word_hidden);
  hidden_w = M::Zero(cfg.hidden_dim, cfg.output_dim());
  hidden_b = M::Zero(cfg.hidden_dim, 1);
  detect_w = M::Zero(2, cfg.hidden_dim);
  detect_b = M::Zero(2, 1);
  lm_fwd_proj_w = M::Zero(cfg.lm_hidden, cfg.word_hidden);
  lm_fwd_proj_b = M::Zero(cfg.lm_hidden, 1);
  lm_bwd_proj_w = M::Zero(cfg.lm_hidden, cfg.word_hidden);
  lm_bwd_proj_b = M::Zero(cfg.lm_hidden, 1);
  lm_fwd_out_w = M::Zero(cfg.word_vocab, cfg.lm_hidden);
  lm_fwd_out_b = M::Zero(cfg.word_vocab, 1);
  lm_bwd_out_w = M::Zero(cfg.word_vocab, cfg.lm_hidden);
  lm_bwd_out_b = M::Zero(cfg.word_vocab, 1);
  if (cfg.has_mix()) {
    mix_scalars = M::Zero(cfg.context_layers, 1);
    mix_scale = M::Zero(1, 1);
  }
}

namespace {

void glorot(Eigen::MatrixXd& m, Rng& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-r, r);
}

void uniform_table(Eigen::MatrixXd& m, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-0.1, 0.1);
  m.row(Vocab::kPad).setZero();
}

}  // namespace

ModelParams ModelParams::initialize(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p(cfg);
  Rng rng(combine_seed(seed, 0x6D6F64656CULL));
  uniform_table(p.word_emb, rng);
  uniform_table(p.char_emb, rng);
  p.char_fwd.init(rng);
  p.char_bwd.init(rng);
  p.word_fwd.init(rng);
  p.word_bwd.init(rng);
  glorot(p.hidden_w, rng);
  glorot(p.detect_w, rng);
  glorot(p.lm_fwd_proj_w, rng);
  glorot(p.lm_bwd_proj_w, rng);
  glorot(p.lm_fwd_out_w, rng);
  glorot(p.lm_bwd_out_w, rng);
  if (cfg.has_mix()) {
    p.mix_scalars.setZero();
    p.mix_scale(0, 0) = 1.0;
  }
  return p;
}

#define GED_VISIT_ALL(FN)                                                   \
  FN("word_emb", word_emb);                                                 \
  FN("char_emb", char_emb);                                                 \
  FN("char_fwd.W", char_fwd.W);                                             \
  FN("char_fwd.U", char_fwd.U);                                             \
  FN("char_fwd.b", char_fwd.b);                                             \
  FN("char_bwd.W", char_bwd.W);                                             \
  FN("char_bwd.U", char_bwd.U);                                             \
  FN("char_bwd.b", char_bwd.b);                                             \
  FN("word_fwd.W", word_fwd.W);                                             \
  FN("word_fwd.U", word_fwd.U);                                             \
  FN("word_fwd.b", word_fwd.b);                                             \
  FN("word_bwd.W", word_bwd.W);                                             \
  FN("word_bwd.U", word_bwd.U);                                             \
  FN("word_bwd.b", word_bwd.b);                                             \
  FN("hidden.W", hidden_w);                                                 \
  FN("hidden.b", hidden_b);                                                 \
  FN("detect.W", detect_w);                                                 \
  FN("detect.b", detect_b);                                                 \
  FN("lm_fwd_proj.W", lm_fwd_proj_w);                                       \
  FN("lm_fwd_proj.b", lm_fwd_proj_b);                                       \
  FN("lm_bwd_proj.W", lm_bwd_proj_w);                                       \
  FN("lm_bwd_proj.b", lm_bwd_proj_b);                                       \
  FN("lm_fwd_out.W", lm_fwd_out_w);                                         \
  FN("lm_fwd_out.b", lm_fwd_out_b);                                         \
  FN("lm_bwd_out.W", lm_bwd_out_w);                                         \
  FN("lm_bwd_out.b", lm_bwd_out_b);                                         \
  if (config.has_mix()) {                                                   \
    FN("mix.scalars", mix_scalars);                                         \
    FN("mix.scale", mix_scale);                                             \
  }

void ModelParams::visit(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn) {
  GED_VISIT_ALL(fn)
}

void ModelParams::visit(
    const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const {
  GED_VISIT_ALL(fn)
}

#undef GED_VISIT_ALL

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  visit([&](const std::string&, const Eigen::MatrixXd& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

LayerMix ModelParams::layer_mix() const {
  if (!config.has_mix()) return LayerMix::uniform(std::max(1, config.context_layers));
  return {mix_scalars.col(0), mix_scale(0, 0)};
}

// ---- forward -----------------------------------------------------------------

namespace {

Eigen::MatrixXd column_softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.cols(); ++t) {
    const double m = logits.col(t).maxCoeff();
    out.col(t) = (logits.col(t).array() - m).exp().matrix();
    out.col(t) /= out.col(t).sum();
  }
  return out;
}

// -log softmax(x)[target], via log-sum-exp.
double nll(const Eigen::Ref<const Eigen::VectorXd>& logits, int target) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return lse - logits(target);
}

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double keep, Rng* rng) {
  if (!rng) return Eigen::MatrixXd::Ones(rows, cols);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng->bernoulli(keep) ? 1.0 / keep : 0.0;
  return m;
}

Eigen::MatrixXd reversed(const Eigen::MatrixXd& m) { return m.rowwise().reverse(); }

ForwardActivations forward_one(const Sentence& s, const ModelParams& p, const ContextStore* store,
                               Rng* rng) {
  const ModelConfig& cfg = p.config;
  const auto n = static_cast<Eigen::Index>(s.size());
  if (n == 0) throw ValidationError("sentence " + s.sid + " is empty");
  for (const Token& tok : s.tokens)
    if (tok.word_id < 0 || tok.char_ids.size() != tok.chars.size() || tok.char_ids.empty())
      throw ValidationError("sentence " + s.sid + " is not encoded");

  ForwardActivations a;
  ForwardCache& c = a.cache;

  // Contextual vectors (frozen).
  if (cfg.uses_context()) {
    if (!store)
      throw ValidationError("model uses contextual embeddings but no store was supplied");
    if (store->dim() != cfg.context_dim || store->layers() != cfg.context_layers)
      throw ValidationError("context store shape " + std::to_string(store->layers()) + "x" +
                            std::to_string(store->dim()) + " does not match the model's " +
                            std::to_string(cfg.context_layers) + "x" +
                            std::to_string(cfg.context_dim));
    a.context.resize(cfg.context_dim, n);
    c.context_layers.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index t = 0; t < n; ++t) {
      c.context_layers.push_back(store->layer_vectors(s.sid, static_cast<std::uint32_t>(t)));
      const Eigen::MatrixXd& layers = c.context_layers.back();
      a.context.col(t) = cfg.has_mix() ? mix_layers(layers, p.mix_scalars.col(0), p.mix_scale(0, 0))
                                       : Eigen::VectorXd(layers.col(0));
    }
  }

  // Character bi-LSTM: final forward state ++ final backward state.
  const Eigen::Index hc = cfg.char_hidden;
  a.input_embed.resize(cfg.word_input_dim(), n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const Token& tok = s.tokens[static_cast<std::size_t>(t)];
    Eigen::MatrixXd x(cfg.char_dim, static_cast<Eigen::Index>(tok.char_ids.size()));
    for (Eigen::Index k = 0; k < x.cols(); ++k)
      x.col(k) = p.char_emb.row(tok.char_ids[static_cast<std::size_t>(k)]).transpose();
    if (rng && cfg.char_dropout) {
      c.char_masks.push_back(dropout_mask(x.rows(), x.cols(), cfg.keep_prob, rng));
      x = x.cwiseProduct(c.char_masks.back());
    } else {
      c.char_masks.emplace_back();
    }
    c.char_fwd.push_back(lstm_forward(p.char_fwd, x));
    c.char_bwd.push_back(lstm_forward(p.char_bwd, reversed(x)));
    c.char_inputs.push_back(std::move(x));

    auto col = a.input_embed.col(t);
    col.head(cfg.word_dim) = p.word_emb.row(tok.word_id).transpose();
    col.segment(cfg.word_dim, hc) = c.char_fwd.back().hidden.rightCols(1);
    col.segment(cfg.word_dim + hc, hc) = c.char_bwd.back().hidden.rightCols(1);
    if (cfg.integration == Integration::Input)
      col.tail(cfg.context_dim) = a.context.col(t);
  }

  // Word bi-LSTM with dropout on its inputs and outputs.
  a.input_mask = dropout_mask(a.input_embed.rows(), n, cfg.keep_prob, rng);
  c.word_inputs = a.input_embed.cwiseProduct(a.input_mask);
  c.word_fwd = lstm_forward(p.word_fwd, c.word_inputs);
  c.word_bwd = lstm_forward(p.word_bwd, reversed(c.word_inputs));
  const Eigen::Index hw = cfg.word_hidden;
  a.word_hidden.resize(2 * hw, n);
  a.word_hidden.topRows(hw) = c.word_fwd.hidden;
  a.word_hidden.bottomRows(hw) = reversed(c.word_bwd.hidden);

  a.output_mask = dropout_mask(2 * hw, n, cfg.keep_prob, rng);
  a.lstm_output.resize(cfg.output_dim(), n);
  a.lstm_output.topRows(2 * hw) = a.word_hidden.cwiseProduct(a.output_mask);
  if (cfg.integration == Integration::Output) a.lstm_output.bottomRows(cfg.context_dim) = a.context;

  // Detection head.
  c.detect_hidden = ((p.hidden_w * a.lstm_output).colwise() + p.hidden_b.col(0)).array().tanh().matrix();
  a.detect_logits = (p.detect_w * c.detect_hidden).colwise() + p.detect_b.col(0);
  a.label_distribution = column_softmax(a.detect_logits);

  // Language-model heads on the (dropped-out) directional outputs.
  c.lm_fwd_hidden =
      ((p.lm_fwd_proj_w * a.lstm_output.topRows(hw)).colwise() + p.lm_fwd_proj_b.col(0)).array().tanh().matrix();
  c.lm_bwd_hidden =
      ((p.lm_bwd_proj_w * a.lstm_output.middleRows(hw, hw)).colwise() + p.lm_bwd_proj_b.col(0))
          .array()
          .tanh()
          .matrix();
  a.lm_fwd_logits = (p.lm_fwd_out_w * c.lm_fwd_hidden).colwise() + p.lm_fwd_out_b.col(0);
  a.lm_bwd_logits = (p.lm_bwd_out_w * c.lm_bwd_hidden).colwise() + p.lm_bwd_out_b.col(0);
  return a;
}

}  // namespace

std::vector<ForwardActivations> forward(const std::vector<Sentence>& batch,
                                        const ModelParams& params, const ContextStore* store,
                                        bool training, std::uint64_t seed) {
  std::vector<ForwardActivations> out;
  out.reserve(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (training) {
      Rng rng(combine_seed(seed, b));
      out.push_back(forward_one(batch[b], params, store, &rng));
    } else {
      out.push_back(forward_one(batch[b], params, store, nullptr));
    }
  }
  return out;
}

std::vector<int> lm_forward_targets(const Sentence& s) {
  std::vector<int> t;
  for (std::size_t i = 1; i < s.size(); ++i) t.push_back(s.tokens[i].word_id);
  t.push_back(Vocab::kEos);
  return t;
}

std::vector<int> lm_backward_targets(const Sentence& s) {
  std::vector<int> t{Vocab::kBos};
  for (std::size_t i = 0; i + 1 < s.size(); ++i) t.push_back(s.tokens[i].word_id);
  return t;
}

namespace {

std::size_t total_tokens(const std::vector<Sentence>& batch) {
  std::size_t n = 0;
  for (const auto& s : batch) n += s.size();
  return n;
}

void check_batch(const std::vector<ForwardActivations>& acts, const std::vector<Sentence>& batch) {
  if (acts.size() != batch.size())
    throw ValidationError("activations do not match the batch size");
  for (std::size_t b = 0; b < batch.size(); ++b)
    if (acts[b].length() != batch[b].size() || batch[b].gold_labels.size() != batch[b].size())
      throw ValidationError("activation length mismatch for sentence " + batch[b].sid);
}

}  // namespace

double compute_loss(const std::vector<ForwardActivations>& acts,
                    const std::vector<Sentence>& batch, double gamma) {
  if (gamma < 0.0) throw ValidationError("gamma must be non-negative");
  check_batch(acts, batch);
  const double n = static_cast<double>(total_tokens(batch));
  if (n == 0) return 0.0;
  double detect = 0.0, lm_f = 0.0, lm_b = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& a = acts[b];
    const auto& s = batch[b];
    const auto fwd = lm_forward_targets(s);
    const auto bwd = lm_backward_targets(s);
    for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(s.size()); ++t) {
      const auto ti = static_cast<std::size_t>(t);
      detect += nll(a.detect_logits.col(t), static_cast<int>(s.gold_labels[ti]));
      if (gamma != 0.0) {
        lm_f += nll(a.lm_fwd_logits.col(t), fwd[ti]);
        lm_b += nll(a.lm_bwd_logits.col(t), bwd[ti]);
      }
    }
  }
  return detect / n + gamma * (lm_f / n + lm_b / n);
}

// ---- backward ----------------------------------------------------------------

Gradients backward(const std::vector<ForwardActivations>& acts,
                   const std::vector<Sentence>& batch, double gamma, const ModelParams& p) {
  check_batch(acts, batch);
  const ModelConfig& cfg = p.config;
  Gradients g = p.zeros_like();
  const double n = static_cast<double>(total_tokens(batch));
  if (n == 0) return g;
  const Eigen::Index hw = cfg.word_hidden;
  const Eigen::Index hc = cfg.char_hidden;

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const ForwardActivations& a = acts[b];
    const ForwardCache& c = a.cache;
    const Sentence& s = batch[b];
    const auto T = static_cast<Eigen::Index>(s.size());
    if (c.char_fwd.size() != s.size() || c.word_inputs.cols() != T)
      throw ValidationError("forward cache missing for sentence " + s.sid);

    // Detection head.
    Eigen::MatrixXd d_logits = a.label_distribution;
    for (Eigen::Index t = 0; t < T; ++t) d_logits(static_cast<int>(s.gold_labels[static_cast<std::size_t>(t)]), t) -= 1.0;
    d_logits /= n;
    g.detect_w.noalias() += d_logits * c.detect_hidden.transpose();
    g.detect_b += d_logits.rowwise().sum();
    Eigen::MatrixXd d_pre = (p.detect_w.transpose() * d_logits).cwiseProduct(
        (1.0 - c.detect_hidden.array().square()).matrix());
    g.hidden_w.noalias() += d_pre * a.lstm_output.transpose();
    g.hidden_b += d_pre.rowwise().sum();
    Eigen::MatrixXd d_out = p.hidden_w.transpose() * d_pre;

    Eigen::MatrixXd d_o = d_out.topRows(2 * hw);
    Eigen::MatrixXd d_context;
    if (cfg.integration == Integration::Output) d_context = d_out.bottomRows(cfg.context_dim);

    // Language-model heads.
    if (gamma != 0.0) {
      auto lm_head = [&](const Eigen::MatrixXd& logits, const Eigen::MatrixXd& hidden,
                         const std::vector<int>& targets, const Eigen::MatrixXd& proj_w,
                         const Eigen::MatrixXd& out_w, Eigen::MatrixXd& g_proj_w,
                         Eigen::MatrixXd& g_proj_b, Eigen::MatrixXd& g_out_w,
                         Eigen::MatrixXd& g_out_b, Eigen::Index row0) {
        Eigen::MatrixXd d_l = column_softmax(logits);
        for (Eigen::Index t = 0; t < T; ++t) d_l(targets[static_cast<std::size_t>(t)], t) -= 1.0;
        d_l *= gamma / n;
        g_out_w.noalias() += d_l * hidden.transpose();
        g_out_b += d_l.rowwise().sum();
        Eigen::MatrixXd d_h = (out_w.transpose() * d_l).cwiseProduct(
            (1.0 - hidden.array().square()).matrix());
        g_proj_w.noalias() += d_h * a.lstm_output.middleRows(row0, hw).transpose();
        g_proj_b += d_h.rowwise().sum();
        d_o.middleRows(row0, hw).noalias() += proj_w.transpose() * d_h;
      };
      lm_head(a.lm_fwd_logits, c.lm_fwd_hidden, lm_forward_targets(s), p.lm_fwd_proj_w,
              p.lm_fwd_out_w, g.lm_fwd_proj_w, g.lm_fwd_proj_b, g.lm_fwd_out_w, g.lm_fwd_out_b, 0);
      lm_head(a.lm_bwd_logits, c.lm_bwd_hidden, lm_backward_targets(s), p.lm_bwd_proj_w,
              p.lm_bwd_out_w, g.lm_bwd_proj_w, g.lm_bwd_proj_b, g.lm_bwd_out_w, g.lm_bwd_out_b, hw);
    }

    // Word bi-LSTM.
    const Eigen::MatrixXd d_h = d_o.cwiseProduct(a.output_mask);
    Eigen::MatrixXd d_in =
        lstm_backward(p.word_fwd, c.word_inputs, c.word_fwd, d_h.topRows(hw), g.word_fwd);
    d_in += reversed(lstm_backward(p.word_bwd, reversed(c.word_inputs), c.word_bwd,
                                   reversed(d_h.bottomRows(hw)), g.word_bwd));
    d_in = d_in.cwiseProduct(a.input_mask);

    if (cfg.integration == Integration::Input) d_context = d_in.bottomRows(cfg.context_dim);

    for (Eigen::Index t = 0; t < T; ++t) {
      const auto ti = static_cast<std::size_t>(t);
      const Token& tok = s.tokens[ti];
      g.word_emb.row(tok.word_id) += d_in.col(t).head(cfg.word_dim).transpose();

      // Character bi-LSTM: only the final states feed the word input.
      const Eigen::Index nc = c.char_inputs[ti].cols();
      Eigen::MatrixXd dh_f = Eigen::MatrixXd::Zero(hc, nc);
      Eigen::MatrixXd dh_b = Eigen::MatrixXd::Zero(hc, nc);
      dh_f.col(nc - 1) = d_in.col(t).segment(cfg.word_dim, hc);
      dh_b.col(nc - 1) = d_in.col(t).segment(cfg.word_dim + hc, hc);
      Eigen::MatrixXd d_chars =
          lstm_backward(p.char_fwd, c.char_inputs[ti], c.char_fwd[ti], dh_f, g.char_fwd);
      d_chars += reversed(lstm_backward(p.char_bwd, reversed(c.char_inputs[ti]), c.char_bwd[ti],
                                        dh_b, g.char_bwd));
      if (c.char_masks[ti].size() > 0) d_chars = d_chars.cwiseProduct(c.char_masks[ti]);
      for (Eigen::Index k = 0; k < nc; ++k)
        g.char_emb.row(tok.char_ids[static_cast<std::size_t>(k)]) += d_chars.col(k).transpose();
    }

    // Context vectors are frozen; only the layer mix receives gradient.
    if (cfg.has_mix() && d_context.size() > 0) {
      double d_scale = 0.0;
      for (Eigen::Index t = 0; t < T; ++t)
        mix_layers_backward(c.context_layers[static_cast<std::size_t>(t)], p.mix_scalars.col(0),
                            p.mix_scale(0, 0), d_context.col(t), g.mix_scalars.col(0), d_scale);
      g.mix_scale(0, 0) += d_scale;
    }
  }
  g.word_emb.row(Vocab::kPad).setZero();
  g.char_emb.row(Vocab::kPad).setZero();
  return g;
}

// ---- prediction --------------------------------------------------------------

std::vector<Label> labels_from_distribution(const Eigen::MatrixXd& distribution) {
  std::vector<Label> out;
  out.reserve(static_cast<std::size_t>(distribution.cols()));
  for (Eigen::Index t = 0; t < distribution.cols(); ++t)
    out.push_back(distribution(1, t) > 0.5 ? Label::Incorrect : Label::Correct);
  return out;
}

std::vector<Label> predict(const Sentence& sentence, const ModelParams& params,
                           const ContextStore* store) {
  auto acts = forward({sentence}, params, store, false, 0);
  return labels_from_distribution(acts.front().label_distribution);
}

}  // namespace ged
