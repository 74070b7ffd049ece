#include "doctest.h"

#include <cmath>

#include "ged/error.hpp"
#include "ged/lstm.hpp"
#include "ged/model.hpp"
#include "ged/random.hpp"
#include "ged/training.hpp"
#include "support.hpp"

using namespace ged;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Independent scalar-loop cell.
void oracle_cell(const LstmParams& p, const std::vector<double>& x, const std::vector<double>& hp,
                 const std::vector<double>& cp, std::vector<double>& h, std::vector<double>& c) {
  const int H = p.hidden_dim(), I = p.input_dim();
  h.assign(H, 0.0);
  c.assign(H, 0.0);
  for (int k = 0; k < H; ++k) {
    double pre[4];
    for (int gate = 0; gate < 4; ++gate) {
      const int r = gate * H + k;
      double s = p.b(r, 0);
      for (int j = 0; j < I; ++j) s += p.W(r, j) * x[j];
      for (int j = 0; j < H; ++j) s += p.U(r, j) * hp[j];
      pre[gate] = s;
    }
    const double i = sig(pre[0]), f = sig(pre[1]), o = sig(pre[2]), g = std::tanh(pre[3]);
    c[k] = f * cp[k] + i * g;
    h[k] = o * std::tanh(c[k]);
  }
}

ModelConfig small_config(int vocab, int chars, Integration integ = Integration::None) {
  ModelConfig c;
  c.word_vocab = vocab;
  c.char_vocab = chars;
  c.word_dim = 6;
  c.char_dim = 3;
  c.char_hidden = 3;
  c.word_hidden = 5;
  c.hidden_dim = 4;
  c.lm_hidden = 4;
  c.integration = integ;
  if (integ != Integration::None) {
    c.context_layers = 3;
    c.context_dim = 4;
  }
  return c;
}

}  // namespace

TEST_CASE("lstm cell") {
  SUBCASE("zero weights, zero state") {
    LstmParams p(3, 2);
    auto [h, c] = lstm_cell_forward(p, Eigen::Vector3d(1, -2, 3), Eigen::Vector2d::Zero(),
                                    Eigen::Vector2d::Zero());
    CHECK(h.isZero(0));
    CHECK(c.isZero(0));
  }
  SUBCASE("scalar hand evaluation") {
    LstmParams p(1, 1);
    auto [h, c] = lstm_cell_forward(p, Eigen::VectorXd::Constant(1, 0.7),
                                    Eigen::VectorXd::Constant(1, 0.3), Eigen::VectorXd::Ones(1));
    CHECK(c(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(h(0) == doctest::Approx(0.23106).epsilon(1e-5));
    CHECK(h(0) == doctest::Approx(0.5 * std::tanh(0.5)).epsilon(1e-15));
  }
  SUBCASE("random 4-dim cell matches scalar oracle") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
      LstmParams p(5, 4);
      p.init(rng);
      for (Eigen::Index i = 0; i < p.b.size(); ++i) p.b.data()[i] = rng.uniform(-1, 1);
      std::vector<double> x(5), hp(4), cp(4), h, c;
      for (auto& v : x) v = rng.uniform(-2, 2);
      for (auto& v : hp) v = rng.uniform(-1, 1);
      for (auto& v : cp) v = rng.uniform(-1, 1);
      oracle_cell(p, x, hp, cp, h, c);
      auto [eh, ec] = lstm_cell_forward(p, Eigen::Map<Eigen::VectorXd>(x.data(), 5),
                                        Eigen::Map<Eigen::VectorXd>(hp.data(), 4),
                                        Eigen::Map<Eigen::VectorXd>(cp.data(), 4));
      for (int k = 0; k < 4; ++k) {
        CHECK(std::fabs(eh(k) - h[k]) < 1e-12);
        CHECK(std::fabs(ec(k) - c[k]) < 1e-12);
      }
    }
  }
  SUBCASE("non-finite input") {
    LstmParams p(1, 1);
    CHECK_THROWS_AS(lstm_cell_forward(p, Eigen::VectorXd::Constant(1, NAN), Eigen::VectorXd::Zero(1),
                                      Eigen::VectorXd::Zero(1)),
                    NumericError);
  }
  SUBCASE("unrolled forward equals repeated cells") {
    Rng rng(4);
    LstmParams p(3, 2);
    p.init(rng);
    Eigen::MatrixXd xs(3, 4);
    for (Eigen::Index i = 0; i < xs.size(); ++i) xs.data()[i] = rng.uniform(-1, 1);
    const LstmTrace tr = lstm_forward(p, xs);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(2), c = Eigen::VectorXd::Zero(2);
    for (int t = 0; t < 4; ++t) {
      std::tie(h, c) = lstm_cell_forward(p, xs.col(t), h, c);
      CHECK((tr.hidden.col(t) - h).cwiseAbs().maxCoeff() < 1e-14);
      CHECK((tr.cells.col(t) - c).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("loss identities") {
  // Vocab of 10 words: 4 specials plus 6.
  Vocab v = build_vocab({make_sentence("v", {"a", "b", "c", "d", "e", "f"})});
  REQUIRE(v.word_count() == 10);
  const ModelConfig cfg = small_config(10, static_cast<int>(v.char_count()));

  SUBCASE("uniform predictions") {
    const ModelParams zero(cfg);
    const std::vector<Sentence> batch = {encode(make_sentence("s", {"a", "b"}), v)};
    const auto acts = forward(batch, zero, nullptr, false, 0);
    const double loss = compute_loss(acts, batch, 0.1);
    CHECK(loss == doctest::Approx(std::log(2.0) + 0.1 * 2 * std::log(10.0)).epsilon(1e-12));
    CHECK(loss == doctest::Approx(1.15367).epsilon(1e-5));
    CHECK(compute_loss(acts, batch, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("perfect predictions") {
    ModelParams p(cfg);
    p.detect_b(0, 0) = 1000.0;
    p.lm_fwd_out_b(Vocab::kEos, 0) = 1000.0;
    p.lm_bwd_out_b(Vocab::kBos, 0) = 1000.0;
    const std::vector<Sentence> batch = {encode(make_sentence("s", {"a"}), v)};
    const auto acts = forward(batch, p, nullptr, false, 0);
    CHECK(compute_loss(acts, batch, 0.1) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("gamma 0 equals detection loss; LM blocks have zero gradient") {
    const ModelParams p = ModelParams::initialize(cfg, 3);
    std::vector<Sentence> batch = {encode(make_sentence("s", {"a", "c", "zzz"}), v)};
    batch[0].gold_labels[1] = Label::Incorrect;
    const auto acts = forward(batch, p, nullptr, true, 5);
    double detect = 0.0;
    for (int t = 0; t < 3; ++t)
      detect -= std::log(acts[0].label_distribution(static_cast<int>(batch[0].gold_labels[t]), t));
    CHECK(compute_loss(acts, batch, 0.0) == doctest::Approx(detect / 3).epsilon(1e-12));
    const Gradients g = backward(acts, batch, 0.0, p);
    CHECK(g.lm_fwd_out_w.isZero(0));
    CHECK(g.lm_bwd_out_w.isZero(0));
    CHECK(g.lm_fwd_proj_w.isZero(0));
    CHECK(g.lm_bwd_proj_b.isZero(0));
    CHECK(g.word_emb.row(Vocab::kPad).isZero(0));
  }
  SUBCASE("LM targets use BOS and EOS") {
    const Sentence s = encode(make_sentence("s", {"a", "b", "c"}), v);
    CHECK(lm_forward_targets(s) == std::vector<int>{v.word_id("b"), v.word_id("c"), Vocab::kEos});
    CHECK(lm_backward_targets(s) == std::vector<int>{Vocab::kBos, v.word_id("a"), v.word_id("b")});
  }
}

TEST_CASE("forward contracts") {
  Vocab v = build_vocab({make_sentence("v", {"the", "cat", "sat", "on", "mat"})});
  const std::vector<Sentence> batch = {encode(make_sentence("s0", {"the", "cat", "sat"}), v),
                                       encode(make_sentence("s1", {"on", "the", "big", "mat", "."}), v)};
  const ModelConfig cfg = small_config(static_cast<int>(v.word_count()), static_cast<int>(v.char_count()));
  const ModelParams p = ModelParams::initialize(cfg, 1);

  SUBCASE("distributions sum to one") {
    for (bool training : {false, true})
      for (const auto& a : forward(batch, p, nullptr, training, 9))
        for (Eigen::Index t = 0; t < a.label_distribution.cols(); ++t)
          CHECK(std::fabs(a.label_distribution.col(t).sum() - 1.0) < 1e-6);
  }
  SUBCASE("store ignored without integration; inference deterministic") {
    const ContextStore store = make_pseudo_store(batch, 3, 4, 1);
    const auto a = forward(batch, p, nullptr, false, 0);
    const auto b = forward(batch, p, &store, false, 123);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].label_distribution == b[i].label_distribution);
      CHECK(a[i].lm_fwd_logits == b[i].lm_fwd_logits);
      CHECK(a[i].word_hidden == b[i].word_hidden);
    }
  }
  SUBCASE("a sentence's activations do not depend on its batch mates") {
    const auto alone = forward({batch[0]}, p, nullptr, false, 0);
    const auto together = forward(batch, p, nullptr, false, 0);
    CHECK(alone[0].label_distribution == together[0].label_distribution);
    CHECK(alone[0].lstm_output.cols() == 3);
  }
  SUBCASE("dropout masks") {
    const auto a = forward(batch, p, nullptr, true, 42);
    const auto b = forward(batch, p, nullptr, true, 42);
    CHECK(a[1].input_mask == b[1].input_mask);
    for (Eigen::Index i = 0; i < a[1].input_mask.size(); ++i) {
      const double m = a[1].input_mask.data()[i];
      CHECK((m == 0.0 || m == 2.0));
    }
    CHECK(forward(batch, p, nullptr, false, 42)[1].input_mask.isOnes(0));
  }
  SUBCASE("errors") {
    Sentence empty;
    empty.sid = "e";
    CHECK_THROWS_AS(forward({empty}, p, nullptr, false, 0), ValidationError);
    const ModelParams pin = ModelParams::initialize(
        small_config(cfg.word_vocab, cfg.char_vocab, Integration::Input), 1);
    CHECK_THROWS_AS(forward(batch, pin, nullptr, false, 0), ValidationError);
    const ContextStore partial = make_pseudo_store({batch[0]}, 3, 4, 1);
    CHECK_THROWS_AS(forward(batch, pin, &partial, false, 0), LookupError);
  }
  SUBCASE("input and output integration give identically shaped distributions") {
    const ContextStore store = make_pseudo_store(batch, 3, 4, 1);
    const ModelParams pin = ModelParams::initialize(
        small_config(cfg.word_vocab, cfg.char_vocab, Integration::Input), 1);
    const ModelParams pout = ModelParams::initialize(
        small_config(cfg.word_vocab, cfg.char_vocab, Integration::Output), 1);
    const auto ai = forward(batch, pin, &store, false, 0);
    const auto ao = forward(batch, pout, &store, false, 0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      CHECK(ai[i].label_distribution.rows() == ao[i].label_distribution.rows());
      CHECK(ai[i].label_distribution.cols() == ao[i].label_distribution.cols());
      CHECK(ai[i].input_embed.rows() == cfg.word_dim + 2 * cfg.char_hidden + 4);
      CHECK(ao[i].lstm_output.rows() == 2 * cfg.word_hidden + 4);
    }
  }
}

TEST_CASE("both integration modes train on a fixed batch") {
  Vocab v = build_vocab({make_sentence("v", {"the", "cat", "sat", "on", "mat", "a"})});
  std::vector<Sentence> batch = {encode(make_sentence("s0", {"the", "cat", "sat"}), v),
                                 encode(make_sentence("s1", {"on", "a", "mat"}), v)};
  batch[1].gold_labels[1] = Label::Incorrect;
  const ContextStore store = make_pseudo_store(batch, 3, 4, 2);
  for (Integration integ : {Integration::None, Integration::Input, Integration::Output}) {
    CAPTURE(to_string(integ));
    ModelParams p = ModelParams::initialize(
        small_config(static_cast<int>(v.word_count()), static_cast<int>(v.char_count()), integ), 3);
    auto eval_loss = [&] { return compute_loss(forward(batch, p, &store, false, 0), batch, 0.1); };
    const double before = eval_loss();
    AdaDeltaState state(p);
    for (int step = 0; step < 10; ++step) {
      const auto acts = forward(batch, p, &store, true, static_cast<std::uint64_t>(step));
      adadelta_step(state, backward(acts, batch, 0.1, p), p, 1.0, 0.95, 1e-6);
    }
    CHECK(eval_loss() < before);
  }
}

TEST_CASE("zero gamma leaves LM parameters unchanged") {
  auto s = testing::tiny_setup(Integration::None, 1, 0, 4);
  ModelParams p = ModelParams::initialize(s.config, 4);
  const ModelParams before = p;
  AdaDeltaState state(p);
  for (int step = 0; step < 3; ++step) {
    const auto acts = forward(s.batch, p, nullptr, true, static_cast<std::uint64_t>(step));
    adadelta_step(state, backward(acts, s.batch, 0.0, p), p, 1.0, 0.95, 1e-6);
  }
  CHECK(p.lm_fwd_out_w == before.lm_fwd_out_w);
  CHECK(p.lm_bwd_out_b == before.lm_bwd_out_b);
  CHECK(p.lm_fwd_proj_w == before.lm_fwd_proj_w);
  CHECK(p.lm_bwd_proj_w == before.lm_bwd_proj_w);
  CHECK(p.detect_w != before.detect_w);
  CHECK(p.word_emb.row(Vocab::kPad).isZero(0));
}

TEST_CASE("gradients match finite differences (tiny config, one seed)") {
  for (Integration integ : {Integration::None, Integration::Input, Integration::Output}) {
    for (double gamma : {0.0, 0.1}) {
      CAPTURE(to_string(integ));
      CAPTURE(gamma);
      auto s = testing::tiny_setup(integ, 3, 3, 1);
      const ContextStore store = make_pseudo_store(s.batch, 3, 3, 1);
      ModelParams p = ModelParams::initialize(s.config, 1);
      if (p.config.has_mix()) {
        p.mix_scalars << 0.2, -0.4, 0.1;
        p.mix_scale(0, 0) = 1.1;
      }
      const auto r = testing::check_gradients(p, s.batch, &store, gamma, 7);
      CAPTURE(r.worst);
      CHECK(r.max_rel_error < 1e-4);
      CHECK(r.checked == p.parameter_count());
    }
  }
}

TEST_CASE("predict threshold") {
  Eigen::MatrixXd d(2, 3);
  d << 0.4, 0.5, 0.9, 0.6, 0.5, 0.1;
  CHECK(labels_from_distribution(d) ==
        std::vector<Label>{Label::Incorrect, Label::Correct, Label::Correct});
  Vocab v = build_vocab({make_sentence("v", {"a", "b"})});
  const ModelConfig cfg = small_config(static_cast<int>(v.word_count()), static_cast<int>(v.char_count()));
  const ModelParams zero(cfg);  // exact (0.5, 0.5) everywhere
  CHECK(predict(encode(make_sentence("s", {"a", "b"}), v), zero, nullptr) ==
        std::vector<Label>{Label::Correct, Label::Correct});
}

TEST_CASE("parameter registry") {
  const ModelConfig cfg = small_config(8, 8, Integration::Input);
  const ModelParams p = ModelParams::initialize(cfg, 1);
  std::vector<std::string> names;
  p.visit([&](const std::string& n, const Eigen::MatrixXd&) { names.push_back(n); });
  std::vector<std::string> sorted = names;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  CHECK(std::count(names.begin(), names.end(), "mix.scalars") == 1);
  CHECK(p.mix_scale(0, 0) == 1.0);
  CHECK(p.mix_scalars.isZero(0));
  CHECK(p.word_fwd.input_dim() == cfg.word_dim + 2 * cfg.char_hidden + cfg.context_dim);
  ModelConfig defaults;
  CHECK(defaults.word_dim == 300);
  CHECK(defaults.char_dim == 100);
  CHECK(defaults.char_hidden == 100);
  CHECK(defaults.word_hidden == 300);
  CHECK(defaults.hidden_dim == 50);
  CHECK(defaults.keep_prob == 0.5);
}
