// ged: prepare, train, predict, evaluate and analyze from one JSON config.
//
// Exit codes: 0 ok, 2 input error, 3 configuration error, 4 checkpoint mismatch.

#include <zlib.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ged/checkpoint.hpp"
#include "ged/corpus.hpp"
#include "ged/edit_analysis.hpp"
#include "ged/embeddings.hpp"
#include "ged/error.hpp"
#include "ged/evaluation.hpp"
#include "ged/model.hpp"
#include "ged/training.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitConfig = 3;
constexpr int kExitMismatch = 4;

struct CliError : std::runtime_error {
  CliError(int c, const std::string& what) : std::runtime_error(what), code(c) {}
  int code;
};

void log(const std::string& msg) { std::cerr << "[ged] " << msg << "\n"; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(kExitInput, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CliError(kExitInput, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw CliError(kExitInput, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string crc_hex(const std::string& bytes) {
  const auto c = crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(bytes.data()),
                       static_cast<uInt>(bytes.size()));
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(c));
  return buf;
}

// Runs `fn` with parse errors reported as "<file>:<line>: ..." and exit 2.
template <class F>
auto with_file(const fs::path& path, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ged::ParseError& e) {
    std::string msg = e.what();
    if (e.line()) msg = msg.substr(msg.find(": ") + 2);
    throw CliError(kExitInput, path.string() + ":" + std::to_string(e.line()) + ": " + msg);
  } catch (const ged::FormatError& e) {
    throw CliError(kExitInput, path.string() + ": " + e.what());
  } catch (const ged::ValidationError& e) {
    throw CliError(kExitInput, path.string() + ": " + e.what());
  }
}

// ---- configuration --------------------------------------------------------------

struct DatasetSpec {
  std::string name;
  std::optional<fs::path> m2;
  std::optional<fs::path> original, corrected;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> integration;
  std::optional<std::string> store;
  std::optional<int> annotator;
  std::optional<std::string> format;
};

struct RunConfig {
  fs::path base;
  std::vector<DatasetSpec> datasets;
  std::string train_set = "train";
  std::string dev_set = "dev";
  std::vector<std::string> test_sets;
  fs::path prepared_dir = "prepared";
  fs::path checkpoint_dir = "checkpoints";
  std::optional<fs::path> store, static_vectors, lexicon;
  std::string provider_kind = "Pseudo";
  ged::ModelConfig model;
  ged::TrainConfig train;
  ged::ReportFormat format = ged::ReportFormat::Tsv;
  ged::Averaging averaging = ged::Averaging::Micro;

  const DatasetSpec& dataset(const std::string& name) const {
    for (const auto& d : datasets)
      if (d.name == name) return d;
    throw CliError(kExitConfig, "config names unknown dataset '" + name + "'");
  }
};

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

RunConfig load_config(const std::optional<std::string>& path, const Overrides& ov) {
  RunConfig rc;
  json j = json::object();
  if (path) {
    rc.base = fs::path(*path).parent_path();
    const std::string text = read_file(*path);
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw CliError(kExitConfig, *path + ": " + e.what());
    }
  }
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : rc.base / p; };
  try {
    const json paths = j.value("paths", json::object());
    if (paths.contains("prepared")) rc.prepared_dir = resolve(paths.at("prepared").get<std::string>());
    else rc.prepared_dir = rc.base / rc.prepared_dir;
    if (paths.contains("checkpoint_dir"))
      rc.checkpoint_dir = resolve(paths.at("checkpoint_dir").get<std::string>());
    else rc.checkpoint_dir = rc.base / rc.checkpoint_dir;
    if (paths.contains("store")) rc.store = resolve(paths.at("store").get<std::string>());
    if (paths.contains("static_vectors"))
      rc.static_vectors = resolve(paths.at("static_vectors").get<std::string>());
    if (paths.contains("lexicon")) rc.lexicon = resolve(paths.at("lexicon").get<std::string>());

    for (const auto& d : j.value("datasets", json::array())) {
      DatasetSpec ds;
      ds.name = d.at("name").get<std::string>();
      if (d.contains("m2")) ds.m2 = resolve(d.at("m2").get<std::string>());
      if (d.contains("original")) ds.original = resolve(d.at("original").get<std::string>());
      if (d.contains("corrected")) ds.corrected = resolve(d.at("corrected").get<std::string>());
      if (ds.m2.has_value() == (ds.original.has_value() || ds.corrected.has_value()) ||
          ds.original.has_value() != ds.corrected.has_value())
        throw CliError(kExitConfig, "dataset '" + ds.name +
                                        "' needs either \"m2\" or both \"original\" and \"corrected\"");
      rc.datasets.push_back(ds);
    }
    take(j, "train_set", rc.train_set);
    take(j, "dev_set", rc.dev_set);
    take(j, "test_sets", rc.test_sets);
    take(j, "provider_kind", rc.provider_kind);

    const json m = j.value("model", json::object());
    take(m, "word_dim", rc.model.word_dim);
    take(m, "char_dim", rc.model.char_dim);
    take(m, "char_hidden", rc.model.char_hidden);
    take(m, "word_hidden", rc.model.word_hidden);
    take(m, "hidden_dim", rc.model.hidden_dim);
    take(m, "lm_hidden", rc.model.lm_hidden);
    take(m, "keep_prob", rc.model.keep_prob);
    take(m, "char_dropout", rc.model.char_dropout);

    const json t = j.value("training", json::object());
    take(t, "gamma", rc.train.gamma);
    take(t, "batch_size", rc.train.batch_size);
    take(t, "learning_rate", rc.train.learning_rate);
    take(t, "patience", rc.train.patience);
    take(t, "rho", rc.train.rho);
    take(t, "epsilon", rc.train.epsilon);
    take(t, "max_epochs", rc.train.max_epochs);

    take(j, "seed", rc.train.seed);
    take(j, "annotator", rc.train.annotator);
    std::string integration = "none", format = "tsv", averaging = "micro";
    take(j, "integration", integration);
    take(j, "format", format);
    take(j, "averaging", averaging);

    if (ov.seed) rc.train.seed = *ov.seed;
    if (ov.annotator) rc.train.annotator = *ov.annotator;
    if (ov.integration) integration = *ov.integration;
    if (ov.format) format = *ov.format;
    if (ov.store) rc.store = fs::path(*ov.store);

    rc.train.integration = ged::parse_integration(integration);
    rc.model.integration = rc.train.integration;
    rc.format = ged::parse_report_format(format);
    if (averaging == "micro") rc.averaging = ged::Averaging::Micro;
    else if (averaging == "macro") rc.averaging = ged::Averaging::Macro;
    else throw CliError(kExitConfig, "averaging must be micro or macro, got '" + averaging + "'");
    ged::parse_provider_kind(rc.provider_kind);
    rc.train.validate();
  } catch (const json::exception& e) {
    throw CliError(kExitConfig, std::string("config: ") + e.what());
  } catch (const ged::Error& e) {
    throw CliError(kExitConfig, std::string("config: ") + e.what());
  }
  return rc;
}

// ---- prepared artifacts ---------------------------------------------------------

std::string sid_prefix(const std::string& name) { return name + "-"; }

std::string vocab_to_text(const ged::Vocab& v) {
  std::string out;
  for (const auto& w : v.words()) out += "w\t" + w + "\n";
  char buf[16];
  for (const auto& c : v.chars()) {
    std::snprintf(buf, sizeof buf, "%X", static_cast<unsigned>(c.at(0)));
    out += std::string("c\t") + buf + "\n";
  }
  return out;
}

ged::Vocab vocab_from_text(const std::string& text) {
  std::vector<std::string> words;
  std::vector<std::u32string> chars;
  std::size_t line_no = 0;
  for (const auto& line : ged::split_lines(text)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.size() < 3 || line[1] != '\t' || (line[0] != 'w' && line[0] != 'c'))
      throw ged::ParseError("malformed vocabulary entry", line_no);
    if (line[0] == 'w') {
      words.push_back(line.substr(2));
    } else {
      try {
        chars.push_back(std::u32string(1, static_cast<char32_t>(std::stoul(line.substr(2), nullptr, 16))));
      } catch (const std::exception&) {
        throw ged::ParseError("malformed character code", line_no);
      }
    }
  }
  return ged::Vocab::from_lists(words, chars);
}

std::vector<ged::AnnotatedSentence> read_dataset(const DatasetSpec& ds, const ged::Lexicon& lexicon) {
  if (ds.m2) {
    const std::string text = read_file(*ds.m2);
    return with_file(*ds.m2, [&] { return ged::parse_m2(text, sid_prefix(ds.name)); });
  }
  const std::string orig = read_file(*ds.original), corr = read_file(*ds.corrected);
  auto orig_lines = ged::split_lines(orig), corr_lines = ged::split_lines(corr);
  while (!orig_lines.empty() && orig_lines.back().empty()) orig_lines.pop_back();
  while (!corr_lines.empty() && corr_lines.back().empty()) corr_lines.pop_back();
  return with_file(*ds.original,
                   [&] { return ged::annotate_corpus(orig_lines, corr_lines, lexicon, sid_prefix(ds.name)); });
}

ged::Lexicon load_lexicon(const RunConfig& rc) {
  if (!rc.lexicon) return {};
  return ged::Lexicon::from_text(read_file(*rc.lexicon));
}

std::vector<ged::AnnotatedSentence> load_prepared(const RunConfig& rc, const std::string& name) {
  const fs::path p = rc.prepared_dir / (name + ".m2");
  if (!fs::exists(p)) throw CliError(kExitInput, p.string() + " not found; run 'ged prepare' first");
  const std::string text = read_file(p);
  return with_file(p, [&] { return ged::parse_m2(text, sid_prefix(name)); });
}

ged::Vocab load_prepared_vocab(const RunConfig& rc) {
  const fs::path p = rc.prepared_dir / "vocab.tsv";
  if (!fs::exists(p)) throw CliError(kExitInput, p.string() + " not found; run 'ged prepare' first");
  const std::string text = read_file(p);
  return with_file(p, [&] { return vocab_from_text(text); });
}

std::vector<int> annotators_of(const std::vector<ged::AnnotatedSentence>& recs) {
  std::vector<int> ids;
  for (const auto& r : recs)
    if (std::find(ids.begin(), ids.end(), r.annotator) == ids.end()) ids.push_back(r.annotator);
  std::sort(ids.begin(), ids.end());
  return ids;
}

struct EncodedSet {
  std::vector<ged::Sentence> sentences;
  std::vector<std::vector<std::optional<ged::TokenErrorInfo>>> types;
};

EncodedSet encode_set(const std::vector<ged::AnnotatedSentence>& recs, int annotator,
                      const ged::Vocab& vocab) {
  EncodedSet out;
  for (const auto& r : ged::select_annotator(recs, annotator)) {
    out.sentences.push_back(ged::encode(r.sentence, vocab));
    out.types.push_back(ged::token_error_info(r.sentence.tokens.size(), r.edits));
  }
  return out;
}

std::optional<ged::ContextStore> load_store(const RunConfig& rc, ged::Integration integration) {
  if (integration == ged::Integration::None) return std::nullopt;
  if (!rc.store)
    throw CliError(kExitConfig, "integration '" + std::string(ged::to_string(integration)) +
                                    "' requires a contextual store (--store or paths.store)");
  if (!fs::exists(*rc.store)) throw CliError(kExitInput, rc.store->string() + " not found");
  return with_file(*rc.store, [&] { return ged::ContextStore::load(rc.store->string()); });
}

// ---- commands -------------------------------------------------------------------

int cmd_prepare(const RunConfig& rc) {
  if (rc.datasets.empty()) throw CliError(kExitConfig, "config lists no datasets");
  rc.dataset(rc.train_set);
  for (const auto& ds : rc.datasets)
    for (const auto& p : {ds.m2, ds.original, ds.corrected})
      if (p && !fs::exists(*p)) throw CliError(kExitInput, p->string() + " not found");

  const ged::Lexicon lexicon = load_lexicon(rc);
  std::map<std::string, std::vector<ged::AnnotatedSentence>> sets;
  json inputs = json::array();
  for (const auto& ds : rc.datasets) {
    sets[ds.name] = read_dataset(ds, lexicon);
    for (const auto& p : {ds.m2, ds.original, ds.corrected}) {
      if (!p) continue;
      const std::string bytes = read_file(*p);
      inputs.push_back({{"dataset", ds.name}, {"path", p->string()}, {"bytes", bytes.size()},
                        {"crc32", crc_hex(bytes)}});
    }
  }
  std::vector<ged::Sentence> train_sentences;
  for (const auto& r : ged::select_annotator(sets.at(rc.train_set), rc.train.annotator))
    train_sentences.push_back(r.sentence);
  const ged::Vocab vocab = ged::build_vocab(train_sentences);

  // Every output is rendered before anything is written.
  std::map<std::string, std::string> outputs;
  outputs["vocab.tsv"] = vocab_to_text(vocab);
  for (const auto& [name, recs] : sets) {
    outputs[name + ".m2"] = ged::write_typed_m2(recs);
    std::string ids;
    for (const auto& r : ged::select_annotator(recs, rc.train.annotator)) {
      const ged::Sentence s = ged::encode(r.sentence, vocab);
      ids += s.sid + "\t";
      for (std::size_t t = 0; t < s.tokens.size(); ++t)
        ids += (t ? " " : "") + std::to_string(s.tokens[t].word_id);
      ids += "\t";
      for (auto l : s.gold_labels) ids += ged::to_string(l);
      ids += "\n";
    }
    outputs[name + ".ids.tsv"] = ids;
  }
  json manifest;
  manifest["inputs"] = inputs;
  manifest["annotator"] = rc.train.annotator;
  manifest["vocab"] = {{"words", vocab.word_count()}, {"chars", vocab.char_count()}};
  json outs = json::object();
  for (const auto& [name, content] : outputs) outs[name] = crc_hex(content);
  manifest["outputs"] = outs;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  manifest["created"] = stamp;

  fs::create_directories(rc.prepared_dir);
  for (const auto& [name, content] : outputs) write_atomic(rc.prepared_dir / name, content);
  write_atomic(rc.prepared_dir / "manifest.json", manifest.dump(2) + "\n");
  for (const auto& [name, recs] : sets)
    log("prepared " + name + ": " + std::to_string(annotators_of(recs).size()) + " annotator(s), " +
        std::to_string(ged::select_annotator(recs, rc.train.annotator).size()) + " sentences");
  log("vocabulary: " + std::to_string(vocab.word_count()) + " words, " +
      std::to_string(vocab.char_count()) + " characters");
  return 0;
}

int cmd_train(RunConfig rc) {
  const ged::Vocab vocab = load_prepared_vocab(rc);
  const auto store = load_store(rc, rc.train.integration);
  const auto train_set = encode_set(load_prepared(rc, rc.train_set), rc.train.annotator, vocab);
  const auto dev_set = encode_set(load_prepared(rc, rc.dev_set), rc.train.annotator, vocab);

  ged::ModelConfig mc = rc.model;
  mc.word_vocab = static_cast<int>(vocab.word_count());
  mc.char_vocab = static_cast<int>(vocab.char_count());
  if (store) {
    mc.context_layers = store->layers();
    mc.context_dim = store->dim();
    if (store->kind() != ged::parse_provider_kind(rc.provider_kind))
      log("note: store provider '" + std::string(ged::to_string(store->kind())) +
          "' differs from configured '" + rc.provider_kind + "'");
  }

  ged::ModelParams init;
  try {
    mc.validate();
    init = ged::ModelParams::initialize(mc, rc.train.seed);
  } catch (const ged::ConfigError& e) {
    throw CliError(kExitConfig, std::string("model config: ") + e.what());
  }
  if (rc.static_vectors) {
    const std::string text = read_file(*rc.static_vectors);
    init.word_emb = with_file(*rc.static_vectors, [&] {
                      return ged::load_static_vectors(text, vocab, mc.word_dim, rc.train.seed);
                    }).matrix;
  }

  log("training on " + std::to_string(train_set.sentences.size()) + " sentences, dev " +
      std::to_string(dev_set.sentences.size()) + ", integration " +
      std::string(ged::to_string(mc.integration)) + ", seed " + std::to_string(rc.train.seed));
  ged::TrainResult result;
  try {
    result = ged::train_from(std::move(init), train_set.sentences, dev_set.sentences, rc.train,
                             store ? &*store : nullptr, [](const ged::EpochRecord& e) {
                               char buf[160];
                               std::snprintf(buf, sizeof buf,
                                             "epoch %d loss %.4f dev P %.4f R %.4f F0.5 %.4f (%.1fs)",
                                             e.epoch, e.train_loss, e.dev_precision, e.dev_recall,
                                             e.dev_f05, e.seconds);
                               log(buf);
                             });
  } catch (const ged::ConfigError& e) {
    throw CliError(kExitConfig, e.what());
  }

  std::string history = "epoch\ttrain_loss\tdev_P\tdev_R\tdev_F05\tbest\n";
  char buf[160];
  for (std::size_t i = 0; i < result.history.epochs.size(); ++i) {
    const auto& e = result.history.epochs[i];
    std::snprintf(buf, sizeof buf, "%d\t%.6f\t%.4f\t%.4f\t%.4f\t%d\n", e.epoch, e.train_loss,
                  e.dev_precision, e.dev_recall, e.dev_f05,
                  static_cast<int>(i) == result.history.best_epoch ? 1 : 0);
    history += buf;
  }
  fs::create_directories(rc.checkpoint_dir);
  ged::save_checkpoint({result.params, rc.train, vocab}, (rc.checkpoint_dir / "model.ckpt").string());
  write_atomic(rc.checkpoint_dir / "history.tsv", history);
  if (result.history.best_epoch >= 0)
    log("best epoch " + std::to_string(result.history.epochs[result.history.best_epoch].epoch) +
        "; checkpoint written to " + (rc.checkpoint_dir / "model.ckpt").string());
  return 0;
}

ged::Checkpoint load_ckpt(const RunConfig& rc, const std::optional<std::string>& path) {
  const fs::path p = path ? fs::path(*path) : rc.checkpoint_dir / "model.ckpt";
  if (!fs::exists(p)) throw CliError(kExitInput, p.string() + " not found");
  try {
    return ged::load_checkpoint(p.string());
  } catch (const ged::Error& e) {
    throw CliError(kExitInput, p.string() + ": " + e.what());
  }
}

// Store for a loaded checkpoint; shape or mode disagreements are mismatches.
std::optional<ged::ContextStore> store_for(const RunConfig& rc, const Overrides& ov,
                                           const ged::Checkpoint& ck) {
  const auto& mc = ck.params.config;
  if (ov.integration && ged::parse_integration(*ov.integration) != mc.integration)
    throw CliError(kExitMismatch, "checkpoint was trained with integration '" +
                                      std::string(ged::to_string(mc.integration)) + "'");
  auto store = load_store(rc, mc.integration);
  if (store && (store->layers() != mc.context_layers || store->dim() != mc.context_dim))
    throw CliError(kExitMismatch, "store shape " + std::to_string(store->layers()) + "x" +
                                      std::to_string(store->dim()) + " does not match checkpoint " +
                                      std::to_string(mc.context_layers) + "x" +
                                      std::to_string(mc.context_dim));
  return store;
}

int cmd_evaluate(const RunConfig& rc, const Overrides& ov, const std::optional<std::string>& ckpt_path) {
  const ged::Checkpoint ck = load_ckpt(rc, ckpt_path);
  if (!(load_prepared_vocab(rc) == ck.vocab))
    throw CliError(kExitMismatch, "prepared vocabulary differs from the checkpoint vocabulary");
  auto store_for_ck = store_for(rc, ov, ck);
  const ged::ContextStore* store = store_for_ck ? &*store_for_ck : nullptr;
  if (rc.test_sets.empty()) throw CliError(kExitConfig, "config lists no test_sets");

  std::vector<ged::DatasetScores> rows;
  std::vector<ged::EvalCounts> counts;
  for (const auto& name : rc.test_sets) {
    const auto recs = load_prepared(rc, name);
    auto annotators = annotators_of(recs);
    if (ov.annotator) annotators = {*ov.annotator};
    for (std::size_t k = 0; k < annotators.size(); ++k) {
      const auto set = encode_set(recs, annotators[k], ck.vocab);
      ged::EvalCounts c;
      try {
        c = ged::evaluate_corpus(set.sentences, ck.params, store, &set.types);
      } catch (const ged::LookupError& e) {
        throw CliError(kExitConfig, std::string("store coverage: ") + e.what());
      }
      const std::string row = annotators.size() > 1 ? name + " " + std::to_string(k + 1) : name;
      rows.push_back({row, ged::f_beta(c, 0.5)});
      counts.push_back(c);
    }
  }
  std::cout << ged::render_scores(rows, rc.format) << "\n"
            << ged::render_recall(ged::aggregate_recall(counts, rc.averaging), rc.format);
  return 0;
}

int cmd_predict(const RunConfig& rc, const Overrides& ov, const std::optional<std::string>& ckpt_path,
                const std::string& input, const std::string& name) {
  const ged::Checkpoint ck = load_ckpt(rc, ckpt_path);
  auto store_for_ck = store_for(rc, ov, ck);
  if (!fs::exists(input)) throw CliError(kExitInput, input + " not found");
  const std::string text = read_file(input);
  std::vector<ged::Sentence> sentences;
  if (fs::path(input).extension() == ".m2") {
    for (const auto& r : with_file(input, [&] { return ged::parse_m2(text, sid_prefix(name)); }))
      if (sentences.empty() || sentences.back().sid != r.sentence.sid) sentences.push_back(r.sentence);
  } else {
    std::size_t line_no = 0, idx = 0;
    for (const auto& line : ged::split_lines(text)) {
      ++line_no;
      const auto words = ged::split_whitespace(line);
      if (words.empty()) continue;
      sentences.push_back(with_file(input, [&] {
        try {
          return ged::make_sentence(sid_prefix(name) + std::to_string(idx), words);
        } catch (const ged::ValidationError& e) {
          throw ged::ParseError(e.what(), line_no);
        }
      }));
      ++idx;
    }
  }
  std::string out;
  for (const auto& s : sentences) {
    const ged::Sentence enc = ged::encode(s, ck.vocab);
    std::vector<ged::Label> labels;
    try {
      labels = ged::predict(enc, ck.params, store_for_ck ? &*store_for_ck : nullptr);
    } catch (const ged::LookupError& e) {
      throw CliError(kExitConfig, std::string("store coverage: ") + e.what());
    }
    for (std::size_t t = 0; t < s.tokens.size(); ++t)
      out += s.tokens[t].surface + "\t" + std::string(ged::to_string(labels[t])) + "\n";
    out += "\n";
  }
  std::cout << out;
  return 0;
}

int cmd_analyze(const RunConfig& rc, const std::string& m2, const std::string& original,
                const std::string& corrected) {
  DatasetSpec ds{"analyze", std::nullopt, std::nullopt, std::nullopt};
  if (!m2.empty() == (!original.empty() || !corrected.empty()) || original.empty() != corrected.empty())
    throw CliError(kExitConfig, "analyze needs --m2 FILE or --original FILE --corrected FILE");
  if (!m2.empty()) ds.m2 = m2;
  else ds.original = original, ds.corrected = corrected;
  for (const auto& p : {ds.m2, ds.original, ds.corrected})
    if (p && !fs::exists(*p)) throw CliError(kExitInput, p->string() + " not found");
  const ged::Lexicon lexicon = load_lexicon(rc);
  auto recs = read_dataset(ds, lexicon);
  if (ds.m2) ged::annotate_records(recs, lexicon);

  std::map<std::string, int> tally;
  for (const auto& r : recs)
    for (const auto& e : r.edits)
      ++tally[std::string(1, ged::operation_letter(e.op)) + ":" + std::string(ged::to_string(e.etype))];
  std::cout << ged::write_typed_m2(recs);
  for (const auto& [type, n] : tally) log(type + "\t" + std::to_string(n));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Token-level grammatical error detection"};
  app.require_subcommand(1);

  std::optional<std::string> config_path, store, integration, format, ckpt;
  std::optional<std::uint64_t> seed;
  std::optional<int> annotator;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--integration", integration, "contextual integration")
      ->check(CLI::IsMember({"none", "input", "output"}));
  app.add_option("--store", store, "contextual vector store");
  app.add_option("--annotator", annotator, "annotator id")->check(CLI::NonNegativeNumber);
  app.add_option("--format", format, "report format")->check(CLI::IsMember({"tsv", "table"}));
  app.add_option("--checkpoint", ckpt, "checkpoint file (predict, evaluate)");

  auto* prepare = app.add_subcommand("prepare", "convert corpora into labeled, encoded files");
  auto* train = app.add_subcommand("train", "train a detector and write a checkpoint");
  auto* predict = app.add_subcommand("predict", "label tokens of a tokenized file");
  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on the test sets");
  auto* analyze = app.add_subcommand("analyze", "classify edits into operations and types");
  std::string input, name = "predict";
  predict->add_option("--input", input, "tokenized text (one sentence per line) or .m2")->required();
  predict->add_option("--name", name, "sentence id prefix matching the store");
  std::string m2, original, corrected;
  analyze->add_option("--m2", m2, "M2 file");
  analyze->add_option("--original", original, "original sentences");
  analyze->add_option("--corrected", corrected, "corrected sentences");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    const Overrides ov{seed, integration, store, annotator, format};
    const RunConfig rc = load_config(config_path, ov);
    if (*prepare) return cmd_prepare(rc);
    if (*train) return cmd_train(rc);
    if (*predict) return cmd_predict(rc, ov, ckpt, input, name);
    if (*evaluate) return cmd_evaluate(rc, ov, ckpt);
    return cmd_analyze(rc, m2, original, corrected);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code;
  } catch (const ged::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ged::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}
