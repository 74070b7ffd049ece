#include "ged/checkpoint.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ged/error.hpp"

namespace ged {

namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "GEDCKPT\n";
constexpr std::uint32_t kVersion = 1;

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::string_view in, std::size_t& pos, int bytes) {
  if (pos + static_cast<std::size_t>(bytes) > in.size()) throw FormatError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(i)]))
         << (8 * i);
  pos += static_cast<std::size_t>(bytes);
  return v;
}

std::uint32_t crc(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

json model_to_json(const ModelConfig& c) {
  return {{"word_vocab", c.word_vocab},       {"char_vocab", c.char_vocab},
          {"word_dim", c.word_dim},           {"char_dim", c.char_dim},
          {"char_hidden", c.char_hidden},     {"word_hidden", c.word_hidden},
          {"hidden_dim", c.hidden_dim},       {"lm_hidden", c.lm_hidden},
          {"integration", to_string(c.integration)},
          {"context_layers", c.context_layers}, {"context_dim", c.context_dim},
          {"keep_prob", c.keep_prob},         {"char_dropout", c.char_dropout}};
}

ModelConfig model_from_json(const json& j) {
  ModelConfig c;
  c.word_vocab = j.at("word_vocab").get<int>();
  c.char_vocab = j.at("char_vocab").get<int>();
  c.word_dim = j.at("word_dim").get<int>();
  c.char_dim = j.at("char_dim").get<int>();
  c.char_hidden = j.at("char_hidden").get<int>();
  c.word_hidden = j.at("word_hidden").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.lm_hidden = j.at("lm_hidden").get<int>();
  c.integration = parse_integration(j.at("integration").get<std::string>());
  c.context_layers = j.at("context_layers").get<int>();
  c.context_dim = j.at("context_dim").get<int>();
  c.keep_prob = j.at("keep_prob").get<double>();
  c.char_dropout = j.at("char_dropout").get<bool>();
  return c;
}

json train_to_json(const TrainConfig& t) {
  return {{"gamma", t.gamma},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"patience", t.patience},
          {"rho", t.rho},
          {"epsilon", t.epsilon},
          {"max_epochs", t.max_epochs},
          {"seed", t.seed},
          {"integration", to_string(t.integration)},
          {"annotator", t.annotator}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig t;
  t.gamma = j.at("gamma").get<double>();
  t.batch_size = j.at("batch_size").get<int>();
  t.learning_rate = j.at("learning_rate").get<double>();
  t.patience = j.at("patience").get<int>();
  t.rho = j.at("rho").get<double>();
  t.epsilon = j.at("epsilon").get<double>();
  t.max_epochs = j.at("max_epochs").get<int>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.integration = parse_integration(j.at("integration").get<std::string>());
  t.annotator = j.at("annotator").get<int>();
  return t;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json header;
  header["format"] = "ged-checkpoint";
  header["version"] = kVersion;
  header["model"] = model_to_json(ckpt.params.config);
  header["train"] = train_to_json(ckpt.train_config);
  header["vocab"]["words"] = ckpt.vocab.words();
  json chars = json::array();
  for (const auto& c : ckpt.vocab.chars()) chars.push_back(utf8_encode(c));
  header["vocab"]["chars"] = chars;
  json arrays = json::array();
  ckpt.params.visit([&](const std::string& name, const Eigen::MatrixXd& m) {
    arrays.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  });
  header["arrays"] = arrays;
  const std::string header_text = header.dump();

  std::string out(kMagic);
  put_le(out, kVersion, 4);
  put_le(out, header_text.size(), 8);
  out += header_text;
  ckpt.params.visit([&](const std::string&, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, m.data() + i, sizeof bits);
      put_le(out, bits, 8);
    }
  });
  put_le(out, crc(out), 4);
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 16 || bytes.substr(0, kMagic.size()) != kMagic)
    throw FormatError("not a checkpoint file (bad magic or truncated)");
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  std::size_t tail = bytes.size() - 4;
  if (crc(body) != static_cast<std::uint32_t>(get_le(bytes, tail, 4)))
    throw FormatError("checkpoint checksum mismatch (file truncated or corrupted)");

  std::size_t pos = kMagic.size();
  const auto version = get_le(body, pos, 4);
  if (version != kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                      std::to_string(kVersion) + ")");
  const auto header_len = get_le(body, pos, 8);
  if (pos + header_len > body.size()) throw FormatError("checkpoint truncated in header");
  json header;
  try {
    header = json::parse(body.substr(pos, header_len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what());
  }
  pos += header_len;

  try {
    std::vector<std::u32string> chars;
    for (const auto& c : header.at("vocab").at("chars")) chars.push_back(utf8_decode(c.get<std::string>()));
    Checkpoint ckpt{ModelParams(model_from_json(header.at("model"))),
                    train_from_json(header.at("train")),
                    Vocab::from_lists(header.at("vocab").at("words").get<std::vector<std::string>>(),
                                      chars)};
    const ModelConfig& cfg = ckpt.params.config;
    if (static_cast<int>(ckpt.vocab.word_count()) != cfg.word_vocab ||
        static_cast<int>(ckpt.vocab.char_count()) != cfg.char_vocab)
      throw FormatError("checkpoint vocabulary size does not match its model configuration");

    const auto& arrays = header.at("arrays");
    std::size_t k = 0;
    ckpt.params.visit([&](const std::string& name, Eigen::MatrixXd& m) {
      if (k >= arrays.size()) throw FormatError("checkpoint lacks array '" + name + "'");
      const auto& a = arrays[k++];
      if (a.at("name").get<std::string>() != name || a.at("rows").get<Eigen::Index>() != m.rows() ||
          a.at("cols").get<Eigen::Index>() != m.cols())
        throw FormatError("checkpoint array '" + a.at("name").get<std::string>() +
                          "' does not match expected '" + name + "' of shape " +
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        const std::uint64_t bits = get_le(body, pos, 8);
        std::memcpy(m.data() + i, &bits, sizeof bits);
      }
    });
    if (k != arrays.size()) throw FormatError("checkpoint has unexpected extra arrays");
    if (pos != body.size()) throw FormatError("checkpoint has trailing bytes");
    return ckpt;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint configuration invalid: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing checkpoint " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error("cannot rename " + tmp);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace ged
