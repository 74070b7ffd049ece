#include "ged/embeddings.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ged/error.hpp"
#include "ged/random.hpp"

namespace ged {

EmbeddingTable random_embeddings(std::size_t rows, int dim, std::uint64_t seed) {
  EmbeddingTable t;
  t.matrix.resize(static_cast<Eigen::Index>(rows), dim);
  Rng rng(seed);
  for (Eigen::Index r = 0; r < t.matrix.rows(); ++r)
    for (Eigen::Index c = 0; c < t.matrix.cols(); ++c) t.matrix(r, c) = rng.uniform(-0.1, 0.1);
  if (rows > 0) t.matrix.row(Vocab::kPad).setZero();
  return t;
}

EmbeddingTable load_static_vectors(std::string_view content, const Vocab& vocab, int dim,
                                   std::uint64_t seed) {
  EmbeddingTable table = random_embeddings(vocab.word_count(), dim, seed);
  // 2 = exact lowercase match, 1 = case variant; a higher rank overrides.
  std::vector<int> rank(vocab.word_count(), 0);
  const auto lines = split_lines(content);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    auto fields = split_whitespace(lines[li]);
    if (fields.empty()) continue;
    if (li == 0 && fields.size() == 2 &&
        fields[0].find_first_not_of("0123456789") == std::string::npos &&
        fields[1].find_first_not_of("0123456789") == std::string::npos) {
      if (std::stoi(fields[1]) != dim)
        throw ParseError("header declares dimension " + fields[1] + ", expected " +
                             std::to_string(dim),
                         li + 1);
      continue;
    }
    if (static_cast<int>(fields.size()) - 1 != dim)
      throw ParseError("expected " + std::to_string(dim) + " values, found " +
                           std::to_string(fields.size() - 1),
                       li + 1);
    const int id = vocab.word_id(fields[0]);
    if (id == Vocab::kUnk) continue;
    const int r = lowercase(fields[0]) == fields[0] ? 2 : 1;
    if (r <= rank[static_cast<std::size_t>(id)]) continue;
    rank[static_cast<std::size_t>(id)] = r;
    for (int k = 0; k < dim; ++k) {
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(fields[static_cast<std::size_t>(k) + 1], &used);
        if (used != fields[static_cast<std::size_t>(k) + 1].size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ParseError("malformed value '" + fields[static_cast<std::size_t>(k) + 1] + "'",
                         li + 1);
      }
      table.matrix(id, k) = v;
    }
  }
  return table;
}

// ---- layer mixing ----------------------------------------------------------

Eigen::VectorXd softmax(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  Eigen::VectorXd e = (v.array() - m).exp();
  return e / e.sum();
}

Eigen::VectorXd mix_layers(const Eigen::MatrixXd& layers, const Eigen::VectorXd& scalars,
                           double scale) {
  if (layers.cols() < 1) throw ValidationError("layer mix needs at least one layer");
  if (layers.cols() != scalars.size())
    throw ValidationError("layer count " + std::to_string(layers.cols()) +
                          " does not match mix scalars " + std::to_string(scalars.size()));
  return scale * (layers * softmax(scalars));
}

void mix_layers_backward(const Eigen::MatrixXd& layers, const Eigen::VectorXd& scalars,
                         double scale, const Eigen::VectorXd& d_out,
                         Eigen::Ref<Eigen::VectorXd> d_scalars, double& d_scale) {
  const Eigen::VectorXd w = softmax(scalars);
  const Eigen::VectorXd proj = layers.transpose() * d_out;  // <layer_j, d_out>
  d_scale += w.dot(proj);
  const Eigen::VectorXd dw = scale * proj;
  d_scalars.array() += w.array() * (dw.array() - w.dot(dw));
}

// ---- store -----------------------------------------------------------------

namespace {

constexpr std::string_view kMagic = "CTXSTORE";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t& pos) {
  if (pos + 4 > bytes.size()) throw FormatError("context store truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + static_cast<std::size_t>(i)]))
         << (8 * i);
  pos += 4;
  return v;
}

std::uint32_t crc(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

}  // namespace

std::string_view to_string(ProviderKind k) {
  switch (k) {
    case ProviderKind::BERT_base: return "BERT_base";
    case ProviderKind::BERT_large: return "BERT_large";
    case ProviderKind::ELMo: return "ELMo";
    case ProviderKind::Flair: return "Flair";
    case ProviderKind::Pseudo: return "Pseudo";
  }
  return "?";
}

ProviderKind parse_provider_kind(std::string_view s) {
  for (auto k : {ProviderKind::BERT_base, ProviderKind::BERT_large, ProviderKind::ELMo,
                 ProviderKind::Flair, ProviderKind::Pseudo})
    if (to_string(k) == s) return k;
  throw FormatError("unknown provider kind '" + std::string(s) + "'");
}

std::pair<int, int> expected_shape(ProviderKind k) {
  switch (k) {
    case ProviderKind::BERT_base: return {1, 3072};
    case ProviderKind::BERT_large: return {1, 4096};
    case ProviderKind::ELMo: return {3, 1024};
    case ProviderKind::Flair: return {1, 4096};
    case ProviderKind::Pseudo: return {0, 0};
  }
  return {0, 0};
}

ContextStore::ContextStore(int layers, int dim, ProviderKind kind,
                           std::map<StoreKey, std::vector<float>> entries)
    : layers_(layers), dim_(dim), kind_(kind), entries_(std::move(entries)) {
  if (layers_ < 1 || dim_ < 1) throw FormatError("context store needs L >= 1 and d >= 1");
  if (kind_ != ProviderKind::Pseudo) {
    auto [el, ed] = expected_shape(kind_);
    if (el != layers_ || ed != dim_)
      throw FormatError(std::string(to_string(kind_)) + " store must be " + std::to_string(el) +
                        " x " + std::to_string(ed) + ", got " + std::to_string(layers_) + " x " +
                        std::to_string(dim_));
  }
  const auto width = static_cast<std::size_t>(layers_) * static_cast<std::size_t>(dim_);
  for (const auto& [key, values] : entries_) {
    if (values.size() != width)
      throw FormatError("entry (" + key.first + ", " + std::to_string(key.second) + ") has " +
                        std::to_string(values.size()) + " values, expected " +
                        std::to_string(width));
    for (float v : values)
      if (!std::isfinite(v))
        throw FormatError("non-finite value in entry (" + key.first + ", " +
                          std::to_string(key.second) + ")");
  }
}

std::string ContextStore::serialize() const {
  std::string out = std::string(kMagic) + " 1 " + std::to_string(layers_) + " " +
                    std::to_string(dim_) + " " + std::string(to_string(kind_)) + "\n";
  const std::size_t payload_start = out.size();
  for (const auto& [key, values] : entries_) {
    put_u32(out, static_cast<std::uint32_t>(key.first.size()));
    out += key.first;
    put_u32(out, key.second);
    for (float v : values) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      put_u32(out, bits);
    }
  }
  const std::uint32_t checksum = crc(std::string_view(out).substr(payload_start));
  put_u32(out, static_cast<std::uint32_t>(entries_.size()));
  put_u32(out, checksum);
  return out;
}

ContextStore ContextStore::parse(std::string_view bytes) {
  const std::size_t nl = bytes.find('\n');
  if (nl == std::string_view::npos) throw FormatError("context store header missing");
  const auto header = split_whitespace(bytes.substr(0, nl));
  if (header.size() != 5 || header[0] != kMagic)
    throw FormatError("not a context store (bad header)");
  if (header[1] != "1") throw FormatError("unsupported context store version " + header[1]);
  int layers = 0, dim = 0;
  try {
    layers = std::stoi(header[2]);
    dim = std::stoi(header[3]);
  } catch (const std::exception&) {
    throw FormatError("malformed context store dimensions");
  }
  const ProviderKind kind = parse_provider_kind(header[4]);
  if (layers < 1 || dim < 1) throw FormatError("context store needs L >= 1 and d >= 1");
  if (bytes.size() < nl + 1 + 8) throw FormatError("context store truncated");

  const std::size_t payload_start = nl + 1;
  const std::size_t payload_end = bytes.size() - 8;
  std::size_t trailer = payload_end;
  const std::uint32_t count = get_u32(bytes, trailer);
  const std::uint32_t checksum = get_u32(bytes, trailer);
  const std::string_view payload = bytes.substr(payload_start, payload_end - payload_start);
  if (crc(payload) != checksum) throw FormatError("context store checksum mismatch");

  const auto width = static_cast<std::size_t>(layers) * static_cast<std::size_t>(dim);
  std::map<StoreKey, std::vector<float>> entries;
  std::size_t pos = 0;
  const StoreKey* prev = nullptr;
  while (pos < payload.size()) {
    const std::uint32_t sid_len = get_u32(payload, pos);
    if (pos + sid_len > payload.size()) throw FormatError("context store truncated");
    std::string sid(payload.substr(pos, sid_len));
    pos += sid_len;
    const std::uint32_t idx = get_u32(payload, pos);
    std::vector<float> values(width);
    for (auto& v : values) {
      const std::uint32_t bits = get_u32(payload, pos);
      std::memcpy(&v, &bits, sizeof v);
    }
    StoreKey key{std::move(sid), idx};
    if (prev && !(*prev < key)) throw FormatError("context store records not sorted");
    auto it = entries.emplace(std::move(key), std::move(values)).first;
    prev = &it->first;
  }
  if (entries.size() != count)
    throw FormatError("context store record count " + std::to_string(entries.size()) +
                      " does not match trailer " + std::to_string(count));
  return ContextStore(layers, dim, kind, std::move(entries));
}

ContextStore ContextStore::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open context store " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void ContextStore::save(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write context store " + path);
    const std::string bytes = serialize();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing context store " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error("cannot rename " + tmp);
}

bool ContextStore::contains(std::string_view sid, std::uint32_t idx) const {
  return entries_.count(StoreKey{std::string(sid), idx}) > 0;
}

Eigen::MatrixXd ContextStore::layer_vectors(std::string_view sid, std::uint32_t idx) const {
  auto it = entries_.find(StoreKey{std::string(sid), idx});
  if (it == entries_.end())
    throw LookupError("no contextual vector for sentence '" + std::string(sid) + "' token " +
                      std::to_string(idx));
  Eigen::MatrixXd m(dim_, layers_);
  for (int l = 0; l < layers_; ++l)
    for (int k = 0; k < dim_; ++k)
      m(k, l) = static_cast<double>(it->second[static_cast<std::size_t>(l * dim_ + k)]);
  return m;
}

std::vector<StoreKey> ContextStore::missing(const std::vector<Sentence>& sentences) const {
  std::vector<StoreKey> gaps;
  for (const auto& s : sentences)
    for (std::uint32_t i = 0; i < s.size(); ++i)
      if (!contains(s.sid, i)) gaps.emplace_back(s.sid, i);
  return gaps;
}

Eigen::VectorXd get_context_vector(const ContextStore& store, const LayerMix* mix,
                                   std::string_view sid, std::uint32_t idx) {
  Eigen::MatrixXd layers = store.layer_vectors(sid, idx);
  if (store.layers() == 1) return layers.col(0);
  if (!mix) return mix_layers(layers, LayerMix::uniform(store.layers()));
  return mix_layers(layers, *mix);
}

std::map<StoreKey, std::vector<float>> pseudo_context(const Sentence& sentence, int layers,
                                                      int dim, std::uint64_t seed) {
  if (layers < 1 || dim < 1) throw ValidationError("pseudo context needs L >= 1 and d >= 1");
  std::map<StoreKey, std::vector<float>> out;
  for (std::uint32_t t = 0; t < sentence.size(); ++t) {
    std::vector<float> values;
    values.reserve(static_cast<std::size_t>(layers * dim));
    const std::uint64_t token_key = hash_text(sentence.tokens[t].surface);
    for (int l = 0; l < layers; ++l) {
      Rng rng(combine_seed(combine_seed(token_key, t), combine_seed(static_cast<std::uint64_t>(l), seed)));
      for (int k = 0; k < dim; ++k) values.push_back(static_cast<float>(rng.uniform(-1.0, 1.0)));
    }
    out.emplace(StoreKey{sentence.sid, t}, std::move(values));
  }
  return out;
}

ContextStore make_pseudo_store(const std::vector<Sentence>& sentences, int layers, int dim,
                               std::uint64_t seed) {
  std::map<StoreKey, std::vector<float>> all;
  for (const auto& s : sentences) all.merge(pseudo_context(s, layers, dim, seed));
  return ContextStore(layers, dim, ProviderKind::Pseudo, std::move(all));
}

}  // namespace ged
