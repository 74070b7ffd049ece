#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ged/corpus.hpp"

namespace ged {

// Rows are indexed by vocabulary id; the PAD row stays zero.
struct EmbeddingTable {
  Eigen::MatrixXd matrix;
  bool trainable = true;

  int dim() const { return static_cast<int>(matrix.cols()); }
  int rows() const { return static_cast<int>(matrix.rows()); }
};

// Uniform [-0.1, 0.1] rows from `seed`, PAD row zero.
EmbeddingTable random_embeddings(std::size_t rows, int dim, std::uint64_t seed);

// Word-vector text format: optional "<count> <dim>" header, then "token v1 .. vdim"
// per line. Vocabulary words missing from the file keep the seeded random
// initialization. A record with the wrong value count raises ParseError.
EmbeddingTable load_static_vectors(std::string_view content, const Vocab& vocab, int dim,
                                   std::uint64_t seed);

// ---- ELMo-style layer mixing ----------------------------------------------

// Softmax-normalized task scalars and a global scale.
struct LayerMix {
  Eigen::VectorXd scalars;  // one per layer
  double scale = 1.0;

  static LayerMix uniform(int layers) { return {Eigen::VectorXd::Zero(layers), 1.0}; }
};

Eigen::VectorXd softmax(const Eigen::VectorXd& v);

// layers: d x L, one column per layer. Returns scale * sum_j softmax(s)_j * layer_j.
Eigen::VectorXd mix_layers(const Eigen::MatrixXd& layers, const Eigen::VectorXd& scalars,
                           double scale);
inline Eigen::VectorXd mix_layers(const Eigen::MatrixXd& layers, const LayerMix& mix) {
  return mix_layers(layers, mix.scalars, mix.scale);
}

// Accumulates d(out)/d(scalars) and d(out)/d(scale) given upstream gradient `d_out`.
void mix_layers_backward(const Eigen::MatrixXd& layers, const Eigen::VectorXd& scalars,
                         double scale, const Eigen::VectorXd& d_out,
                         Eigen::Ref<Eigen::VectorXd> d_scalars, double& d_scale);

// ---- contextual vector store ----------------------------------------------

enum class ProviderKind { BERT_base, BERT_large, ELMo, Flair, Pseudo };

std::string_view to_string(ProviderKind k);
ProviderKind parse_provider_kind(std::string_view s);  // throws FormatError

// Declared (layers, dim) for each real encoder; Pseudo has no fixed shape.
std::pair<int, int> expected_shape(ProviderKind k);

using StoreKey = std::pair<std::string, std::uint32_t>;

// Immutable per-(sid, token index) store of L layer vectors of dimension d.
class ContextStore {
 public:
  ContextStore(int layers, int dim, ProviderKind kind,
               std::map<StoreKey, std::vector<float>> entries);

  // Binary container: "CTXSTORE 1 <L> <d> <kind>\n", sorted records, then a
  // 4-byte record count and CRC-32 of the record bytes (little-endian).
  static ContextStore parse(std::string_view bytes);
  static ContextStore load(const std::string& path);
  std::string serialize() const;
  void save(const std::string& path) const;

  int layers() const { return layers_; }
  int dim() const { return dim_; }
  ProviderKind kind() const { return kind_; }
  std::size_t size() const { return entries_.size(); }

  bool contains(std::string_view sid, std::uint32_t idx) const;
  // d x L matrix of layer vectors. Throws LookupError naming sid and idx.
  Eigen::MatrixXd layer_vectors(std::string_view sid, std::uint32_t idx) const;

  // Tokens of `sentences` absent from the store, as (sid, idx).
  std::vector<StoreKey> missing(const std::vector<Sentence>& sentences) const;

  const std::map<StoreKey, std::vector<float>>& entries() const { return entries_; }

 private:
  int layers_;
  int dim_;
  ProviderKind kind_;
  std::map<StoreKey, std::vector<float>> entries_;
};

// Context vector for one token: the stored vector when L = 1, else the mix.
Eigen::VectorXd get_context_vector(const ContextStore& store, const LayerMix* mix,
                                   std::string_view sid, std::uint32_t idx);

// Deterministic stand-in vectors in [-1, 1] from (surface, position, layer, seed).
std::map<StoreKey, std::vector<float>> pseudo_context(const Sentence& sentence, int layers,
                                                      int dim, std::uint64_t seed);

ContextStore make_pseudo_store(const std::vector<Sentence>& sentences, int layers, int dim,
                               std::uint64_t seed);

}  // namespace ged
