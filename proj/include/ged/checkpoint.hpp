#pragma once

#include <string>
#include <string_view>

#include "ged/corpus.hpp"
#include "ged/model.hpp"
#include "ged/training.hpp"

namespace ged {

struct Checkpoint {
  ModelParams params;
  TrainConfig train_config;
  Vocab vocab;
};

// Container layout (little-endian):
//   "GEDCKPT\n" | u32 version | u64 header length | JSON header
//   | f64 arrays in header order, column-major | u32 CRC-32 of all preceding bytes
// The header holds the model and training configuration, both vocabularies and
// the name and shape of every parameter array.
std::string serialize_checkpoint(const Checkpoint& ckpt);
// Throws FormatError on truncation, corruption, version or shape mismatch.
Checkpoint parse_checkpoint(std::string_view bytes);

// Writes through a temporary file and rename, so readers never see a partial file.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ged
