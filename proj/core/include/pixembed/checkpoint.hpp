#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pixembed/mnist.hpp"
#include "pixembed/pixel_embedding.hpp"
#include "pixembed/tensor.hpp"

namespace pixembed {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Everything needed to rebuild a trained classifier.
struct Checkpoint {
  std::string config_echo;  // training_fingerprint of the producing config
  std::uint64_t epoch = 0;
  DatasetStats stats;
  QuantizerConfig quantizer;
  double clean_accuracy = 0;  // at the end of training
  double train_seconds = 0;
  std::vector<NamedTensor> tensors;

  const Tensor& find(const std::string& name) const;
};

// Binary layout, all integers little-endian u64:
//   "PXEMBCKP" | version | len, config_echo | epoch | count |
//   count x (len, name | rank | extents... | f64 payload)
// Stats, quantizer and training metrics travel as `meta.*` tensors.
inline constexpr std::uint64_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError / LengthError.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pixembed
