#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "pixembed/layers.hpp"
#include "pixembed/mnist.hpp"
#include "pixembed/tensor.hpp"

namespace pixembed {

// Pixel embedding: normalize with frozen training statistics, scale by an
// integer multiplier, truncate, shift so pixel 0 lands on index 0, clamp into
// the table, and look the index up in a trainable V x M table.

struct QuantizerConfig {
  double mean = 0;
  double std = 1;
  std::int64_t multiplier = 1000;
  std::int64_t index_offset = 0;
  std::int64_t vocab_size = 2000;

  friend bool operator==(const QuantizerConfig&, const QuantizerConfig&) = default;
};

enum class InputEncoding { PixelEmbedding, NormalizedScalar, RawScalar };

std::string to_string(InputEncoding encoding);

/// (pixel - mean) / std
real normalize(int pixel, const DatasetStats& stats);

/// trunc(z * multiplier), toward zero.
std::int64_t quantize(real z, std::int64_t multiplier);

/// Throws DomainError for multiplier < 1, vocab_size < 1 or std <= 0.
QuantizerConfig build_quantizer(const DatasetStats& stats, std::int64_t multiplier = 1000,
                                std::int64_t vocab_size = 2000);

/// clamp(q + index_offset, 0, vocab_size - 1)
std::int32_t to_index(std::int64_t q, const QuantizerConfig& cfg);

/// normalize -> quantize -> to_index for one pixel value.
std::int32_t pixel_index(int pixel, const QuantizerConfig& cfg);

IndexGrid encode_indices(const Image& image, const QuantizerConfig& cfg);

/// (28, 28, 1) tensor for the two scalar encodings: pixel / 255 (raw) or the
/// z-score (normalized). Throws DomainError for PixelEmbedding.
Tensor encode_scalar(const Image& image, InputEncoding encoding, const DatasetStats& stats);

/// Network input for any encoding: (28, 28, M) lookups for PixelEmbedding,
/// otherwise the scalar tensor.
Tensor encode_image(const Image& image, InputEncoding encoding, const QuantizerConfig& cfg,
                    const DatasetStats& stats, const EmbeddingTable& table);

/// Rows i.i.d. uniform(-0.05, 0.05). Throws DomainError if two rows coincide.
EmbeddingTable init_table(std::size_t vocab_size, std::size_t dim, std::uint64_t seed);

}  // namespace pixembed
