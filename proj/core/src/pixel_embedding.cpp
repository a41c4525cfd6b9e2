#include "pixembed/pixel_embedding.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "pixembed/errors.hpp"

namespace pixembed {

std::string to_string(InputEncoding encoding) {
  switch (encoding) {
    case InputEncoding::PixelEmbedding: return "pixel_embedding";
    case InputEncoding::NormalizedScalar: return "normalized_scalar";
    case InputEncoding::RawScalar: return "raw_scalar";
  }
  return "?";
}

real normalize(int pixel, const DatasetStats& stats) {
  return (static_cast<real>(pixel) - stats.mean) / stats.std;
}

std::int64_t quantize(real z, std::int64_t multiplier) {
  return static_cast<std::int64_t>(std::trunc(z * static_cast<real>(multiplier)));
}

QuantizerConfig build_quantizer(const DatasetStats& stats, std::int64_t multiplier,
                                std::int64_t vocab_size) {
  if (multiplier < 1) throw DomainError("quantizer multiplier must be >= 1");
  if (vocab_size < 1) throw DomainError("vocabulary size must be >= 1");
  if (!(stats.std > 0)) throw DomainError("dataset std must be > 0");
  QuantizerConfig cfg;
  cfg.mean = stats.mean;
  cfg.std = stats.std;
  cfg.multiplier = multiplier;
  cfg.vocab_size = vocab_size;
  // Anchor the code of pixel 0 (the background) at index 0.
  cfg.index_offset = -quantize(normalize(0, stats), multiplier);
  return cfg;
}

std::int32_t to_index(std::int64_t q, const QuantizerConfig& cfg) {
  const std::int64_t shifted = q + cfg.index_offset;
  return static_cast<std::int32_t>(std::clamp<std::int64_t>(shifted, 0, cfg.vocab_size - 1));
}

std::int32_t pixel_index(int pixel, const QuantizerConfig& cfg) {
  const DatasetStats stats{cfg.mean, cfg.std};
  return to_index(quantize(normalize(pixel, stats), cfg.multiplier), cfg);
}

IndexGrid encode_indices(const Image& image, const QuantizerConfig& cfg) {
  std::array<std::int32_t, 256> lut{};
  for (int p = 0; p < 256; ++p) lut[static_cast<std::size_t>(p)] = pixel_index(p, cfg);
  IndexGrid grid{kImageSide, kImageSide, std::vector<std::int32_t>(kImagePixels)};
  for (std::size_t i = 0; i < kImagePixels; ++i) grid.indices[i] = lut[image.pixels[i]];
  return grid;
}

Tensor encode_scalar(const Image& image, InputEncoding encoding, const DatasetStats& stats) {
  Tensor out({kImageSide, kImageSide, 1});
  auto v = out.values();
  switch (encoding) {
    case InputEncoding::RawScalar:
      for (std::size_t i = 0; i < kImagePixels; ++i) v[i] = image.pixels[i] / real{255};
      break;
    case InputEncoding::NormalizedScalar:
      for (std::size_t i = 0; i < kImagePixels; ++i) v[i] = normalize(image.pixels[i], stats);
      break;
    case InputEncoding::PixelEmbedding:
      throw DomainError("encode_scalar called with the pixel-embedding encoding");
  }
  return out;
}

Tensor encode_image(const Image& image, InputEncoding encoding, const QuantizerConfig& cfg,
                    const DatasetStats& stats, const EmbeddingTable& table) {
  if (encoding == InputEncoding::PixelEmbedding) {
    return embedding_forward(encode_indices(image, cfg), table);
  }
  return encode_scalar(image, encoding, stats);
}

EmbeddingTable init_table(std::size_t vocab_size, std::size_t dim, std::uint64_t seed) {
  if (vocab_size == 0 || dim == 0) throw DomainError("embedding table extents must be >= 1");
  EmbeddingTable table{Tensor({vocab_size, dim}, init::Uniform{-0.05, 0.05, seed})};
  std::set<std::vector<real>> seen;
  const auto w = table.weights.values();
  for (std::size_t r = 0; r < vocab_size; ++r) {
    std::vector<real> row(w.begin() + static_cast<std::ptrdiff_t>(r * dim),
                          w.begin() + static_cast<std::ptrdiff_t>((r + 1) * dim));
    if (!seen.insert(std::move(row)).second) {
      throw DomainError("embedding rows are not pairwise distinct (row " + std::to_string(r) + ")");
    }
  }
  return table;
}

}  // namespace pixembed
