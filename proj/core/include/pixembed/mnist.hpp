#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pixembed {

inline constexpr std::size_t kImageSide = 28;
inline constexpr std::size_t kImagePixels = kImageSide * kImageSide;
inline constexpr std::size_t kNumClasses = 10;
inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct Image {
  std::array<std::uint8_t, kImagePixels> pixels{};

  std::uint8_t at(std::size_t y, std::size_t x) const { return pixels[y * kImageSide + x]; }
  friend bool operator==(const Image&, const Image&) = default;
};

struct LabeledDataset {
  std::string name;
  std::vector<Image> images;
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return images.size(); }
  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

/// Pixel-unit statistics of a training split.
struct DatasetStats {
  double mean = 0;
  double std = 1;
};

// IDX container: big-endian u32 magic, u32 count, [u32 rows, u32 cols], then
// one unsigned byte per pixel / label.

/// Throws FormatError (magic), ShapeError (not 28x28), LengthError (truncated).
std::vector<Image> load_idx_images(std::span<const std::uint8_t> bytes);
/// Throws FormatError, LengthError, DomainError (label > 9).
std::vector<std::uint8_t> load_idx_labels(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> serialize_idx_images(std::span<const Image> images);
std::vector<std::uint8_t> serialize_idx_labels(std::span<const std::uint8_t> labels);

/// Whole-file read; throws IoError.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

LabeledDataset load_dataset(std::string name, const std::filesystem::path& images,
                            const std::filesystem::path& labels);

/// First `n` samples (all when n == 0 or n >= size).
LabeledDataset take_prefix(const LabeledDataset& dataset, std::size_t n);

/// Mean and population std over every pixel. Exact integer accumulation, so
/// the result does not depend on image order. Throws DegenerateDataError for
/// an empty dataset or zero spread.
DatasetStats compute_stats(const LabeledDataset& train);

/// One epoch's seeded permutation of [0, n) cut into consecutive batches of
/// `batch_size`; the final batch may be short.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t seed);

}  // namespace pixembed
