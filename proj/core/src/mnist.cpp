#include "pixembed/mnist.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "pixembed/errors.hpp"

namespace pixembed {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (bytes.size() < offset + 4) throw LengthError("IDX header truncated");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::string hex(std::uint32_t v) {
  char buf[11];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

}  // namespace

std::vector<Image> load_idx_images(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kIdxImagesMagic) {
    throw FormatError("bad IDX image magic " + hex(magic) + ", expected " + hex(kIdxImagesMagic));
  }
  const std::uint32_t count = read_be32(bytes, 4);
  const std::uint32_t rows = read_be32(bytes, 8);
  const std::uint32_t cols = read_be32(bytes, 12);
  if (rows != kImageSide || cols != kImageSide) {
    throw ShapeError("IDX images are " + std::to_string(rows) + "x" + std::to_string(cols) +
                     ", expected 28x28");
  }
  constexpr std::size_t kHeader = 16;
  const std::size_t need = kHeader + std::size_t{count} * kImagePixels;
  if (bytes.size() < need) {
    throw LengthError("IDX image payload truncated: " + std::to_string(bytes.size()) + " bytes, need " +
                      std::to_string(need));
  }
  std::vector<Image> images(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto* src = bytes.data() + kHeader + i * kImagePixels;
    std::copy(src, src + kImagePixels, images[i].pixels.begin());
  }
  return images;
}

std::vector<std::uint8_t> load_idx_labels(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kIdxLabelsMagic) {
    throw FormatError("bad IDX label magic " + hex(magic) + ", expected " + hex(kIdxLabelsMagic));
  }
  const std::uint32_t count = read_be32(bytes, 4);
  constexpr std::size_t kHeader = 8;
  if (bytes.size() < kHeader + count) throw LengthError("IDX label payload truncated");
  std::vector<std::uint8_t> labels(bytes.begin() + kHeader, bytes.begin() + kHeader + count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= kNumClasses) {
      throw DomainError("label byte " + std::to_string(labels[i]) + " at index " + std::to_string(i) +
                        " outside [0,9]");
    }
  }
  return labels;
}

std::vector<std::uint8_t> serialize_idx_images(std::span<const Image> images) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + images.size() * kImagePixels);
  write_be32(out, kIdxImagesMagic);
  write_be32(out, static_cast<std::uint32_t>(images.size()));
  write_be32(out, kImageSide);
  write_be32(out, kImageSide);
  for (const auto& img : images) out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

std::vector<std::uint8_t> serialize_idx_labels(std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  write_be32(out, kIdxLabelsMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

LabeledDataset load_dataset(std::string name, const std::filesystem::path& images,
                            const std::filesystem::path& labels) {
  LabeledDataset ds;
  ds.name = std::move(name);
  ds.images = load_idx_images(read_file(images));
  ds.labels = load_idx_labels(read_file(labels));
  if (ds.images.size() != ds.labels.size()) {
    throw LengthError(ds.name + ": " + std::to_string(ds.images.size()) + " images but " +
                      std::to_string(ds.labels.size()) + " labels");
  }
  return ds;
}

LabeledDataset take_prefix(const LabeledDataset& dataset, std::size_t n) {
  if (n == 0 || n >= dataset.size()) return dataset;
  LabeledDataset out;
  out.name = dataset.name;
  out.images.assign(dataset.images.begin(), dataset.images.begin() + static_cast<std::ptrdiff_t>(n));
  out.labels.assign(dataset.labels.begin(), dataset.labels.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

DatasetStats compute_stats(const LabeledDataset& train) {
  if (train.images.empty()) throw DegenerateDataError("cannot compute statistics of an empty dataset");
  // 255^2 * 47M fits comfortably in 64 bits.
  std::uint64_t sum = 0, sum_sq = 0;
  for (const auto& img : train.images) {
    for (std::uint8_t p : img.pixels) {
      sum += p;
      sum_sq += std::uint64_t{p} * p;
    }
  }
  const long double n = static_cast<long double>(train.images.size()) * kImagePixels;
  const long double mean = sum / n;
  const long double var = sum_sq / n - mean * mean;
  if (!(var > 0)) throw DegenerateDataError("training pixels have zero standard deviation");
  return {static_cast<double>(mean), static_cast<double>(std::sqrt(var))};
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t seed) {
  if (batch_size == 0) throw DomainError("batch size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  batches.reserve((n + batch_size - 1) / batch_size);
  for (std::size_t i = 0; i < n; i += batch_size) {
    const std::size_t end = std::min(n, i + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace pixembed
