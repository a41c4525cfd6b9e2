#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <variant>

#include "pixembed/mnist.hpp"

namespace pixembed {

namespace noise {
struct Identity {
  friend bool operator==(const Identity&, const Identity&) = default;
};
/// Additive N(mu, sigma) per pixel, rounded half away from zero, clamped.
struct Gaussian {
  double mu = 0;
  double sigma = 0;
  friend bool operator==(const Gaussian&, const Gaussian&) = default;
};
/// Each pixel replaced by `value` with probability `p`.
struct SaltPepper {
  double p = 0;
  int value = 0;
  friend bool operator==(const SaltPepper&, const SaltPepper&) = default;
};
}  // namespace noise

using NoiseSpec = std::variant<noise::Identity, noise::Gaussian, noise::SaltPepper>;

/// Parses `none`, `gauss mu=<r> sigma=<r>`, `sp p=<r> v=<int>`.
/// Throws DomainError on malformed text or out-of-range parameters.
NoiseSpec parse_noise(std::string_view text);
std::string format_noise(const NoiseSpec& spec);

/// Human-readable index cell, e.g. "mu=50, sigma=10" or "Standard test dataset".
std::string describe_noise(const NoiseSpec& spec);

void validate(const NoiseSpec& spec);

Image apply_gaussian(const Image& image, double mu, double sigma, std::mt19937_64& rng);
Image apply_salt_pepper(const Image& image, double p, int value, std::mt19937_64& rng);
Image apply_noise(const Image& image, const NoiseSpec& spec, std::mt19937_64& rng);

/// Image i draws from a generator seeded with `seed ^ i`; labels are copied.
LabeledDataset corrupt_dataset(const LabeledDataset& dataset, const NoiseSpec& spec,
                               std::uint64_t seed);

}  // namespace pixembed
