#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pixembed/adam.hpp"
#include "pixembed/noise.hpp"

namespace pixembed {

enum class Variant { WithPe, WithoutPe, NormOnly };

std::string to_string(Variant variant);
/// Accepts `with_pe`, `without_pe`, `norm_only`; throws DomainError.
Variant parse_variant(std::string_view text);

/// Labeled noise case of a report table.
struct NoiseCase {
  std::string label;
  NoiseSpec spec;
};

/// The nine Gaussian rows (clean + eight corruptions) and the fourteen
/// salt-and-pepper rows (clean + thirteen) evaluated by the suite.
std::vector<NoiseSpec> default_gaussian_cases();
std::vector<NoiseSpec> default_salt_pepper_cases();

/// Flat `key = value` configuration. Defaults are the reference training
/// parameters: M = 64, V = 2000, multiplier 1000, Adam lr 1e-4, batch 64.
struct ExperimentConfig {
  std::filesystem::path train_images = "data/mnist/train-images-idx3-ubyte";
  std::filesystem::path train_labels = "data/mnist/train-labels-idx1-ubyte";
  std::filesystem::path test_images = "data/mnist/t10k-images-idx3-ubyte";
  std::filesystem::path test_labels = "data/mnist/t10k-labels-idx1-ubyte";

  Variant variant = Variant::WithPe;
  std::size_t embedding_size = 64;
  std::int64_t vocab_size = 2000;
  std::int64_t multiplier = 1000;
  AdamHyper adam;
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  std::size_t patience = 3;  // 0 disables early stopping

  std::uint64_t init_seed = 1;
  std::uint64_t shuffle_seed = 2;
  std::uint64_t noise_seed = 3;

  std::size_t subset = 0;       // first N training samples, 0 = all
  std::size_t test_subset = 0;  // first N test samples, 0 = all

  std::vector<Variant> suite_variants = {Variant::WithPe, Variant::WithoutPe, Variant::NormOnly};
  std::vector<NoiseSpec> gaussian_cases = default_gaussian_cases();
  std::vector<NoiseSpec> salt_pepper_cases = default_salt_pepper_cases();

  std::filesystem::path out_dir = "runs/default";

  /// Sets one key from its textual value. Throws DomainError for unknown keys
  /// or malformed values. `gauss_case` / `sp_case` append; the first such key
  /// replaces the defaults. `data_dir` sets all four data paths, `seed` all
  /// three seeds.
  void set(std::string_view key, std::string_view value);

  /// Canonical text of every setting, loadable by parse_config.
  std::string to_text() const;

  /// The subset of settings that determines trained weights for `v`. Used to
  /// decide whether a saved checkpoint can be reused.
  std::string training_fingerprint(Variant v) const;

  void validate() const;

 private:
  bool gaussian_overridden_ = false;
  bool salt_pepper_overridden_ = false;
};

/// `#` starts a comment; blank lines are ignored.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

}  // namespace pixembed
