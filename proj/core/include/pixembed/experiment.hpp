#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "pixembed/adam.hpp"
#include "pixembed/checkpoint.hpp"
#include "pixembed/config.hpp"
#include "pixembed/mnist.hpp"
#include "pixembed/network.hpp"
#include "pixembed/noise.hpp"
#include "pixembed/pixel_embedding.hpp"
#include "pixembed/report.hpp"

namespace pixembed {

using LogSink = std::function<void(std::string_view)>;

struct MnistData {
  LabeledDataset train;
  LabeledDataset test;
};

/// Reads the four IDX files named in `cfg` and applies subset/test_subset.
MnistData load_mnist(const ExperimentConfig& cfg);

InputEncoding encoding_for(Variant variant);

/// Encoding + network (+ embedding table) + the frozen preprocessing state.
class Classifier {
 public:
  /// Fresh weights from cfg.init_seed.
  Classifier(Variant variant, const ExperimentConfig& cfg, const DatasetStats& stats);
  static Classifier from_checkpoint(const Checkpoint& ckpt);

  Variant variant() const { return variant_; }
  const DatasetStats& stats() const { return stats_; }
  const QuantizerConfig& quantizer() const { return quantizer_; }
  Network& network() { return *network_; }

  const Tensor& forward(const Image& image);
  int predict(const Image& image);

  /// Forward + backward of one batch, gradients averaged over the batch and
  /// left in the grad buffers. Returns the mean loss.
  double accumulate_batch(const LabeledDataset& data, std::span<const std::size_t> batch);

  /// Tensors under their checkpoint names, stats and quantizer included.
  Checkpoint to_checkpoint(std::string config_echo, std::uint64_t epoch) const;

 private:
  Classifier(Variant variant, DatasetStats stats, QuantizerConfig quantizer,
             std::unique_ptr<Network> network);

  Variant variant_;
  DatasetStats stats_;
  QuantizerConfig quantizer_;
  std::unique_ptr<Network> network_;
  Tensor scalar_input_;
};

/// Percentage of `data` classified correctly.
double accuracy(Classifier& model, const LabeledDataset& data);

struct EpochLog {
  std::size_t epoch = 0;
  double mean_loss = 0;
  double clean_accuracy = 0;
  double seconds = 0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> history;
};

/// Mini-batch Adam on clean training data for cfg.epochs epochs, stopping
/// early after cfg.patience epochs without clean-test improvement. Throws
/// TrainingError if the loss becomes non-finite.
TrainResult train(const ExperimentConfig& cfg, Variant variant, const MnistData& data,
                  const LogSink& log = {});

/// Corrupts `test` with `spec` (seeded), then returns percent correct.
double evaluate(Classifier& model, const LabeledDataset& test, const NoiseSpec& spec,
                std::uint64_t noise_seed);
double evaluate(const Checkpoint& ckpt, const LabeledDataset& test, const NoiseSpec& spec,
                std::uint64_t noise_seed);

/// Suite case list: every Gaussian case for every variant, salt-and-pepper
/// cases for all variants except norm_only.
struct SuiteCase {
  NoiseCase noise;
  Variant variant;
};
std::vector<SuiteCase> suite_cases(const ExperimentConfig& cfg);

/// Trains (or reloads from cfg.out_dir when the fingerprint matches) each
/// variant, evaluates every case and writes report.{csv,md,plot} into
/// cfg.out_dir. On failure a report.incomplete.csv with the finished rows is
/// written before the error propagates.
ExperimentReport run_suite(const ExperimentConfig& cfg, const MnistData& data,
                           const LogSink& log = {});

std::filesystem::path checkpoint_path(const ExperimentConfig& cfg, Variant variant);

}  // namespace pixembed
