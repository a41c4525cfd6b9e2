#include "pixembed/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "pixembed/errors.hpp"
#include "pixembed/random.hpp"

namespace pixembed {

namespace {

void emit(const LogSink& log, const std::string& msg) {
  if (log) log(msg);
}

std::string fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr std::uint64_t kNetworkStream = 0;
constexpr std::uint64_t kTableStream = 1;

std::vector<LayerSpec> layout_for(Variant variant, std::size_t embedding_size, std::int64_t vocab_size) {
  if (variant == Variant::WithPe) {
    return classifier_layout(embedding_size, static_cast<std::size_t>(vocab_size));
  }
  return classifier_layout(1);
}

}  // namespace

MnistData load_mnist(const ExperimentConfig& cfg) {
  MnistData data;
  data.train = take_prefix(load_dataset("train", cfg.train_images, cfg.train_labels), cfg.subset);
  data.test = take_prefix(load_dataset("test", cfg.test_images, cfg.test_labels), cfg.test_subset);
  return data;
}

InputEncoding encoding_for(Variant variant) {
  switch (variant) {
    case Variant::WithPe: return InputEncoding::PixelEmbedding;
    case Variant::WithoutPe: return InputEncoding::RawScalar;
    case Variant::NormOnly: return InputEncoding::NormalizedScalar;
  }
  return InputEncoding::RawScalar;
}

// ---------------------------------------------------------------------------
// Classifier

Classifier::Classifier(Variant variant, DatasetStats stats, QuantizerConfig quantizer,
                       std::unique_ptr<Network> network)
    : variant_(variant), stats_(stats), quantizer_(quantizer), network_(std::move(network)) {}

Classifier::Classifier(Variant variant, const ExperimentConfig& cfg, const DatasetStats& stats)
    : variant_(variant),
      stats_(stats),
      quantizer_(build_quantizer(stats, cfg.multiplier, cfg.vocab_size)) {
  std::optional<EmbeddingTable> table;
  if (variant == Variant::WithPe) {
    table = init_table(static_cast<std::size_t>(cfg.vocab_size), cfg.embedding_size,
                       derive_seed(cfg.init_seed, kTableStream));
  }
  network_ = std::make_unique<Network>(layout_for(variant, cfg.embedding_size, cfg.vocab_size),
                                       derive_seed(cfg.init_seed, kNetworkStream), std::move(table));
}

Classifier Classifier::from_checkpoint(const Checkpoint& ckpt) {
  const ExperimentConfig cfg = parse_config(ckpt.config_echo);
  const Variant variant = cfg.variant;
  std::optional<EmbeddingTable> table;
  if (variant == Variant::WithPe) table = EmbeddingTable{ckpt.find("embedding.weight")};
  auto network = std::make_unique<Network>(layout_for(variant, cfg.embedding_size, cfg.vocab_size), 0,
                                           std::move(table));
  for (auto& [name, tensor] : network->named_parameters()) {
    const Tensor& saved = ckpt.find(name);
    if (saved.shape() != tensor->shape()) {
      throw FormatError("checkpoint tensor '" + name + "' has shape " + shape_to_string(saved.shape()) +
                        ", network expects " + shape_to_string(tensor->shape()));
    }
    std::copy(saved.values().begin(), saved.values().end(), tensor->values().begin());
  }
  return Classifier(variant, ckpt.stats, ckpt.quantizer, std::move(network));
}

const Tensor& Classifier::forward(const Image& image) {
  if (variant_ == Variant::WithPe) return network_->forward(encode_indices(image, quantizer_));
  scalar_input_ = encode_scalar(image, encoding_for(variant_), stats_);
  return network_->forward(scalar_input_);
}

int Classifier::predict(const Image& image) {
  forward(image);
  return network_->predicted_class();
}

double Classifier::accumulate_batch(const LabeledDataset& data, std::span<const std::size_t> batch) {
  const real scale = real{1} / static_cast<real>(batch.size());
  double total = 0;
  for (std::size_t idx : batch) {
    const Tensor& logits = forward(data.images[idx]);
    LossResult loss = softmax_cross_entropy(logits, data.labels[idx]);
    for (real& g : loss.grad_logits.values()) g *= scale;
    network_->backward(loss.grad_logits.values());
    total += loss.loss;
  }
  return total / static_cast<double>(batch.size());
}

Checkpoint Classifier::to_checkpoint(std::string config_echo, std::uint64_t epoch) const {
  Checkpoint ckpt;
  ckpt.config_echo = std::move(config_echo);
  ckpt.epoch = epoch;
  ckpt.stats = stats_;
  ckpt.quantizer = quantizer_;
  for (const auto& [name, t] : std::as_const(*network_).named_parameters()) {
    ckpt.tensors.push_back({name, *t});
  }
  return ckpt;
}

double accuracy(Classifier& model, const LabeledDataset& data) {
  if (data.size() == 0) return 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (model.predict(data.images[i]) == data.labels[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Training

TrainResult train(const ExperimentConfig& cfg, Variant variant, const MnistData& data, const LogSink& log) {
  cfg.validate();
  const auto t0 = Clock::now();
  const DatasetStats stats = compute_stats(data.train);
  Classifier model(variant, cfg, stats);
  Adam adam(model.network().parameters(), cfg.adam);

  emit(log, fmt("[%s] training on %zu samples, testing on %zu; mean %.4f std %.4f", to_string(variant).c_str(),
                data.train.size(), data.test.size(), stats.mean, stats.std));

  TrainResult result;
  double best = -1;
  std::size_t stale = 0;
  std::size_t epochs_run = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto te = Clock::now();
    const auto batches = epoch_batches(data.train.size(), cfg.batch_size, derive_seed(cfg.shuffle_seed, epoch));
    double loss_sum = 0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      model.network().zero_grad();
      const double loss = model.accumulate_batch(data.train, batches[b]);
      if (!std::isfinite(loss)) {
        throw TrainingError(fmt("loss became non-finite at epoch %zu batch %zu", epoch, b));
      }
      adam.step();
      loss_sum += loss * static_cast<double>(batches[b].size());
      seen += batches[b].size();
      if ((b + 1) % 200 == 0) {
        emit(log, fmt("[%s] epoch %zu batch %zu/%zu loss %.4f (%.0fs)", to_string(variant).c_str(), epoch, b + 1,
                      batches.size(), loss_sum / static_cast<double>(seen), seconds_since(te)));
      }
    }
    EpochLog entry{epoch, loss_sum / static_cast<double>(seen), accuracy(model, data.test), seconds_since(te)};
    result.history.push_back(entry);
    epochs_run = epoch;
    emit(log, fmt("[%s] epoch %zu loss %.5f clean-test %.2f%% (%.0fs)", to_string(variant).c_str(), epoch,
                  entry.mean_loss, entry.clean_accuracy, entry.seconds));

    if (entry.clean_accuracy > best) {
      best = entry.clean_accuracy;
      stale = 0;
    } else if (cfg.patience > 0 && ++stale >= cfg.patience) {
      emit(log, fmt("[%s] no improvement for %zu epochs; stopping", to_string(variant).c_str(), stale));
      break;
    }
  }

  result.checkpoint = model.to_checkpoint(cfg.training_fingerprint(variant), epochs_run);
  result.checkpoint.clean_accuracy = result.history.back().clean_accuracy;
  result.checkpoint.train_seconds = seconds_since(t0);
  return result;
}

double evaluate(Classifier& model, const LabeledDataset& test, const NoiseSpec& spec, std::uint64_t noise_seed) {
  return accuracy(model, corrupt_dataset(test, spec, noise_seed));
}

double evaluate(const Checkpoint& ckpt, const LabeledDataset& test, const NoiseSpec& spec,
                std::uint64_t noise_seed) {
  Classifier model = Classifier::from_checkpoint(ckpt);
  return evaluate(model, test, spec, noise_seed);
}

// ---------------------------------------------------------------------------
// Suite

std::filesystem::path checkpoint_path(const ExperimentConfig& cfg, Variant variant) {
  return cfg.out_dir / (to_string(variant) + ".ckpt");
}

std::vector<SuiteCase> suite_cases(const ExperimentConfig& cfg) {
  std::vector<SuiteCase> cases;
  for (std::size_t i = 0; i < cfg.gaussian_cases.size(); ++i) {
    for (Variant v : cfg.suite_variants) {
      cases.push_back({{"gauss:case" + std::to_string(i + 1), cfg.gaussian_cases[i]}, v});
    }
  }
  for (std::size_t i = 0; i < cfg.salt_pepper_cases.size(); ++i) {
    for (Variant v : cfg.suite_variants) {
      if (v == Variant::NormOnly) continue;
      cases.push_back({{"sp:case" + std::to_string(i + 1), cfg.salt_pepper_cases[i]}, v});
    }
  }
  return cases;
}

ExperimentReport run_suite(const ExperimentConfig& cfg, const MnistData& data, const LogSink& log) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);

  ExperimentReport report;
  report.metadata["init_seed"] = std::to_string(cfg.init_seed);
  report.metadata["shuffle_seed"] = std::to_string(cfg.shuffle_seed);
  report.metadata["noise_seed"] = std::to_string(cfg.noise_seed);
  report.metadata["epochs"] = std::to_string(cfg.epochs);
  report.metadata["train_samples"] = std::to_string(data.train.size());
  report.metadata["test_samples"] = std::to_string(data.test.size());

  try {
    std::vector<std::pair<Variant, Classifier>> models;
    for (Variant v : cfg.suite_variants) {
      const auto path = checkpoint_path(cfg, v);
      const std::string fingerprint = cfg.training_fingerprint(v);
      std::optional<Checkpoint> ckpt;
      if (std::filesystem::exists(path)) {
        try {
          Checkpoint saved = load_checkpoint(path);
          if (saved.config_echo == fingerprint) {
            emit(log, "[" + to_string(v) + "] reusing " + path.string());
            ckpt = std::move(saved);
          }
        } catch (const DataError& e) {
          emit(log, "[" + to_string(v) + "] ignoring unreadable " + path.string() + ": " + e.what());
        }
      }
      if (!ckpt) {
        ckpt = train(cfg, v, data, log).checkpoint;
        save_checkpoint(*ckpt, path);
      }
      report.metadata["epochs_run." + to_string(v)] = std::to_string(ckpt->epoch);
      report.metadata["train_seconds." + to_string(v)] = fmt("%.0f", ckpt->train_seconds);
      models.emplace_back(v, Classifier::from_checkpoint(*ckpt));
    }

    auto model_for = [&](Variant v) -> Classifier& {
      for (auto& [var, m] : models) {
        if (var == v) return m;
      }
      throw DomainError("variant not trained: " + to_string(v));
    };

    std::string current;
    LabeledDataset corrupted;
    for (const SuiteCase& c : suite_cases(cfg)) {
      const std::string spec_text = format_noise(c.noise.spec);
      if (spec_text != current) {
        corrupted = corrupt_dataset(data.test, c.noise.spec, cfg.noise_seed);
        current = spec_text;
      }
      const double acc = accuracy(model_for(c.variant), corrupted);
      report.rows.push_back({c.noise.label, spec_text, to_string(c.variant), acc});
      emit(log, fmt("%-13s %-24s %-10s %6.2f", c.noise.label.c_str(), spec_text.c_str(),
                    to_string(c.variant).c_str(), acc));
    }
  } catch (...) {
    report.complete = false;
    try {
      emit_report(report, ReportFormat::Csv, cfg.out_dir / "report.incomplete.csv");
      emit_report(report, ReportFormat::Markdown, cfg.out_dir / "report.incomplete.md");
    } catch (const Error&) {
    }
    throw;
  }

  for (ReportFormat f : {ReportFormat::Csv, ReportFormat::Markdown, ReportFormat::PlotData}) {
    emit_report(report, f, cfg.out_dir / ("report" + extension(f)));
  }
  std::filesystem::remove(cfg.out_dir / "report.incomplete.csv");
  std::filesystem::remove(cfg.out_dir / "report.incomplete.md");
  return report;
}

}  // namespace pixembed
