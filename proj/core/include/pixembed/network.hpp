#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pixembed/layers.hpp"
#include "pixembed/tensor.hpp"

namespace pixembed {

enum class LayerKind { Embedding, Conv, MaxPool, ReLU, Fold, Dense };

std::string to_string(LayerKind kind);

/// One entry of a sequential layout. Meaning of the sizes per kind:
///   Embedding: in = vocab size, out = embedding size
///   Conv:      in/out channels, kernel extent
///   Dense:     in/out features
struct LayerSpec {
  LayerKind kind;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t kernel = 0;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// The seven-row classifier: [Embedding] Conv3x3(64) ReLU MaxPool Conv3x3(64)
/// ReLU MaxPool Fold Dense(10). With `vocab_size` the stack starts with an
/// embedding layer of `input_channels` columns; otherwise the network reads a
/// (28, 28, input_channels) tensor directly.
std::vector<LayerSpec> classifier_layout(std::size_t input_channels,
                                         std::optional<std::size_t> vocab_size = std::nullopt);

/// Output shape of one layer; throws ShapeError on incompatible input.
Shape infer_shape(const LayerSpec& spec, const Shape& input);

/// Output shape after every layer of `layout`, in order.
std::vector<Shape> trace_shapes(const std::vector<LayerSpec>& layout, const Shape& input);

/// Sequential network over a fixed layout with per-layer caches for a single
/// sample. Mini-batches are run sample by sample with gradients accumulating
/// in the parameter buffers.
///
/// Not copyable while an optimizer holds pointers into it; keep it in place.
class Network {
 public:
  /// Conv/Dense weights get Glorot-uniform init from `seed`, biases zero.
  /// A layout starting with Embedding requires `table` with matching extents.
  Network(std::vector<LayerSpec> layout, std::uint64_t seed,
          std::optional<EmbeddingTable> table = std::nullopt);

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  const std::vector<LayerSpec>& layout() const { return layout_; }
  bool uses_embedding() const;

  const Tensor& forward(const Tensor& input);
  const Tensor& forward(const IndexGrid& input);

  /// Propagates `grad_logits` from the last forward call into every
  /// parameter's grad buffer (accumulating).
  void backward(std::span<const real> grad_logits);

  /// Argmax over the logits of the last forward call; lowest index wins ties.
  int predicted_class() const;

  std::vector<Tensor*> parameters();
  std::vector<std::pair<std::string, Tensor*>> named_parameters();
  std::vector<std::pair<std::string, const Tensor*>> named_parameters() const;
  void zero_grad();

  const EmbeddingTable* embedding() const;
  EmbeddingTable* embedding();

  /// Activation after layer i of the last forward pass. With the fused
  /// embedding+conv path the embedding output (layer 0) is never built.
  const Tensor& activation(std::size_t layer) const { return acts_.at(layer + 1); }

  /// Run Embedding -> Conv through embedding_conv2d_* (default on).
  void set_fused_embedding_conv(bool on) { fused_ = on; }
  bool fused_embedding_conv() const { return fused_ && can_fuse(); }

 private:
  struct Layer {
    LayerSpec spec;
    Tensor weights;
    Tensor bias;
    EmbeddingTable table;
    ConvWorkspace conv_ws;
    ArgmaxRecord pool_record;
    std::string name;
  };

  const Tensor& run_from(std::size_t first_layer);
  bool can_fuse() const;

  std::vector<LayerSpec> layout_;
  std::vector<Layer> layers_;
  std::vector<Tensor> acts_;  // acts_[0] = input, acts_[i + 1] = output of layer i
  IndexGrid indices_;
  EmbeddingConvCache fused_cache_;
  bool fused_ = true;
};

}  // namespace pixembed
