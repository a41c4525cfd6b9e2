#include "pixembed/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pixembed/errors.hpp"
#include "pixembed/random.hpp"

namespace pixembed {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Embedding: return "Embedding";
    case LayerKind::Conv: return "Convolution";
    case LayerKind::MaxPool: return "Max pooling";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::Fold: return "Folding";
    case LayerKind::Dense: return "Full connection";
  }
  return "?";
}

std::vector<LayerSpec> classifier_layout(std::size_t input_channels,
                                         std::optional<std::size_t> vocab_size) {
  constexpr std::size_t kFilters = 64;
  constexpr std::size_t kKernel = 3;
  constexpr std::size_t kFolded = 7 * 7 * kFilters;
  std::vector<LayerSpec> layout;
  if (vocab_size) layout.push_back({LayerKind::Embedding, *vocab_size, input_channels, 0});
  layout.push_back({LayerKind::Conv, input_channels, kFilters, kKernel});
  layout.push_back({LayerKind::ReLU});
  layout.push_back({LayerKind::MaxPool});
  layout.push_back({LayerKind::Conv, kFilters, kFilters, kKernel});
  layout.push_back({LayerKind::ReLU});
  layout.push_back({LayerKind::MaxPool});
  layout.push_back({LayerKind::Fold});
  layout.push_back({LayerKind::Dense, kFolded, 10, 0});
  return layout;
}

Shape infer_shape(const LayerSpec& spec, const Shape& input) {
  auto fail = [&](const std::string& why) -> Shape {
    throw ShapeError(to_string(spec.kind) + ": " + why + " (input " + shape_to_string(input) + ")");
  };
  switch (spec.kind) {
    case LayerKind::Embedding:
      // Input is an (H, W) index grid.
      if (input.size() != 2) return fail("expects an (H,W) index grid");
      return {input[0], input[1], spec.out};
    case LayerKind::Conv:
      if (input.size() != 3) return fail("expects (H,W,C)");
      if (input[2] != spec.in) return fail("channel mismatch");
      if (spec.kernel % 2 == 0) return fail("kernel extent must be odd");
      return {input[0], input[1], spec.out};
    case LayerKind::MaxPool:
      if (input.size() != 3) return fail("expects (H,W,C)");
      if (input[0] % 2 || input[1] % 2) return fail("odd spatial extent");
      return {input[0] / 2, input[1] / 2, input[2]};
    case LayerKind::ReLU:
      return input;
    case LayerKind::Fold:
      return {shape_size(input)};
    case LayerKind::Dense:
      if (input.size() != 1 || input[0] != spec.in) return fail("feature mismatch");
      return {spec.out};
  }
  return fail("unknown layer");
}

std::vector<Shape> trace_shapes(const std::vector<LayerSpec>& layout, const Shape& input) {
  std::vector<Shape> shapes;
  Shape cur = input;
  for (const auto& spec : layout) {
    cur = infer_shape(spec, cur);
    shapes.push_back(cur);
  }
  return shapes;
}

// ---------------------------------------------------------------------------

namespace {

Tensor glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, std::uint64_t seed) {
  const real limit = std::sqrt(real{6} / static_cast<real>(fan_in + fan_out));
  return Tensor(std::move(shape), init::Uniform{-limit, limit, seed});
}

}  // namespace

Network::Network(std::vector<LayerSpec> layout, std::uint64_t seed,
                 std::optional<EmbeddingTable> table)
    : layout_(std::move(layout)) {
  if (layout_.empty()) throw ShapeError("network layout is empty");
  std::size_t convs = 0, denses = 0;
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    const LayerSpec& spec = layout_[i];
    Layer layer{spec, {}, {}, {}, {}, {}, {}};
    const std::uint64_t s = derive_seed(seed, i);
    switch (spec.kind) {
      case LayerKind::Embedding:
        if (i != 0) throw ShapeError("embedding must be the first layer");
        if (!table) throw ShapeError("embedding layer requires a table");
        if (table->vocab_size() != spec.in || table->dim() != spec.out) {
          throw ShapeError("embedding table is " + shape_to_string(table->weights.shape()) +
                           ", layout expects (" + std::to_string(spec.in) + "," +
                           std::to_string(spec.out) + ")");
        }
        layer.table = std::move(*table);
        layer.name = "embedding";
        break;
      case LayerKind::Conv:
        layer.weights = glorot({spec.kernel, spec.kernel, spec.in, spec.out},
                               spec.kernel * spec.kernel * spec.in,
                               spec.kernel * spec.kernel * spec.out, s);
        layer.bias = Tensor({spec.out});
        layer.name = "conv" + std::to_string(++convs);
        break;
      case LayerKind::Dense:
        layer.weights = glorot({spec.in, spec.out}, spec.in, spec.out, s);
        layer.bias = Tensor({spec.out});
        layer.name = "dense" + std::to_string(++denses);
        break;
      default:
        break;
    }
    layers_.push_back(std::move(layer));
  }
  acts_.resize(layers_.size() + 1);
}

bool Network::uses_embedding() const { return layout_.front().kind == LayerKind::Embedding; }

bool Network::can_fuse() const {
  return layout_.size() >= 2 && layout_[0].kind == LayerKind::Embedding && layout_[1].kind == LayerKind::Conv;
}

const Tensor& Network::forward(const Tensor& input) {
  if (uses_embedding()) throw ShapeError("network expects an index grid input");
  if (acts_[0].shape() != input.shape()) acts_[0] = Tensor(input.shape());
  std::copy(input.values().begin(), input.values().end(), acts_[0].values().begin());
  return run_from(0);
}

const Tensor& Network::forward(const IndexGrid& input) {
  if (!uses_embedding()) throw ShapeError("network expects a tensor input");
  indices_ = input;
  if (fused_embedding_conv()) {
    Layer& conv = layers_[1];
    embedding_conv2d_forward(indices_, layers_[0].table, conv.weights, conv.bias, acts_[2], fused_cache_);
    return run_from(2);
  }
  embedding_forward(indices_, layers_[0].table, acts_[1]);
  return run_from(1);
}

const Tensor& Network::run_from(std::size_t first) {
  for (std::size_t i = first; i < layers_.size(); ++i) {
    Layer& l = layers_[i];
    const Tensor& in = acts_[i];
    Tensor& out = acts_[i + 1];
    switch (l.spec.kind) {
      case LayerKind::Conv: conv2d_forward(in, l.weights, l.bias, out, l.conv_ws); break;
      case LayerKind::ReLU: relu_forward(in, out); break;
      case LayerKind::MaxPool: maxpool2_forward(in, out, l.pool_record); break;
      case LayerKind::Fold:
        if (out.size() != in.size()) out = Tensor(Shape{in.size()});
        std::copy(in.values().begin(), in.values().end(), out.values().begin());
        break;
      case LayerKind::Dense: dense_forward(in, l.weights, l.bias, out); break;
      case LayerKind::Embedding: throw ShapeError("embedding must be the first layer");
    }
  }
  return acts_.back();
}

void Network::backward(std::span<const real> grad_logits) {
  Tensor& logits = acts_.back();
  if (grad_logits.size() != logits.size()) throw ShapeError("backward: gradient/logit size mismatch");
  std::copy(grad_logits.begin(), grad_logits.end(), logits.grad().begin());

  const bool fused = uses_embedding() && fused_embedding_conv();
  for (std::size_t i = layers_.size(); i-- > 0;) {
    Layer& l = layers_[i];
    if (fused && i == 1) {
      embedding_conv2d_backward(indices_, layers_[0].table, l.weights, l.bias, acts_[2], fused_cache_);
      break;
    }
    Tensor& in = acts_[i];
    const Tensor& out = acts_[i + 1];
    const bool first = (i == 0);
    // The first layer's input is data; its gradient is never needed.
    if (!first) in.zero_grad();
    switch (l.spec.kind) {
      case LayerKind::Embedding: embedding_backward(indices_, out, l.table); break;
      case LayerKind::Conv:
        conv2d_backward(in, l.weights, l.bias, out, l.conv_ws, true, !first);
        break;
      case LayerKind::ReLU: relu_backward(in, out); break;
      case LayerKind::MaxPool: maxpool2_backward(l.pool_record, out, in); break;
      case LayerKind::Fold: fold_backward(in, out); break;
      case LayerKind::Dense: dense_backward(in, l.weights, l.bias, out, !first); break;
    }
  }
}

int Network::predicted_class() const {
  const auto z = acts_.back().values();
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

std::vector<std::pair<std::string, Tensor*>> Network::named_parameters() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (auto& l : layers_) {
    switch (l.spec.kind) {
      case LayerKind::Embedding: out.emplace_back(l.name + ".weight", &l.table.weights); break;
      case LayerKind::Conv:
      case LayerKind::Dense:
        out.emplace_back(l.name + ".weight", &l.weights);
        out.emplace_back(l.name + ".bias", &l.bias);
        break;
      default: break;
    }
  }
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> Network::named_parameters() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<Network*>(this)->named_parameters()) out.emplace_back(name, t);
  return out;
}

std::vector<Tensor*> Network::parameters() {
  std::vector<Tensor*> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

void Network::zero_grad() {
  for (Tensor* t : parameters()) t->zero_grad();
}

const EmbeddingTable* Network::embedding() const {
  return uses_embedding() ? &layers_.front().table : nullptr;
}

EmbeddingTable* Network::embedding() { return uses_embedding() ? &layers_.front().table : nullptr; }

}  // namespace pixembed
