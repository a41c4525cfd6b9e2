#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pixembed/tensor.hpp"

namespace pixembed {

// Layer primitives. Activations are (H, W, C) row-major; parameters follow
// the same convention: conv weights (k, k, Cin, Cout), dense weights (N, K).
//
// Every *_backward reads the cotangent from `out.grad()` and ACCUMULATES into
// the grad buffers of its inputs and parameters.

// ---------------------------------------------------------------------------
// Convolution: stride 1, odd kernel, zero "same" padding of (k-1)/2.

/// Scratch space for the im2col lowering. Reusing one across calls avoids
/// reallocating the column matrix on every sample.
struct ConvWorkspace {
  RealBuffer columns;              // (H*W, k*k*Cin)
  RealBuffer grad_columns;         // same extents
};

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
void conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                    Tensor& out, ConvWorkspace& ws);

/// `ws` must hold the columns of the matching forward call when
/// `columns_cached` is true; otherwise they are rebuilt from `input`.
/// With `propagate_input` false the input gradient is skipped (data layer).
void conv2d_backward(Tensor& input, Tensor& weights, Tensor& bias, const Tensor& out);
void conv2d_backward(Tensor& input, Tensor& weights, Tensor& bias, const Tensor& out,
                     ConvWorkspace& ws, bool columns_cached, bool propagate_input);

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2.

struct ArgmaxRecord {
  Shape input_shape;
  Shape output_shape;
  std::vector<std::size_t> winners;  // flat input index per output cell
};

struct PoolResult {
  Tensor output;
  ArgmaxRecord record;
};

/// Ties go to the first position of the row-major window scan.
PoolResult maxpool2_forward(const Tensor& input);
void maxpool2_forward(const Tensor& input, Tensor& out, ArgmaxRecord& record);

/// Routes out.grad() to the recorded winners of `input`.
void maxpool2_backward(const ArgmaxRecord& record, const Tensor& out, Tensor& input);

// ---------------------------------------------------------------------------

Tensor relu_forward(const Tensor& input);
void relu_forward(const Tensor& input, Tensor& out);
void relu_backward(Tensor& input, const Tensor& out);

/// Row-major flatten to rank 1.
Tensor fold(const Tensor& input);
void fold_backward(Tensor& input, const Tensor& out);

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
void dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias, Tensor& out);
void dense_backward(Tensor& input, Tensor& weights, Tensor& bias, const Tensor& out,
                    bool propagate_input = true);

// ---------------------------------------------------------------------------

struct LossResult {
  real loss = 0;
  Tensor grad_logits;  // gradient stored in values()
};

/// -log softmax(logits)[label] with max subtraction. Throws DomainError when
/// label is outside [0, classes).
LossResult softmax_cross_entropy(const Tensor& logits, int label);

// ---------------------------------------------------------------------------
// Embedding lookup.

/// Integer grid of table row indices, row-major (H, W).
struct IndexGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::int32_t> indices;

  std::int32_t at(std::size_t y, std::size_t x) const { return indices[y * width + x]; }
};

/// V x M trainable matrix; row i is the vector for index i.
struct EmbeddingTable {
  Tensor weights;  // shape (V, M)

  std::size_t vocab_size() const { return weights.extent(0); }
  std::size_t dim() const { return weights.extent(1); }
};

/// out[y, x, :] = table row indices[y, x]. Throws OutOfVocabularyError.
Tensor embedding_forward(const IndexGrid& indices, const EmbeddingTable& table);
void embedding_forward(const IndexGrid& indices, const EmbeddingTable& table, Tensor& out);

/// Scatter-adds out.grad()[y, x, :] into table row indices[y, x].
void embedding_backward(const IndexGrid& indices, const Tensor& out, EmbeddingTable& table);

// ---------------------------------------------------------------------------
// Embedding lookup followed directly by a convolution.
//
// The convolution of looked-up rows only depends on which table rows occur,
// so each distinct row is projected through the kernel once:
//   proj[u, dy, dx, :] = row_u . W[dy, dx]
//   out[y, x, :] = bias + sum_{dy,dx} proj[index at (y+dy-pad, x+dx-pad), dy, dx, :]
// Numerically equivalent to embedding_forward + conv2d_forward (up to
// summation order) at a fraction of the cost when few distinct indices occur.

struct EmbeddingConvCache {
  std::vector<std::int32_t> rows;   // distinct table rows, ascending
  std::vector<std::int32_t> slots;  // per pixel: position in `rows`
  RealBuffer gathered;              // (U, M)
  RealBuffer kernel;                // (M, k*k*F), W permuted
  RealBuffer projected;             // (U, k*k*F)
  RealBuffer grad_projected;        // (U, k*k*F)
  RealBuffer grad_gathered;         // (U, M)
};

void embedding_conv2d_forward(const IndexGrid& indices, const EmbeddingTable& table,
                              const Tensor& weights, const Tensor& bias, Tensor& out,
                              EmbeddingConvCache& cache);

/// Accumulates into the table, weight and bias grads from out.grad(). The
/// cache must come from the matching forward call.
void embedding_conv2d_backward(const IndexGrid& indices, EmbeddingTable& table, Tensor& weights,
                               Tensor& bias, const Tensor& out, EmbeddingConvCache& cache);

}  // namespace pixembed
