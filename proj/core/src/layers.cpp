#include "pixembed/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "pixembed/errors.hpp"

namespace pixembed {

namespace {

using RowMatrix = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using VecMap = Eigen::Map<Eigen::Matrix<real, Eigen::Dynamic, 1>>;
using ConstVecMap = Eigen::Map<const Eigen::Matrix<real, Eigen::Dynamic, 1>>;

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

void ensure_shape(Tensor& t, const Shape& shape) {
  if (t.shape() != shape) t = Tensor(shape);
}

struct ConvDims {
  std::size_t h, w, cin, cout, k, pad;
  std::size_t rows() const { return h * w; }
  std::size_t cols() const { return k * k * cin; }
};

ConvDims conv_dims(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require(input.rank() == 3, "conv2d: input must be (H,W,C), got " + shape_to_string(input.shape()));
  require(weights.rank() == 4, "conv2d: weights must be (k,k,Cin,Cout), got " +
                                   shape_to_string(weights.shape()));
  const auto& ws = weights.shape();
  require(ws[0] == ws[1] && ws[0] % 2 == 1, "conv2d: kernel must be square with odd extent");
  require(ws[2] == input.extent(2), "conv2d: input has " + std::to_string(input.extent(2)) +
                                        " channels, weights expect " + std::to_string(ws[2]));
  require(bias.rank() == 1 && bias.extent(0) == ws[3], "conv2d: bias must be (Cout,)");
  return {input.extent(0), input.extent(1), ws[2], ws[3], ws[0], (ws[0] - 1) / 2};
}

// columns[(y*W + x), (dy*k + dx)*Cin + c] = padded input[y+dy-pad, x+dx-pad, c]
void im2col(const Tensor& input, const ConvDims& d, RealBuffer& columns) {
  columns.assign(d.rows() * d.cols(), 0);
  const real* src = input.values().data();
  for (std::size_t y = 0; y < d.h; ++y) {
    for (std::size_t x = 0; x < d.w; ++x) {
      real* row = columns.data() + (y * d.w + x) * d.cols();
      for (std::size_t dy = 0; dy < d.k; ++dy) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + dy) - static_cast<std::ptrdiff_t>(d.pad);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
        for (std::size_t dx = 0; dx < d.k; ++dx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + dx) - static_cast<std::ptrdiff_t>(d.pad);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
          const real* px = src + (static_cast<std::size_t>(iy) * d.w + static_cast<std::size_t>(ix)) * d.cin;
          std::copy(px, px + d.cin, row + (dy * d.k + dx) * d.cin);
        }
      }
    }
  }
}

void col2im_add(const RealBuffer& grad_columns, const ConvDims& d, std::span<real> grad_input) {
  real* dst = grad_input.data();
  for (std::size_t y = 0; y < d.h; ++y) {
    for (std::size_t x = 0; x < d.w; ++x) {
      const real* row = grad_columns.data() + (y * d.w + x) * d.cols();
      for (std::size_t dy = 0; dy < d.k; ++dy) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + dy) - static_cast<std::ptrdiff_t>(d.pad);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
        for (std::size_t dx = 0; dx < d.k; ++dx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + dx) - static_cast<std::ptrdiff_t>(d.pad);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
          real* px = dst + (static_cast<std::size_t>(iy) * d.w + static_cast<std::size_t>(ix)) * d.cin;
          const real* g = row + (dy * d.k + dx) * d.cin;
          for (std::size_t c = 0; c < d.cin; ++c) px[c] += g[c];
        }
      }
    }
  }
}

}  // namespace

// --------------------------------------------------------------------------
// Convolution

void conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias, Tensor& out,
                    ConvWorkspace& ws) {
  const ConvDims d = conv_dims(input, weights, bias);
  ensure_shape(out, {d.h, d.w, d.cout});
  im2col(input, d, ws.columns);

  ConstMatMap cols(ws.columns.data(), d.rows(), d.cols());
  ConstMatMap w(weights.values().data(), d.cols(), d.cout);
  MatMap o(out.values().data(), d.rows(), d.cout);
  o.noalias() = cols * w;
  ConstVecMap b(bias.values().data(), d.cout);
  o.rowwise() += b.transpose();
}

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  Tensor out;
  ConvWorkspace ws;
  conv2d_forward(input, weights, bias, out, ws);
  return out;
}

void conv2d_backward(Tensor& input, Tensor& weights, Tensor& bias, const Tensor& out,
                     ConvWorkspace& ws, bool columns_cached, bool propagate_input) {
  const ConvDims d = conv_dims(input, weights, bias);
  require(out.shape() == Shape{d.h, d.w, d.cout},
          "conv2d_backward: grad_out shape " + shape_to_string(out.shape()) +
              " does not match forward output");
  if (!columns_cached || ws.columns.size() != d.rows() * d.cols()) im2col(input, d, ws.columns);

  ConstMatMap cols(ws.columns.data(), d.rows(), d.cols());
  ConstMatMap gout(out.grad().data(), d.rows(), d.cout);
  MatMap gw(weights.grad().data(), d.cols(), d.cout);
  gw.noalias() += cols.transpose() * gout;
  VecMap gb(bias.grad().data(), d.cout);
  gb += gout.colwise().sum().transpose();

  if (!propagate_input) return;
  ws.grad_columns.resize(d.rows() * d.cols());
  MatMap gcols(ws.grad_columns.data(), d.rows(), d.cols());
  ConstMatMap w(weights.values().data(), d.cols(), d.cout);
  gcols.noalias() = gout * w.transpose();
  col2im_add(ws.grad_columns, d, input.grad());
}

void conv2d_backward(Tensor& input, Tensor& weights, Tensor& bias, const Tensor& out) {
  ConvWorkspace ws;
  conv2d_backward(input, weights, bias, out, ws, false, true);
}

// --------------------------------------------------------------------------
// Max pooling

void maxpool2_forward(const Tensor& input, Tensor& out, ArgmaxRecord& record) {
  require(input.rank() == 3, "maxpool2: input must be (H,W,C)");
  const std::size_t h = input.extent(0), w = input.extent(1), c = input.extent(2);
  require(h % 2 == 0 && w % 2 == 0,
          "maxpool2: spatial extents must be even, got " + shape_to_string(input.shape()));
  const std::size_t oh = h / 2, ow = w / 2;
  ensure_shape(out, {oh, ow, c});
  record.input_shape = input.shape();
  record.output_shape = out.shape();
  record.winners.resize(out.size());

  const auto in = input.values();
  auto o = out.values();
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        std::size_t best = ((2 * y) * w + 2 * x) * c + ch;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = ((2 * y + dy) * w + (2 * x + dx)) * c + ch;
            if (in[idx] > in[best]) best = idx;  // strict: first position wins ties
          }
        }
        const std::size_t oi = (y * ow + x) * c + ch;
        o[oi] = in[best];
        record.winners[oi] = best;
      }
    }
  }
}

PoolResult maxpool2_forward(const Tensor& input) {
  PoolResult r;
  maxpool2_forward(input, r.output, r.record);
  return r;
}

void maxpool2_backward(const ArgmaxRecord& record, const Tensor& out, Tensor& input) {
  require(out.shape() == record.output_shape && record.winners.size() == out.size(),
          "maxpool2_backward: grad shape " + shape_to_string(out.shape()) +
              " does not match the recorded forward output");
  require(input.shape() == record.input_shape, "maxpool2_backward: input shape mismatch");
  auto gin = input.grad();
  const auto gout = out.grad();
  for (std::size_t i = 0; i < gout.size(); ++i) gin[record.winners[i]] += gout[i];
}

// --------------------------------------------------------------------------
// ReLU / fold

void relu_forward(const Tensor& input, Tensor& out) {
  ensure_shape(out, input.shape());
  const auto in = input.values();
  auto o = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = in[i] > 0 ? in[i] : real{0};
}

Tensor relu_forward(const Tensor& input) {
  Tensor out;
  relu_forward(input, out);
  return out;
}

void relu_backward(Tensor& input, const Tensor& out) {
  require(out.size() == input.size(), "relu_backward: size mismatch");
  const auto in = input.values();
  const auto gout = out.grad();
  auto gin = input.grad();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] > 0) gin[i] += gout[i];
  }
}

Tensor fold(const Tensor& input) {
  Tensor out(Shape{input.size()}, std::vector<real>(input.values().begin(), input.values().end()));
  return out;
}

void fold_backward(Tensor& input, const Tensor& out) {
  require(out.size() == input.size(), "fold_backward: size mismatch");
  auto gin = input.grad();
  const auto gout = out.grad();
  for (std::size_t i = 0; i < gin.size(); ++i) gin[i] += gout[i];
}

// --------------------------------------------------------------------------
// Dense

namespace {
void check_dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require(weights.rank() == 2, "dense: weights must be (N,K)");
  require(input.size() == weights.extent(0),
          "dense: input has " + std::to_string(input.size()) + " features, weights expect " +
              std::to_string(weights.extent(0)));
  require(bias.rank() == 1 && bias.extent(0) == weights.extent(1), "dense: bias must be (K,)");
}
}  // namespace

void dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias, Tensor& out) {
  check_dense(input, weights, bias);
  const std::size_t n = weights.extent(0), k = weights.extent(1);
  ensure_shape(out, {k});
  ConstMatMap w(weights.values().data(), n, k);
  ConstVecMap x(input.values().data(), n);
  ConstVecMap b(bias.values().data(), k);
  VecMap o(out.values().data(), k);
  o.noalias() = w.transpose() * x;
  o += b;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  Tensor out;
  dense_forward(input, weights, bias, out);
  return out;
}

void dense_backward(Tensor& input, Tensor& weights, Tensor& bias, const Tensor& out,
                    bool propagate_input) {
  check_dense(input, weights, bias);
  const std::size_t n = weights.extent(0), k = weights.extent(1);
  require(out.size() == k, "dense_backward: grad_out must be (K,)");
  ConstVecMap x(input.values().data(), n);
  ConstVecMap g(out.grad().data(), k);
  MatMap gw(weights.grad().data(), n, k);
  gw.noalias() += x * g.transpose();
  VecMap gb(bias.grad().data(), k);
  gb += g;
  if (propagate_input) {
    ConstMatMap w(weights.values().data(), n, k);
    VecMap gx(input.grad().data(), n);
    gx.noalias() += w * g;
  }
}

// --------------------------------------------------------------------------
// Loss

LossResult softmax_cross_entropy(const Tensor& logits, int label) {
  const auto z = logits.values();
  if (label < 0 || static_cast<std::size_t>(label) >= z.size()) {
    throw DomainError("label " + std::to_string(label) + " outside [0, " +
                      std::to_string(z.size()) + ")");
  }
  const real zmax = *std::max_element(z.begin(), z.end());
  real denom = 0;
  for (real v : z) denom += std::exp(v - zmax);
  const real log_denom = std::log(denom);

  LossResult r;
  r.loss = -(z[label] - zmax - log_denom);
  r.grad_logits = Tensor(logits.shape());
  auto g = r.grad_logits.values();
  for (std::size_t i = 0; i < z.size(); ++i) g[i] = std::exp(z[i] - zmax - log_denom);
  g[label] -= 1;
  return r;
}

// --------------------------------------------------------------------------
// Embedding

void embedding_forward(const IndexGrid& indices, const EmbeddingTable& table, Tensor& out) {
  require(indices.indices.size() == indices.height * indices.width, "embedding: malformed index grid");
  const std::size_t m = table.dim();
  const std::size_t v = table.vocab_size();
  ensure_shape(out, {indices.height, indices.width, m});
  const real* rows = table.weights.values().data();
  real* o = out.values().data();
  for (std::size_t p = 0; p < indices.indices.size(); ++p) {
    const std::int32_t i = indices.indices[p];
    if (i < 0 || static_cast<std::size_t>(i) >= v) {
      throw OutOfVocabularyError("embedding index " + std::to_string(i) + " outside [0, " +
                                 std::to_string(v) + ")");
    }
    std::copy(rows + static_cast<std::size_t>(i) * m, rows + (static_cast<std::size_t>(i) + 1) * m,
              o + p * m);
  }
}

Tensor embedding_forward(const IndexGrid& indices, const EmbeddingTable& table) {
  Tensor out;
  embedding_forward(indices, table, out);
  return out;
}

void embedding_backward(const IndexGrid& indices, const Tensor& out, EmbeddingTable& table) {
  const std::size_t m = table.dim();
  const std::size_t v = table.vocab_size();
  require(out.shape() == Shape{indices.height, indices.width, m},
          "embedding_backward: grad shape does not match the index grid");
  const real* g = out.grad().data();
  real* gt = table.weights.grad().data();
  for (std::size_t p = 0; p < indices.indices.size(); ++p) {
    const std::int32_t i = indices.indices[p];
    if (i < 0 || static_cast<std::size_t>(i) >= v) {
      throw OutOfVocabularyError("embedding index " + std::to_string(i) + " outside the table");
    }
    real* row = gt + static_cast<std::size_t>(i) * m;
    const real* src = g + p * m;
    for (std::size_t c = 0; c < m; ++c) row[c] += src[c];
  }
}

}  // namespace pixembed

// --------------------------------------------------------------------------
// Fused embedding + convolution

namespace pixembed {

namespace {

struct FusedDims {
  std::size_t h, w, m, f, k, pad;
  std::size_t taps() const { return k * k; }
  std::size_t proj_cols() const { return k * k * f; }
};

FusedDims fused_dims(const IndexGrid& indices, const EmbeddingTable& table, const Tensor& weights,
                     const Tensor& bias) {
  require(indices.indices.size() == indices.height * indices.width, "embedding_conv2d: malformed index grid");
  require(weights.rank() == 4, "embedding_conv2d: weights must be (k,k,M,F)");
  const auto& ws = weights.shape();
  require(ws[0] == ws[1] && ws[0] % 2 == 1, "embedding_conv2d: kernel must be square with odd extent");
  require(ws[2] == table.dim(), "embedding_conv2d: table width " + std::to_string(table.dim()) +
                                    " does not match kernel input channels " + std::to_string(ws[2]));
  require(bias.rank() == 1 && bias.extent(0) == ws[3], "embedding_conv2d: bias must be (F,)");
  return {indices.height, indices.width, ws[2], ws[3], ws[0], (ws[0] - 1) / 2};
}

}  // namespace

void embedding_conv2d_forward(const IndexGrid& indices, const EmbeddingTable& table,
                              const Tensor& weights, const Tensor& bias, Tensor& out,
                              EmbeddingConvCache& cache) {
  const FusedDims d = fused_dims(indices, table, weights, bias);
  const std::size_t vocab = table.vocab_size();

  // Distinct rows in ascending order so the reduction order is fixed.
  cache.rows.clear();
  std::vector<std::int32_t> slot_of(vocab, -1);
  for (std::int32_t i : indices.indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= vocab) {
      throw OutOfVocabularyError("embedding index " + std::to_string(i) + " outside [0, " +
                                 std::to_string(vocab) + ")");
    }
    slot_of[static_cast<std::size_t>(i)] = 0;
  }
  for (std::size_t v = 0; v < vocab; ++v) {
    if (slot_of[v] == 0) {
      slot_of[v] = static_cast<std::int32_t>(cache.rows.size());
      cache.rows.push_back(static_cast<std::int32_t>(v));
    }
  }
  cache.slots.resize(indices.indices.size());
  for (std::size_t p = 0; p < indices.indices.size(); ++p) {
    cache.slots[p] = slot_of[static_cast<std::size_t>(indices.indices[p])];
  }

  const std::size_t u = cache.rows.size();
  cache.gathered.resize(u * d.m);
  const real* table_rows = table.weights.values().data();
  for (std::size_t s = 0; s < u; ++s) {
    const real* src = table_rows + static_cast<std::size_t>(cache.rows[s]) * d.m;
    std::copy(src, src + d.m, cache.gathered.data() + s * d.m);
  }

  // kernel[c, t*F + f] = W[t, c, f] with t = dy*k + dx
  cache.kernel.resize(d.m * d.proj_cols());
  const real* w = weights.values().data();
  for (std::size_t t = 0; t < d.taps(); ++t) {
    for (std::size_t c = 0; c < d.m; ++c) {
      std::copy(w + (t * d.m + c) * d.f, w + (t * d.m + c + 1) * d.f,
                cache.kernel.data() + c * d.proj_cols() + t * d.f);
    }
  }

  cache.projected.resize(u * d.proj_cols());
  ConstMatMap g(cache.gathered.data(), u, d.m);
  ConstMatMap kmat(cache.kernel.data(), d.m, d.proj_cols());
  MatMap proj(cache.projected.data(), u, d.proj_cols());
  proj.noalias() = g * kmat;

  ensure_shape(out, {d.h, d.w, d.f});
  real* o = out.values().data();
  const real* b = bias.values().data();
  for (std::size_t y = 0; y < d.h; ++y) {
    for (std::size_t x = 0; x < d.w; ++x) {
      real* cell = o + (y * d.w + x) * d.f;
      std::copy(b, b + d.f, cell);
      for (std::size_t dy = 0; dy < d.k; ++dy) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + dy) - static_cast<std::ptrdiff_t>(d.pad);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
        for (std::size_t dx = 0; dx < d.k; ++dx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + dx) - static_cast<std::ptrdiff_t>(d.pad);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
          const std::size_t slot =
              static_cast<std::size_t>(cache.slots[static_cast<std::size_t>(iy) * d.w + static_cast<std::size_t>(ix)]);
          const real* src = cache.projected.data() + slot * d.proj_cols() + (dy * d.k + dx) * d.f;
          for (std::size_t f = 0; f < d.f; ++f) cell[f] += src[f];
        }
      }
    }
  }
}

void embedding_conv2d_backward(const IndexGrid& indices, EmbeddingTable& table, Tensor& weights,
                               Tensor& bias, const Tensor& out, EmbeddingConvCache& cache) {
  const FusedDims d = fused_dims(indices, table, weights, bias);
  require(out.shape() == Shape{d.h, d.w, d.f}, "embedding_conv2d_backward: grad shape mismatch");
  require(cache.slots.size() == indices.indices.size(), "embedding_conv2d_backward: stale cache");
  const std::size_t u = cache.rows.size();
  const real* gout = out.grad().data();

  // grad_projected[slot, tap, :] collects every output cotangent that read it.
  cache.grad_projected.assign(u * d.proj_cols(), 0);
  real* gb = bias.grad().data();
  for (std::size_t y = 0; y < d.h; ++y) {
    for (std::size_t x = 0; x < d.w; ++x) {
      const real* cell = gout + (y * d.w + x) * d.f;
      for (std::size_t f = 0; f < d.f; ++f) gb[f] += cell[f];
      for (std::size_t dy = 0; dy < d.k; ++dy) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + dy) - static_cast<std::ptrdiff_t>(d.pad);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
        for (std::size_t dx = 0; dx < d.k; ++dx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + dx) - static_cast<std::ptrdiff_t>(d.pad);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
          const std::size_t slot =
              static_cast<std::size_t>(cache.slots[static_cast<std::size_t>(iy) * d.w + static_cast<std::size_t>(ix)]);
          real* dst = cache.grad_projected.data() + slot * d.proj_cols() + (dy * d.k + dx) * d.f;
          for (std::size_t f = 0; f < d.f; ++f) dst[f] += cell[f];
        }
      }
    }
  }

  ConstMatMap gproj(cache.grad_projected.data(), u, d.proj_cols());
  ConstMatMap g(cache.gathered.data(), u, d.m);
  ConstMatMap kmat(cache.kernel.data(), d.m, d.proj_cols());

  // Weight gradient in the permuted layout, then scattered back to (k,k,M,F).
  RowMatrix gk = g.transpose() * gproj;  // (M, k*k*F)
  real* gw = weights.grad().data();
  for (std::size_t t = 0; t < d.taps(); ++t) {
    for (std::size_t c = 0; c < d.m; ++c) {
      const real* src = gk.data() + c * d.proj_cols() + t * d.f;
      real* dst = gw + (t * d.m + c) * d.f;
      for (std::size_t f = 0; f < d.f; ++f) dst[f] += src[f];
    }
  }

  cache.grad_gathered.resize(u * d.m);
  MatMap ggath(cache.grad_gathered.data(), u, d.m);
  ggath.noalias() = gproj * kmat.transpose();
  real* gt = table.weights.grad().data();
  for (std::size_t s = 0; s < u; ++s) {
    real* row = gt + static_cast<std::size_t>(cache.rows[s]) * d.m;
    const real* src = cache.grad_gathered.data() + s * d.m;
    for (std::size_t c = 0; c < d.m; ++c) row[c] += src[c];
  }
}

}  // namespace pixembed
