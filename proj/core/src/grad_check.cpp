#include "pixembed/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "pixembed/errors.hpp"

namespace pixembed {

std::vector<real> numeric_gradient(const ScalarFunction& f, std::span<const real> point, real eps) {
  std::vector<real> x(point.begin(), point.end());
  std::vector<real> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const real saved = x[i];
    x[i] = saved + eps;
    const real up = f(x);
    x[i] = saved - eps;
    const real down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2 * eps);
  }
  return g;
}

real max_relative_error(std::span<const real> analytic, std::span<const real> numeric) {
  if (analytic.size() != numeric.size()) throw ShapeError("gradient size mismatch");
  real worst = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const real a = analytic[i], n = numeric[i];
    const real denom = std::max({std::abs(a), std::abs(n), real{1e-8}});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

real gradient_check(const ScalarFunction& f, std::span<const real> point,
                    std::span<const real> analytic, real eps) {
  const auto numeric = numeric_gradient(f, point, eps);
  return max_relative_error(analytic, numeric);
}

void nudge_from_kinks(std::span<real> values, real margin) {
  for (real& v : values) {
    if (std::abs(v) < margin) v = (v < 0 ? -margin : margin);
  }
}

void nudge_pool_ties(Tensor& input, real margin) {
  if (input.rank() != 3) throw ShapeError("nudge_pool_ties: input must be (H,W,C)");
  const std::size_t h = input.extent(0), w = input.extent(1), c = input.extent(2);
  for (std::size_t y = 0; y + 1 < h; y += 2) {
    for (std::size_t x = 0; x + 1 < w; x += 2) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        real* best = &input.at(y, x, ch);
        real second = -INFINITY;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            real* v = &input.at(y + dy, x + dx, ch);
            if (*v > *best) {
              second = *best;
              best = v;
            } else if (v != best) {
              second = std::max(second, *v);
            }
          }
        }
        if (*best - second < margin) *best = second + margin;
      }
    }
  }
}

}  // namespace pixembed
