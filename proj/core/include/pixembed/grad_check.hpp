#pragma once

#include <functional>
#include <random>
#include <span>
#include <vector>

#include "pixembed/tensor.hpp"

namespace pixembed {

using ScalarFunction = std::function<real(std::span<const real>)>;

/// Central differences of `f` at `point`, one coordinate at a time.
std::vector<real> numeric_gradient(const ScalarFunction& f, std::span<const real> point, real eps);

/// max_i |a_i - n_i| / max(|a_i|, |n_i|, 1e-8).
real max_relative_error(std::span<const real> analytic, std::span<const real> numeric);

/// Compares `analytic` against central differences of `f` at `point`.
real gradient_check(const ScalarFunction& f, std::span<const real> point,
                    std::span<const real> analytic, real eps);

/// Pushes entries with |x| < margin out to +-margin so a ReLU never sits on
/// its kink within a finite-difference step.
void nudge_from_kinks(std::span<real> values, real margin);

/// Separates each 2x2 pooling window's winner from the runner-up by at least
/// `margin` so finite differences never flip the argmax.
void nudge_pool_ties(Tensor& input, real margin);

}  // namespace pixembed
