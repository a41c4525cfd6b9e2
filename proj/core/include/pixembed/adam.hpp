#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pixembed/tensor.hpp"

namespace pixembed {

struct AdamHyper {
  real lr = 1e-4;
  real beta1 = 0.9;
  real beta2 = 0.999;
  real eps = 1e-8;
};

/// Throws DomainError unless lr > 0, 0 <= beta < 1, eps > 0.
void validate(const AdamHyper& hyper);

struct AdamState {
  std::vector<real> m;
  std::vector<real> v;
  std::uint64_t t = 0;
};

/// Bias-corrected Adam over a fixed set of tensors. Holds non-owning
/// pointers; the tensors must outlive the optimizer and stay in place.
class Adam {
 public:
  Adam(std::vector<Tensor*> params, AdamHyper hyper = {});

  /// One update from the current grad buffers. Does not zero them.
  void step();

  const AdamHyper& hyper() const { return hyper_; }
  const AdamState& state(std::size_t i) const { return states_.at(i); }
  std::size_t size() const { return params_.size(); }

 private:
  AdamHyper hyper_;
  std::vector<Tensor*> params_;
  std::vector<AdamState> states_;
};

inline Adam adam_init(std::vector<Tensor*> params, AdamHyper hyper = {}) {
  return Adam(std::move(params), hyper);
}

}  // namespace pixembed
