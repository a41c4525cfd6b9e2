#include "pixembed/adam.hpp"

#include <cmath>
#include <string>

#include "pixembed/errors.hpp"

namespace pixembed {

void validate(const AdamHyper& h) {
  if (!(h.lr > 0)) throw DomainError("adam: lr must be > 0");
  if (!(h.beta1 >= 0 && h.beta1 < 1)) throw DomainError("adam: beta1 must lie in [0, 1)");
  if (!(h.beta2 >= 0 && h.beta2 < 1)) throw DomainError("adam: beta2 must lie in [0, 1)");
  if (!(h.eps > 0)) throw DomainError("adam: eps must be > 0");
}

Adam::Adam(std::vector<Tensor*> params, AdamHyper hyper)
    : hyper_(hyper), params_(std::move(params)) {
  validate(hyper_);
  states_.reserve(params_.size());
  for (const Tensor* p : params_) {
    states_.push_back({std::vector<real>(p->size(), 0), std::vector<real>(p->size(), 0), 0});
  }
}

void Adam::step() {
  const real b1 = hyper_.beta1, b2 = hyper_.beta2;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = *params_[k];
    AdamState& s = states_[k];
    ++s.t;
    const real c1 = 1 - std::pow(b1, static_cast<real>(s.t));
    const real c2 = 1 - std::pow(b2, static_cast<real>(s.t));
    auto w = p.values();
    const auto g = p.grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      s.m[i] = b1 * s.m[i] + (1 - b1) * g[i];
      s.v[i] = b2 * s.v[i] + (1 - b2) * g[i] * g[i];
      const real m_hat = s.m[i] / c1;
      const real v_hat = s.v[i] / c2;
      w[i] -= hyper_.lr * m_hat / (std::sqrt(v_hat) + hyper_.eps);
    }
  }
}

}  // namespace pixembed
