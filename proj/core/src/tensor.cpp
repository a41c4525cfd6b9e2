#include "pixembed/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "pixembed/errors.hpp"

namespace pixembed {

std::size_t shape_size(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one extent");
  std::size_t n = 1;
  for (std::size_t e : shape) {
    if (e == 0) throw ShapeError("zero extent in shape " + shape_to_string(shape));
    n *= e;
  }
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  if (shape.size() == 1) os << ',';
  os << ')';
  return os.str();
}

namespace {

struct Filler {
  RealBuffer& out;

  void operator()(const init::Zeros&) const { std::fill(out.begin(), out.end(), real{0}); }
  void operator()(const init::Constant& c) const { std::fill(out.begin(), out.end(), c.value); }
  void operator()(const init::Uniform& u) const {
    std::mt19937_64 rng(u.seed);
    std::uniform_real_distribution<real> dist(u.lo, u.hi);
    for (auto& v : out) v = dist(rng);
  }
  void operator()(const init::Normal& n) const {
    std::mt19937_64 rng(n.seed);
    std::normal_distribution<real> dist(n.mean, n.stddev);
    for (auto& v : out) v = dist(rng);
  }
};

}  // namespace

Tensor::Tensor(Shape shape, const Init& how)
    : shape_(std::move(shape)), values_(shape_size(shape_)), grad_(values_.size(), 0) {
  std::visit(Filler{values_}, how);
}

Tensor::Tensor(Shape shape, std::vector<real> values)
    : shape_(std::move(shape)), values_(values.begin(), values.end()) {
  if (shape_size(shape_) != values_.size()) {
    throw ShapeError("value count " + std::to_string(values_.size()) + " does not match shape " +
                     shape_to_string(shape_));
  }
  grad_.assign(values_.size(), 0);
}

void Tensor::zero_grad() { std::fill(grad_.begin(), grad_.end(), real{0}); }

void Tensor::fill(real value) { std::fill(values_.begin(), values_.end(), value); }

void Tensor::reshape(Shape shape) {
  if (shape_size(shape) != values_.size()) {
    throw ShapeError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  }
  shape_ = std::move(shape);
}

bool Tensor::all_finite() const {
  auto finite = [](real v) { return std::isfinite(v); };
  return std::all_of(values_.begin(), values_.end(), finite) &&
         std::all_of(grad_.begin(), grad_.end(), finite);
}

Tensor tensor_new(Shape shape, const Init& how) { return Tensor(std::move(shape), how); }

}  // namespace pixembed
