#pragma once

#include <cstddef>
#include <cstdint>
#include <new>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace pixembed {

using real = double;
using Shape = std::vector<std::size_t>;

/// Hands out 64-byte aligned storage. Vectorized reductions pick their
/// summation order from the start address, so a fixed alignment keeps
/// results bit-identical from one allocation to the next.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using RealBuffer = std::vector<real, AlignedAllocator<real>>;

/// Number of elements described by `shape`. Throws ShapeError for an empty
/// list or a zero extent.
std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace init {
struct Zeros {};
struct Constant {
  real value = 0;
};
struct Uniform {
  real lo = 0;
  real hi = 1;
  std::uint64_t seed = 0;
};
struct Normal {
  real mean = 0;
  real stddev = 1;
  std::uint64_t seed = 0;
};
}  // namespace init

using Init = std::variant<init::Zeros, init::Constant, init::Uniform, init::Normal>;

/// Dense row-major array with a gradient buffer of the same length.
///
/// Backward passes accumulate into `grad`; whoever owns a step is responsible
/// for calling zero_grad() between steps.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, const Init& how = init::Zeros{});
  Tensor(Shape shape, std::vector<real> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return values_.size(); }

  std::span<real> values() { return values_; }
  std::span<const real> values() const { return values_; }
  std::span<real> grad() { return grad_; }
  std::span<const real> grad() const { return grad_; }

  real& operator[](std::size_t i) { return values_[i]; }
  real operator[](std::size_t i) const { return values_[i]; }

  // (y, x, c) access for rank-3 activations.
  real& at(std::size_t y, std::size_t x, std::size_t c) {
    return values_[(y * shape_[1] + x) * shape_[2] + c];
  }
  real at(std::size_t y, std::size_t x, std::size_t c) const {
    return values_[(y * shape_[1] + x) * shape_[2] + c];
  }

  void zero_grad();
  void fill(real value);

  /// Same data, new extents; sizes must agree.
  void reshape(Shape shape);

  bool all_finite() const;

 private:
  Shape shape_;
  RealBuffer values_;
  RealBuffer grad_;
};

/// Same as `Tensor(shape, how)`; kept as the free-function entry point.
Tensor tensor_new(Shape shape, const Init& how = init::Zeros{});

}  // namespace pixembed
