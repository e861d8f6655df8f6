#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace murmur::nn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

// Storage starts on a 64-byte boundary. Vectorized kernels split work at the
// first aligned element, so a fixed base alignment keeps results independent
// of where the heap placed a buffer.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using AlignedVector = std::vector<double, AlignedAllocator<double>>;

// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  const Shape& shape() const { return shape_; }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  std::vector<double> to_vector() const { return {data_.begin(), data_.end()}; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Same data, new extents with equal element count.
  Tensor reshaped(Shape shape) const;
  void fill(double v);
  bool all_finite() const;

  bool operator==(const Tensor&) const = default;

 private:
  struct Adopt {};
  Tensor(Shape shape, AlignedVector data, Adopt);

  Shape shape_;
  AlignedVector data_;
};

}  // namespace murmur::nn
