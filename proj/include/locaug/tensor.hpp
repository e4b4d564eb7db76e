#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace locaug {

using Shape = std::vector<std::size_t>;

// Dense row-major array of doubles. Rank is at most 4; 4-D tensors follow
// the NCHW convention. No strides, no views.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // NCHW accessors, valid for rank-4 tensors only.
  std::size_t index(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return ((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
  }
  double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[index(n, c, h, w)];
  }
  double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[index(n, c, h, w)];
  }

  // Plane (n, c) of a rank-4 tensor as a contiguous H*W span.
  std::span<double> plane(std::size_t n, std::size_t c);
  std::span<const double> plane(std::size_t n, std::size_t c) const;

  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

// Concatenate along the channel axis: a's channels precede b's.
Tensor concat_channels(const Tensor& a, const Tensor& b);

// Channels [first, first + count) of a rank-4 tensor.
Tensor slice_channels(const Tensor& x, std::size_t first, std::size_t count);

// Batch item n of a rank-4 tensor, keeping a batch axis of 1.
Tensor batch_item(const Tensor& x, std::size_t n);

// Stack equally shaped tensors along a new (or existing size-1) batch axis.
Tensor stack_batch(std::span<const Tensor> items);

// LAUG wire format: "LAUG", u32 rank, u32 extents, f32 payload, all
// little-endian. Export rounds values to 32-bit floats.
std::vector<std::uint8_t> write_tensor(const Tensor& t);
Tensor read_tensor(std::span<const std::uint8_t> bytes);

// Streaming form used by container formats; advances `offset`.
void append_tensor(std::vector<std::uint8_t>& out, const Tensor& t);
Tensor read_tensor_at(std::span<const std::uint8_t> bytes, std::size_t& offset);

void save_tensor_file(const std::string& path, const Tensor& t);
Tensor load_tensor_file(const std::string& path);

}  // namespace locaug
