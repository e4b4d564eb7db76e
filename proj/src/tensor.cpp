#include "locaug/tensor.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "locaug/bytes.hpp"
#include "locaug/error.hpp"

namespace locaug {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::shape_mismatch: return "shape_mismatch";
    case ErrorKind::bad_format: return "bad_format";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

namespace {

void validate_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 4) {
    throw Error(ErrorKind::invalid_argument,
                "tensor rank must be 1..4, got " + std::to_string(shape.size()));
  }
  for (std::size_t e : shape) {
    if (e == 0) {
      throw Error(ErrorKind::invalid_argument, "tensor extents must be >= 1, got " + shape_string(shape));
    }
  }
}

void require_rank4(const Tensor& x, const char* op) {
  if (x.rank() != 4) {
    throw Error(ErrorKind::shape_mismatch,
                std::string(op) + ": expected NCHW tensor, got " + shape_string(x.shape()));
  }
}

}  // namespace

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  validate_shape(shape_);
  if (data_.size() != element_count(shape_)) {
    throw Error(ErrorKind::shape_mismatch,
                "data length " + std::to_string(data_.size()) + " does not match shape " +
                    shape_string(shape_));
  }
}

std::span<double> Tensor::plane(std::size_t n, std::size_t c) {
  const std::size_t hw = shape_[2] * shape_[3];
  return std::span<double>(data_).subspan(index(n, c, 0, 0), hw);
}

std::span<const double> Tensor::plane(std::size_t n, std::size_t c) const {
  const std::size_t hw = shape_[2] * shape_[3];
  return std::span<const double>(data_).subspan(index(n, c, 0, 0), hw);
}

Tensor Tensor::reshaped(Shape shape) const {
  if (element_count(shape) != data_.size()) {
    throw Error(ErrorKind::shape_mismatch,
                "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank4(a, "concat_channels");
  require_rank4(b, "concat_channels");
  static constexpr const char* axis_names[] = {"N", "C", "H", "W"};
  for (std::size_t axis : {0u, 2u, 3u}) {
    if (a.extent(axis) != b.extent(axis)) {
      throw Error(ErrorKind::shape_mismatch,
                  std::string("concat_channels: mismatch on axis ") + axis_names[axis] + " (" +
                      std::to_string(a.extent(axis)) + " vs " + std::to_string(b.extent(axis)) + ")");
    }
  }
  const std::size_t n = a.extent(0), c1 = a.extent(1), c2 = b.extent(1);
  const std::size_t plane = a.extent(2) * a.extent(3);
  Tensor out({n, c1 + c2, a.extent(2), a.extent(3)});
  auto dst = out.data().begin();
  for (std::size_t i = 0; i < n; ++i) {
    auto sa = a.data().subspan(i * c1 * plane, c1 * plane);
    auto sb = b.data().subspan(i * c2 * plane, c2 * plane);
    dst = std::copy(sa.begin(), sa.end(), dst);
    dst = std::copy(sb.begin(), sb.end(), dst);
  }
  return out;
}

Tensor slice_channels(const Tensor& x, std::size_t first, std::size_t count) {
  require_rank4(x, "slice_channels");
  if (count == 0 || first + count > x.extent(1)) {
    throw Error(ErrorKind::shape_mismatch, "slice_channels: range out of bounds for " +
                                               shape_string(x.shape()));
  }
  const std::size_t plane = x.extent(2) * x.extent(3);
  Tensor out({x.extent(0), count, x.extent(2), x.extent(3)});
  for (std::size_t n = 0; n < x.extent(0); ++n) {
    auto src = x.data().subspan(x.index(n, first, 0, 0), count * plane);
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(n * count * plane));
  }
  return out;
}

Tensor batch_item(const Tensor& x, std::size_t n) {
  require_rank4(x, "batch_item");
  const std::size_t item = x.size() / x.extent(0);
  std::vector<double> data(x.values().begin() + static_cast<std::ptrdiff_t>(n * item),
                           x.values().begin() + static_cast<std::ptrdiff_t>((n + 1) * item));
  return Tensor({1, x.extent(1), x.extent(2), x.extent(3)}, std::move(data));
}

Tensor stack_batch(std::span<const Tensor> items) {
  if (items.empty()) throw Error(ErrorKind::invalid_argument, "stack_batch: no items");
  Shape item_shape = items.front().shape();
  if (item_shape.size() == 4) {
    if (item_shape[0] != 1) {
      throw Error(ErrorKind::shape_mismatch, "stack_batch: items must have batch extent 1");
    }
    item_shape.erase(item_shape.begin());
  }
  if (item_shape.size() != 3) {
    throw Error(ErrorKind::shape_mismatch, "stack_batch: items must be [C,H,W] or [1,C,H,W]");
  }
  std::vector<double> data;
  data.reserve(items.size() * element_count(item_shape));
  for (const Tensor& t : items) {
    if (t.size() != element_count(item_shape)) {
      throw Error(ErrorKind::shape_mismatch, "stack_batch: item shape " + shape_string(t.shape()) +
                                                 " differs from " + shape_string(item_shape));
    }
    data.insert(data.end(), t.values().begin(), t.values().end());
  }
  return Tensor({items.size(), item_shape[0], item_shape[1], item_shape[2]}, std::move(data));
}

void append_tensor(std::vector<std::uint8_t>& out, const Tensor& t) {
  bytes::put_tag(out, "LAUG");
  bytes::put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t e : t.shape()) {
    if (e > std::numeric_limits<std::uint32_t>::max()) {
      throw Error(ErrorKind::bad_format, "extent does not fit in 32 bits");
    }
    bytes::put_u32(out, static_cast<std::uint32_t>(e));
  }
  for (double v : t.values()) bytes::put_f32(out, static_cast<float>(v));
}

std::vector<std::uint8_t> write_tensor(const Tensor& t) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + 4 * t.rank() + 4 * t.size());
  append_tensor(out, t);
  return out;
}

Tensor read_tensor_at(std::span<const std::uint8_t> data, std::size_t& offset) {
  bytes::Reader in(data, offset);
  if (in.tag(4, "magic") != "LAUG") {
    throw Error(ErrorKind::bad_format, "bad magic: expected LAUG");
  }
  const std::uint32_t rank = in.u32("rank");
  if (rank == 0 || rank > 4) {
    throw Error(ErrorKind::bad_format, "unsupported tensor rank " + std::to_string(rank));
  }
  Shape shape(rank);
  std::uint64_t count = 1;
  for (auto& e : shape) {
    e = in.u32("extent");
    if (e == 0) throw Error(ErrorKind::bad_format, "zero extent in tensor header");
    count *= e;
    if (count > (std::uint64_t{1} << 40)) {
      throw Error(ErrorKind::bad_format, "extent overflow: tensor too large");
    }
  }
  in.need(count * 4, "payload");
  std::vector<double> values(count);
  for (auto& v : values) v = in.f32("payload");
  offset = in.offset();
  return Tensor(std::move(shape), std::move(values));
}

Tensor read_tensor(std::span<const std::uint8_t> data) {
  std::size_t offset = 0;
  Tensor t = read_tensor_at(data, offset);
  if (offset != data.size()) {
    throw Error(ErrorKind::bad_format, "trailing bytes after tensor payload");
  }
  return t;
}

void save_tensor_file(const std::string& path, const Tensor& t) {
  bytes::write_file(path, write_tensor(t));
}

Tensor load_tensor_file(const std::string& path) { return read_tensor(bytes::read_file(path)); }

namespace bytes {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorKind::io, "write failed for " + path);
}

}  // namespace bytes

}  // namespace locaug
