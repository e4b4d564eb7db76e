#include "locaug/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "locaug/bytes.hpp"
#include "locaug/error.hpp"

namespace locaug {

namespace {

struct PnmHeader {
  std::size_t width = 0, height = 0, maxval = 0;
  std::size_t data_offset = 0;
};

PnmHeader parse_header(std::span<const std::uint8_t> data, std::string_view magic) {
  if (data.size() < 2 || data[0] != magic[0] || data[1] != magic[1]) {
    throw Error(ErrorKind::bad_format,
                "unsupported image format: expected binary " + std::string(magic));
  }
  std::size_t pos = 2;
  auto read_number = [&](const char* field) {
    // Whitespace and '#' comments may separate header fields.
    while (pos < data.size()) {
      if (std::isspace(data[pos])) {
        ++pos;
      } else if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    if (pos >= data.size() || !std::isdigit(data[pos])) {
      throw Error(ErrorKind::bad_format, std::string("malformed PNM header: missing ") + field);
    }
    std::size_t v = 0;
    while (pos < data.size() && std::isdigit(data[pos])) {
      v = v * 10 + (data[pos] - '0');
      if (v > (1u << 24)) throw Error(ErrorKind::bad_format, std::string("PNM ") + field + " too large");
      ++pos;
    }
    return v;
  };
  PnmHeader h;
  h.width = read_number("width");
  h.height = read_number("height");
  h.maxval = read_number("maxval");
  if (h.width == 0 || h.height == 0) throw Error(ErrorKind::bad_format, "PNM image has zero extent");
  if (h.maxval == 0 || h.maxval > 255) {
    throw Error(ErrorKind::bad_format, "only 8-bit PNM files are supported (maxval " +
                                           std::to_string(h.maxval) + ")");
  }
  if (pos >= data.size() || !std::isspace(data[pos])) {
    throw Error(ErrorKind::bad_format, "malformed PNM header: no separator before raster");
  }
  h.data_offset = pos + 1;
  return h;
}

void require_single(const Tensor& t, std::size_t channels, const char* what) {
  if (t.rank() != 4 || t.extent(0) != 1 || t.extent(1) != channels) {
    throw Error(ErrorKind::shape_mismatch, std::string(what) + ": expected [1," +
                                               std::to_string(channels) + ",H,W], got " +
                                               shape_string(t.shape()));
  }
}

std::vector<std::uint8_t> header(std::string_view magic, std::size_t w, std::size_t h) {
  std::vector<std::uint8_t> out;
  bytes::put_tag(out, std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n");
  return out;
}

}  // namespace

Tensor decode_ppm(std::span<const std::uint8_t> data) {
  const PnmHeader h = parse_header(data, "P6");
  const std::size_t plane = h.width * h.height;
  if (data.size() - h.data_offset < 3 * plane) throw Error(ErrorKind::bad_format, "truncated PPM raster");
  Tensor img({1, 3, h.height, h.width});
  const double maxval = static_cast<double>(h.maxval);
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < 3; ++c) {
      img[c * plane + p] = std::min(1.0, data[h.data_offset + 3 * p + c] / maxval);
    }
  }
  return img;
}

Tensor decode_pgm(std::span<const std::uint8_t> data, const Task& task) {
  const PnmHeader h = parse_header(data, "P5");
  const std::size_t plane = h.width * h.height;
  if (data.size() - h.data_offset < plane) throw Error(ErrorKind::bad_format, "truncated PGM raster");
  Tensor mask({1, 1, h.height, h.width});
  for (std::size_t p = 0; p < plane; ++p) {
    const std::uint8_t v = data[h.data_offset + p];
    if (task.kind == Task::Kind::saliency) {
      mask[p] = v >= 128 ? 1.0 : 0.0;
    } else {
      if (v != kIgnoreLabel && v >= task.classes) {
        throw Error(ErrorKind::bad_format, "mask label " + std::to_string(v) + " outside 0.." +
                                               std::to_string(task.classes - 1));
      }
      mask[p] = v;
    }
  }
  return mask;
}

Tensor load_image(const std::string& path) { return decode_ppm(bytes::read_file(path)); }

Tensor load_mask(const std::string& path, const Task& task) {
  return decode_pgm(bytes::read_file(path), task);
}

std::vector<std::uint8_t> encode_ppm(const Tensor& image) {
  require_single(image, 3, "encode_ppm");
  const std::size_t h = image.extent(2), w = image.extent(3), plane = h * w;
  auto out = header("P6", w, h);
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double v = std::clamp(image[c * plane + p], 0.0, 1.0);
      out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_pgm(const Tensor& mask, const Task& task) {
  require_single(mask, 1, "encode_pgm");
  auto out = header("P5", mask.extent(3), mask.extent(2));
  for (double v : mask.values()) {
    if (task.kind == Task::Kind::saliency) {
      out.push_back(v >= 0.5 ? 255 : 0);
    } else {
      out.push_back(static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0)));
    }
  }
  return out;
}

void save_image(const std::string& path, const Tensor& image) { bytes::write_file(path, encode_ppm(image)); }

void save_mask(const std::string& path, const Tensor& mask, const Task& task) {
  bytes::write_file(path, encode_pgm(mask, task));
}

Tensor resize_nearest(const Tensor& x, std::size_t height, std::size_t width) {
  if (x.rank() != 4) throw Error(ErrorKind::shape_mismatch, "resize_nearest: expected NCHW");
  if (height == 0 || width == 0) throw Error(ErrorKind::invalid_argument, "resize_nearest: zero target extent");
  const std::size_t ih = x.extent(2), iw = x.extent(3);
  Tensor out({x.extent(0), x.extent(1), height, width});
  for (std::size_t n = 0; n < x.extent(0); ++n) {
    for (std::size_t c = 0; c < x.extent(1); ++c) {
      const auto src = x.plane(n, c);
      auto dst = out.plane(n, c);
      for (std::size_t i = 0; i < height; ++i) {
        const std::size_t si = i * ih / height;
        for (std::size_t j = 0; j < width; ++j) dst[i * width + j] = src[si * iw + j * iw / width];
      }
    }
  }
  return out;
}

}  // namespace locaug
