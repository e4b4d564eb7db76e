#include "locaug/augment.hpp"

#include <algorithm>
#include <cmath>

#include "locaug/error.hpp"

namespace locaug {

namespace {

void require_extent(std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) {
    throw Error(ErrorKind::invalid_argument, "location channels need H >= 1 and W >= 1");
  }
}

// [0,1] value mapped into the requested range.
double to_range(double unit, Normalization norm) {
  return norm == Normalization::symmetric ? 2.0 * unit - 1.0 : unit;
}

double unit_position(std::size_t i, std::size_t extent) {
  if (extent == 1) return 0.5;
  return static_cast<double>(i) / static_cast<double>(extent - 1);
}

}  // namespace

std::size_t AugmentSpec::extra_channels() const {
  switch (variant) {
    case Variant::rgb: return 0;
    case Variant::rgb_dist:
    case Variant::rgb_lin: return 1;
    case Variant::rgb_coord: return 2;
    case Variant::rgb_dist_coord: return 3;
  }
  return 0;
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::rgb: return "rgb";
    case Variant::rgb_coord: return "rgb+coord";
    case Variant::rgb_dist: return "rgb+dist";
    case Variant::rgb_dist_coord: return "rgb+dist+coord";
    case Variant::rgb_lin: return "rgb+lin";
  }
  return "?";
}

std::string_view to_string(Normalization n) {
  return n == Normalization::symmetric ? "symmetric" : "unit";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::rgb, Variant::rgb_coord, Variant::rgb_dist, Variant::rgb_dist_coord,
                    Variant::rgb_lin}) {
    if (name == to_string(v)) return v;
  }
  throw Error(ErrorKind::invalid_argument, "unknown variant '" + std::string(name) + "'");
}

Normalization parse_normalization(std::string_view name) {
  if (name == "unit" || name == "unit_interval") return Normalization::unit_interval;
  if (name == "symmetric") return Normalization::symmetric;
  throw Error(ErrorKind::invalid_argument, "unknown normalization '" + std::string(name) + "'");
}

Tensor make_coord_channels(std::size_t height, std::size_t width, Normalization norm) {
  require_extent(height, width);
  Tensor out({1, 2, height, width});
  for (std::size_t h = 0; h < height; ++h) {
    const double row = to_range(unit_position(h, height), norm);
    for (std::size_t w = 0; w < width; ++w) {
      out.at(0, 0, h, w) = row;
      out.at(0, 1, h, w) = to_range(unit_position(w, width), norm);
    }
  }
  return out;
}

Tensor make_distance_channel(std::size_t height, std::size_t width, Normalization norm) {
  require_extent(height, width);
  const double ch = (static_cast<double>(height) - 1.0) / 2.0;
  const double cw = (static_cast<double>(width) - 1.0) / 2.0;
  Tensor out({1, 1, height, width});
  double peak = 0.0;
  for (std::size_t h = 0; h < height; ++h) {
    for (std::size_t w = 0; w < width; ++w) {
      const double d = std::hypot(static_cast<double>(h) - ch, static_cast<double>(w) - cw);
      out.at(0, 0, h, w) = d;
      peak = std::max(peak, d);
    }
  }
  for (double& v : out.values()) v = to_range(peak > 0.0 ? v / peak : 0.0, norm);
  return out;
}

Tensor make_linear_index_channel(std::size_t height, std::size_t width, Normalization norm) {
  require_extent(height, width);
  const std::size_t count = height * width;
  Tensor out({1, 1, height, width});
  for (std::size_t i = 0; i < count; ++i) {
    const double unit = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
    out[i] = to_range(unit, norm);
  }
  return out;
}

Tensor location_channels(std::size_t height, std::size_t width, const AugmentSpec& spec) {
  if (spec.extra_channels() == 0) {
    throw Error(ErrorKind::invalid_argument, "variant rgb has no location channels");
  }
  Tensor out;
  auto append = [&](Tensor t) { out = out.empty() ? std::move(t) : concat_channels(out, t); };
  if (spec.has_coord()) append(make_coord_channels(height, width, spec.norm));
  if (spec.has_dist()) append(make_distance_channel(height, width, spec.norm));
  if (spec.has_lin()) append(make_linear_index_channel(height, width, spec.norm));
  return out;
}

Tensor augment_image(const Tensor& image, const AugmentSpec& spec) {
  if (image.rank() != 4 || image.extent(1) != 3) {
    throw Error(ErrorKind::shape_mismatch,
                "augment_image expects [N,3,H,W], got " + shape_string(image.shape()));
  }
  if (spec.extra_channels() == 0) return image;
  const Tensor loc = location_channels(image.extent(2), image.extent(3), spec);
  const std::size_t batch = image.extent(0);
  std::vector<Tensor> replicated(batch, loc);
  return concat_channels(image, stack_batch(replicated));
}

}  // namespace locaug
