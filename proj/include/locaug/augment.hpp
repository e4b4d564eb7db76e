#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "locaug/tensor.hpp"

namespace locaug {

enum class Variant { rgb, rgb_coord, rgb_dist, rgb_dist_coord, rgb_lin };

// unit_interval: channels in [0,1]; symmetric: channels in [-1,1].
enum class Normalization { unit_interval, symmetric };

struct AugmentSpec {
  Variant variant = Variant::rgb;
  Normalization norm = Normalization::unit_interval;

  std::size_t extra_channels() const;
  std::size_t input_channels() const { return 3 + extra_channels(); }
  bool has_coord() const { return variant == Variant::rgb_coord || variant == Variant::rgb_dist_coord; }
  bool has_dist() const { return variant == Variant::rgb_dist || variant == Variant::rgb_dist_coord; }
  bool has_lin() const { return variant == Variant::rgb_lin; }

  friend bool operator==(const AugmentSpec&, const AugmentSpec&) = default;
};

// Names used on the command line and in model files: "rgb", "rgb+coord", ...
std::string_view to_string(Variant v);
std::string_view to_string(Normalization n);
Variant parse_variant(std::string_view name);
Normalization parse_normalization(std::string_view name);

// Variants in the row order used by benchmark tables.
inline constexpr std::array<Variant, 4> benchmark_variants{
    Variant::rgb, Variant::rgb_dist, Variant::rgb_coord, Variant::rgb_dist_coord};

// [1,2,H,W]: channel 0 is the row index, channel 1 the column index.
Tensor make_coord_channels(std::size_t height, std::size_t width, Normalization norm);

// [1,1,H,W]: Euclidean distance to the real-valued image centre, divided by
// its maximum.
Tensor make_distance_channel(std::size_t height, std::size_t width, Normalization norm);

// [1,1,H,W]: (h*W + w) / (H*W - 1).
Tensor make_linear_index_channel(std::size_t height, std::size_t width, Normalization norm);

// Location channels alone, [1,k,H,W], in the fixed order
// coord rows, coord cols, dist, lin. Throws for the plain rgb variant.
Tensor location_channels(std::size_t height, std::size_t width, const AugmentSpec& spec);

// Append location channels to an [N,3,H,W] image batch.
Tensor augment_image(const Tensor& image, const AugmentSpec& spec);

}  // namespace locaug
