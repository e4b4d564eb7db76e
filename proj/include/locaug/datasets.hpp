#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "locaug/metrics.hpp"
#include "locaug/tensor.hpp"

namespace locaug {

// image [1,3,H,W] in [0,1]; mask [1,1,H,W] (0/1 or class labels).
struct Sample {
  Tensor image;
  Tensor mask;
  std::string id;
};

using Dataset = std::vector<Sample>;

enum class ColorMode { uniform_random, per_pixel_noise };

// A fixed circle, same radius and place in every image, over images whose
// colours carry no information about it.
struct CircleTaskConfig {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t radius = 14;
  std::size_t center_row = 32;
  std::size_t center_col = 32;
  ColorMode color_mode = ColorMode::uniform_random;
  std::size_t count = 200;
  std::uint64_t seed = 0;
};

// mask(h,w) = 1 iff (h-cr)^2 + (w-cc)^2 <= r^2. Throws when the circle
// does not fit inside the image.
Dataset gen_circle_dataset(const CircleTaskConfig& cfg);
Tensor circle_mask(const CircleTaskConfig& cfg);

// Several identical squares per image; the ground truth is the one whose
// centre lies nearest to the image centre.
struct LocationBiasConfig {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t square = 6;
  std::size_t squares = 3;
  std::size_t count = 200;
  std::uint64_t seed = 0;
  // When positive, the first square's centre is drawn within this many
  // pixels of the image centre and the rest anywhere, so the labelled
  // square sits near the centre far more often than chance. 0 places every
  // square uniformly.
  double center_radius = 8.0;
  // false: every image uses kBiasBackground / kBiasForeground. true: a fresh
  // background/foreground pair per image, which also makes the squares
  // themselves harder to find.
  bool random_colors = false;
};

inline constexpr double kBiasBackground[3] = {0.2, 0.35, 0.5};
inline constexpr double kBiasForeground[3] = {0.9, 0.6, 0.2};

struct SquarePlacement {
  std::size_t row = 0;  // top-left corner
  std::size_t col = 0;
};

// Index of the square nearest the image centre (first one on ties).
std::size_t nearest_to_center(const std::vector<SquarePlacement>& squares, std::size_t size,
                              std::size_t height, std::size_t width);

Sample render_squares(const std::vector<SquarePlacement>& squares, std::size_t size, std::size_t height,
                      std::size_t width, const double (&background)[3], const double (&foreground)[3]);

Dataset gen_location_bias_dataset(const LocationBiasConfig& cfg);

// Directory layout: images/<id>.ppm, masks/<id>.pgm, and list files with
// one id per line.
Dataset load_dataset(const std::string& root, const std::string& list_file, const Task& task);
void write_dataset(const std::string& root, const Dataset& samples, const std::string& list_file,
                   const Task& task);

}  // namespace locaug
