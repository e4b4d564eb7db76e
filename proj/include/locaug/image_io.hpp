#pragma once

#include <string>

#include "locaug/metrics.hpp"
#include "locaug/tensor.hpp"

namespace locaug {

// Binary PPM (P6) / PGM (P5) with maxval <= 255.
// Images load as [1,3,H,W] in [0,1]; masks as [1,1,H,W].
Tensor load_image(const std::string& path);
Tensor decode_ppm(std::span<const std::uint8_t> bytes);

// Saliency masks are binarised at byte value 128; class masks keep their
// byte values (255 = ignore).
Tensor load_mask(const std::string& path, const Task& task);
Tensor decode_pgm(std::span<const std::uint8_t> bytes, const Task& task);

std::vector<std::uint8_t> encode_ppm(const Tensor& image);
// Saliency masks are written as 0/255, class maps as raw labels.
std::vector<std::uint8_t> encode_pgm(const Tensor& mask, const Task& task);

void save_image(const std::string& path, const Tensor& image);
void save_mask(const std::string& path, const Tensor& mask, const Task& task);

// Nearest-neighbour resize of an NCHW tensor: source index floor(i*H/H').
Tensor resize_nearest(const Tensor& x, std::size_t height, std::size_t width);

}  // namespace locaug
