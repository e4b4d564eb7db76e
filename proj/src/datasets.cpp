#include "locaug/datasets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "locaug/error.hpp"
#include "locaug/image_io.hpp"
#include "locaug/model.hpp"

namespace locaug {

namespace fs = std::filesystem;

namespace {

std::string sample_id(const char* prefix, std::size_t i) {
  std::ostringstream os;
  os << prefix << std::setw(5) << std::setfill('0') << i;
  return os.str();
}

void validate(const CircleTaskConfig& cfg) {
  if (cfg.height == 0 || cfg.width == 0) throw Error(ErrorKind::invalid_argument, "circle task: zero image extent");
  if (cfg.center_row >= cfg.height || cfg.center_col >= cfg.width) {
    throw Error(ErrorKind::invalid_argument, "circle task: centre outside the image");
  }
  const std::size_t room = std::min({cfg.center_row, cfg.height - 1 - cfg.center_row, cfg.center_col,
                                     cfg.width - 1 - cfg.center_col});
  if (cfg.radius > room) {
    throw Error(ErrorKind::invalid_argument, "circle task: circle of radius " + std::to_string(cfg.radius) +
                                                 " does not fit inside the image (max " +
                                                 std::to_string(room) + ")");
  }
}

std::array<double, 3> random_color(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::array<double, 3> c{};
  for (double& v : c) v = u(rng);
  return c;
}

}  // namespace

Tensor circle_mask(const CircleTaskConfig& cfg) {
  validate(cfg);
  Tensor mask({1, 1, cfg.height, cfg.width});
  const auto r2 = static_cast<long long>(cfg.radius * cfg.radius);
  for (std::size_t h = 0; h < cfg.height; ++h) {
    for (std::size_t w = 0; w < cfg.width; ++w) {
      const long long dh = static_cast<long long>(h) - static_cast<long long>(cfg.center_row);
      const long long dw = static_cast<long long>(w) - static_cast<long long>(cfg.center_col);
      mask.at(0, 0, h, w) = dh * dh + dw * dw <= r2 ? 1.0 : 0.0;
    }
  }
  return mask;
}

Dataset gen_circle_dataset(const CircleTaskConfig& cfg) {
  const Tensor mask = circle_mask(cfg);
  const std::size_t plane = cfg.height * cfg.width;
  Dataset out;
  out.reserve(cfg.count);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    std::mt19937_64 rng(mix_seed(cfg.seed, i));
    Tensor image({1, 3, cfg.height, cfg.width});
    if (cfg.color_mode == ColorMode::uniform_random) {
      const auto color = random_color(rng);
      for (std::size_t c = 0; c < 3; ++c) {
        std::fill_n(image.data().begin() + static_cast<std::ptrdiff_t>(c * plane), plane, color[c]);
      }
    } else {
      for (double& v : image.values()) v = u(rng);
    }
    out.push_back({std::move(image), mask, sample_id("circle", i)});
  }
  return out;
}

std::size_t nearest_to_center(const std::vector<SquarePlacement>& squares, std::size_t size,
                              std::size_t height, std::size_t width) {
  if (squares.empty()) throw Error(ErrorKind::invalid_argument, "nearest_to_center: no squares");
  // Doubled coordinates keep every centre on the integer grid.
  const long long ch = static_cast<long long>(height) - 1;
  const long long cw = static_cast<long long>(width) - 1;
  std::size_t best = 0;
  long long best_d = -1;
  for (std::size_t i = 0; i < squares.size(); ++i) {
    const long long sh = 2 * static_cast<long long>(squares[i].row) + static_cast<long long>(size) - 1;
    const long long sw = 2 * static_cast<long long>(squares[i].col) + static_cast<long long>(size) - 1;
    const long long d = (sh - ch) * (sh - ch) + (sw - cw) * (sw - cw);
    if (best_d < 0 || d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

Sample render_squares(const std::vector<SquarePlacement>& squares, std::size_t size, std::size_t height,
                      std::size_t width, const double (&background)[3], const double (&foreground)[3]) {
  Tensor image({1, 3, height, width});
  Tensor mask({1, 1, height, width});
  for (std::size_t c = 0; c < 3; ++c) {
    for (double& v : image.plane(0, c)) v = background[c];
  }
  const std::size_t target = nearest_to_center(squares, size, height, width);
  for (std::size_t i = 0; i < squares.size(); ++i) {
    const auto& sq = squares[i];
    if (sq.row + size > height || sq.col + size > width) {
      throw Error(ErrorKind::invalid_argument, "render_squares: square outside the image");
    }
    for (std::size_t h = sq.row; h < sq.row + size; ++h) {
      for (std::size_t w = sq.col; w < sq.col + size; ++w) {
        for (std::size_t c = 0; c < 3; ++c) image.at(0, c, h, w) = foreground[c];
        if (i == target) mask.at(0, 0, h, w) = 1.0;
      }
    }
  }
  return {std::move(image), std::move(mask), ""};
}

Dataset gen_location_bias_dataset(const LocationBiasConfig& cfg) {
  if (cfg.squares == 0 || cfg.square == 0 || cfg.square > cfg.height || cfg.square > cfg.width ||
      !(cfg.center_radius >= 0.0)) {
    throw Error(ErrorKind::invalid_argument, "location-bias task: bad square configuration");
  }
  Dataset out;
  out.reserve(cfg.count);
  const long long s = static_cast<long long>(cfg.square);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    std::mt19937_64 rng(mix_seed(cfg.seed, i));
    std::uniform_int_distribution<std::size_t> row(0, cfg.height - cfg.square);
    std::uniform_int_distribution<std::size_t> col(0, cfg.width - cfg.square);
    std::vector<SquarePlacement> squares;
    for (std::size_t attempt = 0; squares.size() < cfg.squares; ++attempt) {
      if (attempt > 100000) {
        throw Error(ErrorKind::invalid_argument, "location-bias task: squares do not fit in the image");
      }
      const SquarePlacement cand{row(rng), col(rng)};
      if (squares.empty() && cfg.center_radius > 0.0) {
        const double dr = static_cast<double>(2 * cand.row + cfg.square) - static_cast<double>(cfg.height);
        const double dc = static_cast<double>(2 * cand.col + cfg.square) - static_cast<double>(cfg.width);
        if (dr * dr + dc * dc > 4.0 * cfg.center_radius * cfg.center_radius) continue;
      }
      // Keep a one-pixel gap so squares never touch.
      const bool clear = std::all_of(squares.begin(), squares.end(), [&](const SquarePlacement& o) {
        const long long dr = std::llabs(static_cast<long long>(cand.row) - static_cast<long long>(o.row));
        const long long dc = std::llabs(static_cast<long long>(cand.col) - static_cast<long long>(o.col));
        return dr > s || dc > s;
      });
      if (!clear) continue;
      squares.push_back(cand);
      if (squares.size() == cfg.squares) {
        // Resample placements whose nearest square is not unique.
        const std::size_t best = nearest_to_center(squares, cfg.square, cfg.height, cfg.width);
        std::vector<SquarePlacement> others;
        for (std::size_t k = 0; k < squares.size(); ++k) {
          if (k == best) continue;
          const std::vector<SquarePlacement> pair{squares[k], squares[best]};
          if (nearest_to_center(pair, cfg.square, cfg.height, cfg.width) == 0) {
            squares.clear();
            break;
          }
        }
      }
    }
    double bg[3], fg[3];
    std::copy(std::begin(kBiasBackground), std::end(kBiasBackground), bg);
    std::copy(std::begin(kBiasForeground), std::end(kBiasForeground), fg);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    while (cfg.random_colors) {
      for (int c = 0; c < 3; ++c) {
        bg[c] = u(rng);
        fg[c] = u(rng);
      }
      if (std::max({std::abs(bg[0] - fg[0]), std::abs(bg[1] - fg[1]), std::abs(bg[2] - fg[2])}) >= 0.3) break;
    }
    Sample sample = render_squares(squares, cfg.square, cfg.height, cfg.width, bg, fg);
    sample.id = sample_id("bias", i);
    out.push_back(std::move(sample));
  }
  return out;
}

Dataset load_dataset(const std::string& root, const std::string& list_file, const Task& task) {
  const fs::path base(root);
  fs::path list = fs::path(list_file).is_absolute() ? fs::path(list_file) : base / list_file;
  std::ifstream in(list);
  if (!in) throw Error(ErrorKind::io, "cannot open list file " + list.string());
  Dataset out;
  std::string line;
  while (std::getline(in, line)) {
    line.erase(std::find_if(line.rbegin(), line.rend(), [](unsigned char ch) { return !std::isspace(ch); }).base(),
               line.end());
    if (line.empty() || line[0] == '#') continue;
    Sample s;
    s.id = line;
    s.image = load_image((base / "images" / (line + ".ppm")).string());
    s.mask = load_mask((base / "masks" / (line + ".pgm")).string(), task);
    if (s.image.extent(2) != s.mask.extent(2) || s.image.extent(3) != s.mask.extent(3)) {
      throw Error(ErrorKind::shape_mismatch, "image and mask sizes differ for '" + line + "'");
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw Error(ErrorKind::invalid_argument, "dataset list " + list.string() + " is empty");
  return out;
}

void write_dataset(const std::string& root, const Dataset& samples, const std::string& list_file,
                   const Task& task) {
  const fs::path base(root);
  fs::create_directories(base / "images");
  fs::create_directories(base / "masks");
  std::ofstream list(base / list_file, std::ios::trunc);
  if (!list) throw Error(ErrorKind::io, "cannot write list file in " + root);
  for (const Sample& s : samples) {
    save_image((base / "images" / (s.id + ".ppm")).string(), s.image);
    save_mask((base / "masks" / (s.id + ".pgm")).string(), s.mask, task);
    list << s.id << '\n';
  }
}

}  // namespace locaug
