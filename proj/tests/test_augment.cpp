#include <doctest.h>

#include <cmath>

#include "locaug/augment.hpp"
#include "locaug/error.hpp"

using namespace locaug;

namespace {

constexpr auto U = Normalization::unit_interval;
constexpr auto S = Normalization::symmetric;

Tensor rot180(const Tensor& x) {
  Tensor out = x;
  const std::size_t H = x.extent(2), W = x.extent(3);
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t w = 0; w < W; ++w) out.at(0, 0, h, w) = x.at(0, 0, H - 1 - h, W - 1 - w);
  return out;
}

}  // namespace

TEST_CASE("coordinate channels") {
  const Tensor c = make_coord_channels(3, 3, U);
  CHECK(c.shape() == Shape{1, 2, 3, 3});
  for (std::size_t w = 0; w < 3; ++w) {
    CHECK(c.at(0, 0, 0, w) == 0.0);
    CHECK(c.at(0, 0, 1, w) == 0.5);
    CHECK(c.at(0, 0, 2, w) == 1.0);
    CHECK(c.at(0, 1, w, 0) == 0.0);
    CHECK(c.at(0, 1, w, 2) == 1.0);
  }
  const Tensor flat = make_coord_channels(1, 4, U);
  for (std::size_t w = 0; w < 4; ++w) CHECK(flat.at(0, 0, 0, w) == 0.5);
  const Tensor s = make_coord_channels(3, 3, S);
  for (std::size_t w = 0; w < 3; ++w) {
    CHECK(s.at(0, 0, 0, w) == -1.0);
    CHECK(s.at(0, 0, 1, w) == 0.0);
    CHECK(s.at(0, 0, 2, w) == 1.0);
  }
  CHECK_THROWS_AS(make_coord_channels(0, 3, U), Error);
}

TEST_CASE("distance channel") {
  const Tensor d = make_distance_channel(3, 3, U);
  CHECK(d.at(0, 0, 1, 1) == 0.0);
  CHECK(d.at(0, 0, 0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(d.at(0, 0, 0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(make_distance_channel(1, 1, U)[0] == 0.0);
  const Tensor d5 = make_distance_channel(5, 5, U);
  CHECK(rot180(d5) == d5);
  const Tensor ds = make_distance_channel(3, 3, S);
  CHECK(ds.at(0, 0, 1, 1) == -1.0);
  CHECK(ds.at(0, 0, 2, 2) == doctest::Approx(1.0));
}

TEST_CASE("linear index channel") {
  const Tensor l = make_linear_index_channel(2, 2, U);
  CHECK(l[0] == 0.0);
  CHECK(l[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(l[2] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(l[3] == 1.0);
  CHECK(make_linear_index_channel(1, 1, U)[0] == 0.0);
  CHECK(make_linear_index_channel(2, 3, U).at(0, 0, 1, 0) == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("augment_image examples") {
  Tensor img({1, 3, 32, 32}, 0.25);
  CHECK(augment_image(img, {Variant::rgb, U}) == img);
  const Tensor six = augment_image(img, {Variant::rgb_dist_coord, U});
  CHECK(six.extent(1) == 6);
  // centre of an even grid is between pixels; min over the 2x2 centre block is the same value
  const Tensor odd = augment_image(Tensor({1, 3, 33, 33}), {Variant::rgb_dist_coord, U});
  CHECK(odd.at(0, 5, 16, 16) == 0.0);

  Tensor batch({2, 3, 8, 8});
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = std::sin(static_cast<double>(i));
  const Tensor aug = augment_image(batch, {Variant::rgb_coord, U});
  for (std::size_t c = 3; c < 5; ++c)
    for (std::size_t h = 0; h < 8; ++h)
      for (std::size_t w = 0; w < 8; ++w) CHECK(aug.at(0, c, h, w) == aug.at(1, c, h, w));
  CHECK_THROWS_AS(augment_image(Tensor({1, 4, 8, 8}), {Variant::rgb_coord, U}), Error);
}

TEST_CASE("location channel order and counts") {
  CHECK(AugmentSpec{Variant::rgb, U}.input_channels() == 3);
  CHECK(AugmentSpec{Variant::rgb_coord, U}.input_channels() == 5);
  CHECK(AugmentSpec{Variant::rgb_dist, U}.input_channels() == 4);
  CHECK(AugmentSpec{Variant::rgb_dist_coord, U}.input_channels() == 6);
  CHECK(AugmentSpec{Variant::rgb_lin, U}.input_channels() == 4);
  const Tensor loc = location_channels(4, 6, {Variant::rgb_dist_coord, U});
  CHECK(slice_channels(loc, 0, 2) == make_coord_channels(4, 6, U));
  CHECK(slice_channels(loc, 2, 1) == make_distance_channel(4, 6, U));
  CHECK_THROWS_AS(location_channels(4, 6, {Variant::rgb, U}), Error);
  for (auto v : {Variant::rgb, Variant::rgb_coord, Variant::rgb_dist, Variant::rgb_dist_coord, Variant::rgb_lin})
    CHECK(parse_variant(to_string(v)) == v);
  CHECK(parse_normalization("unit") == U);
  CHECK(parse_normalization("symmetric") == S);
  CHECK_THROWS_AS(parse_variant("rgb+xyz"), Error);
}

TEST_CASE("property: location channels are content-independent, bounded, and symmetric") {
  for (std::size_t H = 1; H <= 9; ++H) {
    for (std::size_t W = 1; W <= 9; ++W) {
      for (auto norm : {U, S}) {
        const double lo = norm == U ? 0.0 : -1.0;
        for (auto v : {Variant::rgb_dist_coord, Variant::rgb_lin}) {
          const Tensor loc = location_channels(H, W, {v, norm});
          for (double x : loc.values()) {
            CHECK(x >= lo);
            CHECK(x <= 1.0);
          }
          Tensor a({1, 3, H, W}, 0.1), b({1, 3, H, W}, 0.9);
          const AugmentSpec spec{v, norm};
          CHECK(slice_channels(augment_image(a, spec), 3, spec.extra_channels()) ==
                slice_channels(augment_image(b, spec), 3, spec.extra_channels()));
        }
        const Tensor c = make_coord_channels(H, W, norm);
        const Tensor d = make_distance_channel(H, W, norm);
        for (std::size_t h = 0; h < H; ++h) {
          for (std::size_t w = 0; w < W; ++w) {
            CHECK(c.at(0, 0, h, w) == c.at(0, 0, h, 0));
            CHECK(c.at(0, 1, h, w) == c.at(0, 1, 0, w));
            CHECK(d.at(0, 0, h, w) == doctest::Approx(d.at(0, 0, H - 1 - h, w)).epsilon(1e-14));
            CHECK(d.at(0, 0, h, w) == doctest::Approx(d.at(0, 0, h, W - 1 - w)).epsilon(1e-14));
          }
        }
        if (H % 2 == 1 && W % 2 == 1) CHECK(d.at(0, 0, H / 2, W / 2) == lo);
      }
    }
  }
}
