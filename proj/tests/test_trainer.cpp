#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "locaug/bytes.hpp"
#include "locaug/error.hpp"
#include "locaug/hash.hpp"
#include "locaug/trainer.hpp"

using namespace locaug;

namespace {

Dataset small_circles(std::size_t count, std::size_t size = 16) {
  CircleTaskConfig c;
  c.height = c.width = size;
  c.radius = size / 4;
  c.center_row = c.center_col = size / 2;
  c.count = count;
  return gen_circle_dataset(c);
}

TrainConfig small_config(Variant v = Variant::rgb_coord) {
  TrainConfig cfg;
  cfg.net.depth = 1;
  cfg.net.widths = {4};
  cfg.net.spec.variant = v;
  cfg.optim.lr = 1e-2;
  cfg.epochs = 3;
  return cfg;
}

}  // namespace

TEST_CASE("training loss decreases") {
  TrainConfig cfg = small_config();
  cfg.epochs = 8;
  const TrainResult r = train(cfg, small_circles(16));
  REQUIRE(r.history.size() == 8);
  CHECK(r.history.back().loss < r.history.front().loss);
  CHECK_FALSE(r.best_epoch.has_value());
  CHECK(r.optim.step == 8 * 8);
}

TEST_CASE("same config and seed give the same model bytes") {
  const Dataset d = small_circles(8);
  const TrainConfig cfg = small_config();
  const auto a = train(cfg, d).net.save();
  const auto b = train(cfg, d).net.save();
  CHECK(git_blob_hash(a) == git_blob_hash(b));
  TrainConfig other = cfg;
  other.net.seed = 1;
  CHECK(git_blob_hash(train(other, d).net.save()) != git_blob_hash(a));
}

TEST_CASE("divergence aborts and names the step") {
  TrainConfig cfg = small_config();
  cfg.epochs = 5;
  for (auto optim : {OptimConfig::sgd_defaults(1e300), OptimConfig::adam_defaults()}) {
    optim.lr = 1e300;
    cfg.optim = optim;
    try {
      train(cfg, small_circles(8));
      FAIL("expected divergence");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::divergence);
      CHECK(std::string(e.what()).find("epoch 1 step") != std::string::npos);
    }
  }

  Dataset poisoned = small_circles(4);
  poisoned[2].image[5] = std::nan("");
  try {
    train(small_config(), poisoned);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::divergence);
    CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
  }
}

TEST_CASE("argument errors") {
  const TrainConfig cfg = small_config();
  CHECK_THROWS_AS(train(cfg, Dataset{}), Error);
  TrainConfig zero = cfg;
  zero.batch = 0;
  CHECK_THROWS_AS(train(zero, small_circles(2)), Error);
  TrainConfig stop = cfg;
  stop.stop_at = 0.9;
  CHECK_THROWS_AS(train(stop, small_circles(2)), Error);
  CHECK_THROWS_AS(parse_fit_mode("crop"), Error);
  CHECK_THROWS_AS(parse_selection_metric("accuracy"), Error);
  CHECK(parse_selection_metric("fg_iou") == SelectionMetric::foreground_iou);
}

TEST_CASE("indivisible inputs: reject or pad") {
  CircleTaskConfig c;
  c.height = 18;
  c.width = 14;
  c.radius = 3;
  c.center_row = 9;
  c.center_col = 7;
  c.count = 4;
  const Dataset odd = gen_circle_dataset(c);
  TrainConfig cfg = small_config();
  cfg.net.depth = 2;
  cfg.net.widths = {4, 4};
  cfg.epochs = 1;
  CHECK_THROWS_AS(train(cfg, odd), Error);
  cfg.fit = FitMode::pad;
  const TrainResult r = train(cfg, odd, &odd);
  const Tensor p = predict(r.net, odd[0].image, FitMode::pad);
  CHECK(p.shape() == Shape{1, 1, 18, 14});
  CHECK_THROWS_AS(predict(r.net, odd[0].image, FitMode::reject), Error);
  CHECK(r.history[0].metric.has_value());
}

TEST_CASE("validation, early stopping and checkpoints") {
  const auto dir = std::filesystem::temp_directory_path() / "locaug_test_ckpt";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "c.lckp").string();
  const Dataset d = small_circles(8);
  TrainConfig cfg = small_config();
  cfg.checkpoint_path = path;
  cfg.selection = SelectionMetric::foreground_iou;
  cfg.threshold = Threshold::fixed(0.5);
  cfg.stop_at = -1.0;
  cfg.epochs = 5;
  std::size_t callbacks = 0;
  const TrainResult r = train(cfg, d, &d, [&](const EpochRecord&) { ++callbacks; });
  CHECK(r.history.size() == 1);
  CHECK(r.stopped_early);
  CHECK(callbacks == 1);
  REQUIRE(r.best_epoch.has_value());
  CHECK(*r.best_epoch == 1);

  const Checkpoint ck = read_checkpoint(bytes::read_file(path));
  CHECK(ck.epoch == 1);
  CHECK(ck.optim == r.optim);
  CHECK(ck.net.save() == r.net.save());
  for (std::size_t i = 0; i < ck.net.layers().size(); ++i) CHECK(ck.net.layers()[i].weights == r.net.layers()[i].weights);

  auto bytes = write_checkpoint({3, r.net, r.optim});
  bytes.push_back(0);
  CHECK_THROWS_AS(read_checkpoint(bytes), Error);
  bytes[0] = 'X';
  CHECK_THROWS_AS(read_checkpoint(bytes), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("evaluate_model checks the task against the head") {
  const Dataset d = small_circles(2);
  const TrainResult r = train(small_config(), d);
  CHECK_THROWS_AS(evaluate_model(r.net, d, Task::multiclass(3)), Error);
  const MetricReport rep = evaluate_model(r.net, d, Task::saliency());
  CHECK(rep.images == 2);
  CHECK(time_inference(r.net, d, 2) > 0.0);
}

TEST_CASE("multiclass training runs") {
  Dataset d = small_circles(4);
  for (Sample& s : d) {
    for (double& v : s.mask.values()) v = v > 0.5 ? 2.0 : 0.0;
    s.mask[0] = 255.0;
  }
  TrainConfig cfg = small_config();
  cfg.task = Task::multiclass(3);
  cfg.selection = SelectionMetric::mean_iou;
  cfg.epochs = 2;
  const TrainResult r = train(cfg, d, &d);
  CHECK(r.net.config().out_channels == 3);
  CHECK(r.history.size() == 2);
}

TEST_CASE("epoch order is a seeded permutation") {
  const auto a = epoch_order(20, 7, 1);
  CHECK(a == epoch_order(20, 7, 1));
  CHECK(a != epoch_order(20, 7, 2));
  CHECK(a != epoch_order(20, 8, 1));
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 20; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("bench: one variant and one seed reduce to one eval row") {
  const Dataset d = small_circles(4);
  BenchConfig cfg;
  cfg.base = small_config();
  cfg.base.epochs = 2;
  cfg.variants = {Variant::rgb_coord};
  cfg.timing_trials = 1;
  const BenchTable t = bench_variants(cfg, d, d);
  REQUIRE(t.rows.size() == 1);
  const BenchRow& row = t.row(Variant::rgb_coord);
  CHECK(row.per_seed.size() == 1);
  CHECK(row.mean == row.min);
  CHECK(row.max == row.min);
  TrainConfig same = cfg.base;
  same.net.spec.variant = Variant::rgb_coord;
  const TrainResult r = train(same, d);
  CHECK(row.mean == evaluate_model(r.net, d, Task::saliency(), same.threshold).f_beta);
  CHECK_THROWS_AS(t.row(Variant::rgb), Error);
  CHECK(t.text().find("rgb+coord") != std::string::npos);
}

TEST_CASE("bench: rows follow table order and parameter counts differ by k*9*w0") {
  const Dataset d = small_circles(2);
  BenchConfig cfg;
  cfg.base = small_config();
  cfg.base.epochs = 1;
  cfg.seeds = {0, 1};
  cfg.timing_trials = 1;
  const BenchTable t = bench_variants(cfg, d, d);
  REQUIRE(t.rows.size() == 4);
  CHECK(t.rows[0].variant == Variant::rgb);
  CHECK(t.rows[3].variant == Variant::rgb_dist_coord);
  CHECK(t.row(Variant::rgb).in_channels == 3);
  CHECK(t.row(Variant::rgb_dist_coord).in_channels == 6);
  const std::size_t w0 = 4;
  CHECK(t.row(Variant::rgb_dist_coord).param_count - t.row(Variant::rgb).param_count == 3 * 9 * w0);
  CHECK(t.row(Variant::rgb_dist).param_count - t.row(Variant::rgb).param_count == 9 * w0);
  for (const BenchRow& r : t.rows) {
    CHECK(r.per_seed.size() == 2);
    CHECK(r.min <= r.mean);
    CHECK(r.mean <= r.max);
    CHECK(r.seconds_per_image > 0.0);
  }
  BenchConfig none = cfg;
  none.seeds.clear();
  CHECK_THROWS_AS(bench_variants(none, d, d), Error);
}
